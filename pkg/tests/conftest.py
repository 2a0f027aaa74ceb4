import functools

import pytest

from spectral_gasket.gasket import build_length_graph


@functools.lru_cache(maxsize=None)
def _graph(geometry, level, refinement=12):
    return build_length_graph(geometry, level, refinement)


@pytest.fixture(scope="session")
def graph():
    """Memoized ``build_length_graph``; graphs are immutable so sharing is safe."""
    return _graph

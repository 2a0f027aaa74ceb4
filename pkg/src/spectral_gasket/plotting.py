"""SVG figures: gasket drawings, dimension diagnostics and counting functions.

Figures are built on bare :class:`~matplotlib.figure.Figure` objects (no
pyplot state) and written with a fixed hash salt and no date stamp so the
same inputs give byte-identical SVG.
"""
from __future__ import annotations

import io
import math

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .gasket import EUCLIDEAN, EdgeId, format_word, words  # noqa: E402
from .geodesics import GeodesicPath, edge_polyline  # noqa: E402

SVG_RC = {"svg.hashsalt": "spectral-gasket", "svg.fonttype": "none", "path.simplify": False}
CELL_COLOR = "#4c72b0"
PATH_COLOR = "#c44e52"


def figure_to_svg(fig: Figure) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _cell_outline(geometry: str, w, refinement: int) -> np.ndarray:
    # walk the boundary 1 -> 2 -> 3 -> 1: bottom forwards, right forwards, left backwards
    b = edge_polyline(geometry, EdgeId(w, "b"), refinement).points
    r = edge_polyline(geometry, EdgeId(w, "r"), refinement).points
    left = edge_polyline(geometry, EdgeId(w, "l"), refinement).points[::-1]
    return np.vstack([b[:-1], r[:-1], left[:-1]])


def _edge_points(geometry: str, e: EdgeId, refinement: int, start_at_first: bool) -> np.ndarray:
    pts = edge_polyline(geometry, e, refinement).points
    return pts if start_at_first else pts[::-1]


def gasket_figure(
    geometry: str,
    level: int,
    overlay: GeodesicPath | None = None,
    refinement: int = 4,
) -> Figure:
    """Level-``level`` cells as closed outlines, with an optional highlighted geodesic."""
    fig = Figure(figsize=(6, 5.4))
    ax = fig.add_subplot()
    k = 0 if geometry == EUCLIDEAN else refinement
    for w in words(level):
        poly = Polygon(
            _cell_outline(geometry, w, k),
            closed=True,
            facecolor=CELL_COLOR,
            edgecolor="black",
            linewidth=0.4,
            alpha=0.85,
        )
        poly.set_gid(f"cell-{format_word(w)}")
        ax.add_patch(poly)
    if overlay is not None:
        pieces = []
        for e, v in zip(overlay.edges, overlay.vertices[1:]):
            a, _ = e.endpoints()
            pieces.append(_edge_points(geometry, e, k, start_at_first=(a != v)))
        pts = np.vstack(pieces)
        (line,) = ax.plot(pts[:, 0], pts[:, 1], color=PATH_COLOR, linewidth=2.2)
        line.set_gid("geodesic")
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.set_axis_off()
    ax.set_title(f"{geometry} gasket, level {level}")
    return fig


def render_svg(geometry: str, level: int, overlay: GeodesicPath | None = None, refinement: int = 4) -> str:
    return figure_to_svg(gasket_figure(geometry, level, overlay, refinement=refinement))


def dimension_figure(estimate: float, diagnostics, reference: float | None = None, label: str = "") -> Figure:
    """Per-step critical exponents with the averaged estimate."""
    fig = Figure(figsize=(5.5, 3.6))
    ax = fig.add_subplot()
    steps = sorted(diagnostics.step_roots)
    roots = [diagnostics.step_roots[m] for m in steps]
    ax.plot(steps, roots, "o-", color=CELL_COLOR, label="per-step root")
    ax.axhline(estimate, color="black", linestyle="--", linewidth=1, label=f"estimate {estimate:.5f}")
    if reference is not None and math.isfinite(reference):
        ax.axhline(reference, color=PATH_COLOR, linestyle=":", linewidth=1, label=f"reference {reference:.4g}")
    ax.set_xlabel("level step m -> m+1")
    ax.set_ylabel("critical exponent")
    if label:
        ax.set_title(label)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def counting_figure(cutoffs: np.ndarray, counts: np.ndarray, label: str = "") -> Figure:
    fig = Figure(figsize=(5.5, 3.6))
    ax = fig.add_subplot()
    ax.step(cutoffs, counts, where="post", color=CELL_COLOR)
    ax.set_xlabel("cutoff")
    ax.set_ylabel("eigenvalues with |lambda| <= cutoff")
    if label:
        ax.set_title(label)
    fig.tight_layout()
    return fig


"""Run configuration and the on-disk cache of edge lengths."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from filelock import FileLock

from . import __version__
from .gasket import (
    GEOMETRIES,
    HARMONIC,
    MAX_GRAPH_LEVEL,
    SIDE_RANK,
    EdgeId,
    LengthGraph,
    build_length_graph,
    edges,
    format_word,
    word_index,
)
from .geodesics import DEFAULT_REFINEMENT, MAX_REFINEMENT, harmonic_side_lengths
from .spectra import KINDS

# Bump the suffix whenever edge lengths are computed differently.
CACHE_VERSION = f"{__version__}+chords1"
FORMATS = ("json", "csv", "svg")
MAX_SPECDIM_LEVEL = 12


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: str = "euclidean"
    level: int = 2
    refine: int = DEFAULT_REFINEMENT
    cutoff: float = 10.0
    kind: str = "edge"
    format: str = "json"
    cache_dir: str | None = None
    seed: int = 0
    levels: tuple[int, int] = (1, 8)

    def validate(self) -> "RunConfig":
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry must be one of {GEOMETRIES}")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not 0 <= self.level:
            raise ConfigError("level must be non-negative")
        if not 0 <= self.refine <= MAX_REFINEMENT:
            raise ConfigError(f"refine must lie in [0, {MAX_REFINEMENT}]")
        if not self.cutoff > 0:
            raise ConfigError("cutoff must be positive")
        a, b = self.levels
        if a < 0 or b - a < 2:
            raise ConfigError("levels need a..b with at least three levels")
        if b > MAX_SPECDIM_LEVEL:
            raise ConfigError(f"levels may not exceed {MAX_SPECDIM_LEVEL}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "levels" in d:
            d["levels"] = tuple(d["levels"])
        return cls(**d).validate()

    def dump(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def parse_levels(text: str) -> tuple[int, int]:
    """``"1..10" -> (1, 10)``."""
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad level range {text!r}; expected a..b") from None


def default_cache_dir() -> Path | None:
    env = os.environ.get("CACHE_DIR")
    return Path(env) if env else None


@dataclass(frozen=True)
class LengthCacheEntry:
    geometry: str
    edge: EdgeId
    refinement: int
    length: float
    version: str = CACHE_VERSION

    @property
    def key(self) -> str:
        return f"{format_word(self.edge.cell)}/{self.edge.side}/{self.refinement}"


class LengthCache:
    """One JSON document per ``(geometry, level)`` holding ``word/side/k -> length``.

    Writers serialize through a lock file next to the document; a document
    written by another version is ignored and overwritten.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def path(self, geometry: str, level: int) -> Path:
        return self.root / f"{geometry}-level{level}.json"

    def _read(self, geometry: str, level: int) -> dict:
        p = self.path(geometry, level)
        if not p.exists():
            return {}
        doc = json.loads(p.read_text())
        if doc.get("version") != CACHE_VERSION:
            return {}
        return doc.get("entries", {})

    def get(self, geometry: str, edge: EdgeId, refinement: int) -> float | None:
        key = LengthCacheEntry(geometry, edge, refinement, 0.0).key
        return self._read(geometry, edge.level).get(key)

    def load_level(self, geometry: str, level: int, refinement: int) -> dict[EdgeId, float] | None:
        entries = self._read(geometry, level)
        out = {}
        for e in edges(level):
            key = f"{format_word(e.cell)}/{e.side}/{refinement}"
            if key not in entries:
                return None
            out[e] = entries[key]
        return out

    def store(self, entries: list[LengthCacheEntry]) -> None:
        by_doc: dict[tuple[str, int], list[LengthCacheEntry]] = {}
        for ent in entries:
            by_doc.setdefault((ent.geometry, ent.edge.level), []).append(ent)
        self.root.mkdir(parents=True, exist_ok=True)
        for (geometry, level), ents in by_doc.items():
            p = self.path(geometry, level)
            with FileLock(str(p) + ".lock"):
                current = self._read(geometry, level)
                current.update({e.key: e.length for e in ents})
                doc = {"version": CACHE_VERSION, "geometry": geometry, "level": level, "entries": current}
                tmp = p.with_suffix(".tmp")
                tmp.write_text(json.dumps(doc, sort_keys=True))
                os.replace(tmp, p)


def computed_lengths(geometry: str, level: int, refinement: int) -> dict[EdgeId, float]:
    if geometry == HARMONIC:
        table = harmonic_side_lengths(level, refinement)[level]
        return {e: float(table[word_index(e.cell), SIDE_RANK[e.side]]) for e in edges(level)}
    return {e: 0.5**level for e in edges(level)}


def cached_graph(geometry: str, level: int, refinement: int, cache: LengthCache | None) -> LengthGraph:
    """Build a graph, reading harmonic lengths from ``cache`` when present and filling it otherwise."""
    if level > MAX_GRAPH_LEVEL:
        return build_length_graph(geometry, level, refinement)  # raises BudgetExceeded
    if cache is None:
        return build_length_graph(geometry, level, refinement)
    lengths = cache.load_level(geometry, level, refinement)
    if lengths is None:
        lengths = computed_lengths(geometry, level, refinement)
        cache.store([LengthCacheEntry(geometry, e, refinement, v) for e, v in lengths.items()])
    return build_length_graph(geometry, level, refinement, lengths=lengths)


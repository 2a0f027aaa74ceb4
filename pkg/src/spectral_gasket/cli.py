"""Command-line interface: ``spectral-gasket <command> [options]``.

Every command prints one document (JSON by default, CSV with ``--format csv``)
to stdout or to ``--output``.  ``render`` and ``--format svg`` produce SVG;
``--figure PATH`` writes the matching SVG figure next to a JSON/CSV report.

Exit codes: 0 ok, 2 usage or invalid input, 3 budget exceeded, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    CACHE_VERSION,
    FORMATS,
    ConfigError,
    LengthCache,
    RunConfig,
    cached_graph,
    default_cache_dir,
    parse_levels,
)
from .gasket import (
    EUCLIDEAN,
    GEOMETRIES,
    HARMONIC,
    LETTERS,
    BudgetExceeded,
    VertexId,
    format_word,
    parse_vertex,
    parse_word,
)
from .spectra import KINDS

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_VALIDATION = 0, 2, 3, 4

# Highest level at which harmonic lengths are computed for a dimension estimate.
MAX_HARMONIC_SPECDIM_LEVEL = 10
HARMONIC_REFERENCE_DIMENSION = 1.3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- serialization -----------------------------------------------------------------


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in _clean(list(r))])
    return buf.getvalue()


class Report:
    """A command result: JSON document, CSV table and an optional figure factory."""

    def __init__(self, doc: dict, header: list[str] | None = None, rows=None, figure=None):
        self.doc = doc
        self.header = header
        self.rows = rows or []
        self.figure = figure

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return to_json(self.doc)
        if fmt == "csv":
            if self.header is None:
                raise UsageError(f"{self.doc['command']} has no CSV form")
            return to_csv(self.header, self.rows)
        if self.figure is None:
            raise UsageError(f"{self.doc['command']} has no SVG form")
        from .plotting import figure_to_svg

        return figure_to_svg(self.figure())


# -- commands ----------------------------------------------------------------------


def _cache(cfg: RunConfig) -> LengthCache | None:
    root = cfg.cache_dir or default_cache_dir()
    return LengthCache(root) if root else None


def _graph(cfg: RunConfig):
    return cached_graph(cfg.geometry, cfg.level, cfg.refine, _cache(cfg))


def _vertex(text: str | None, default: VertexId) -> VertexId:
    if text is None:
        return default
    try:
        return parse_vertex(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _in_graph(g, v: VertexId) -> VertexId:
    try:
        return g.resolve(v)
    except KeyError:
        raise UsageError(f"vertex {v} is not in the level-{g.level} graph") from None


def _refinement(cfg: RunConfig):
    return cfg.refine if cfg.geometry == HARMONIC else None


def cmd_build(cfg: RunConfig, args) -> Report:
    g = _graph(cfg)
    lengths = g.lengths
    chords = []
    rows = []
    for e, length, (u, v) in g.edges:
        chord = float(np.hypot(*np.subtract(g.vertices[u], g.vertices[v])))
        chords.append(chord)
        rows.append((str(e), str(u), str(v), length, chord))
    ratio = lengths / np.array(chords)
    doc = {
        "command": "build",
        "geometry": cfg.geometry,
        "level": cfg.level,
        "refinement": _refinement(cfg),
        "vertices": len(g.vertices),
        "edges": len(g.edges),
        "min_length": float(lengths.min()),
        "max_length": float(lengths.max()),
        "total_length": float(lengths.sum()),
        "min_length_to_chord": float(ratio.min()),
        "max_length_to_chord": float(ratio.max()),
        "version": CACHE_VERSION,
    }

    def figure():
        from .plotting import gasket_figure

        return gasket_figure(cfg.geometry, cfg.level)

    return Report(doc, ["edge", "start", "end", "length", "chord"], rows, figure)


def _sequence(cfg: RunConfig, max_level: int):
    from .spectra import LengthSequence

    return LengthSequence(cfg.geometry, cfg.kind, max_level=max_level, refinement=cfg.refine)


def _source_label(src) -> str:
    from .spectra import CellId

    if isinstance(src, tuple) and len(src) == 2 and isinstance(src[0], str):
        return f"{src[0]}:{_source_label(src[1])}"
    if isinstance(src, CellId):
        return f"cell {format_word(src.cell)}"
    return str(src)


def cmd_spectrum(cfg: RunConfig, args) -> Report:
    from .spectra import counting_function, eigenvalues, zeta_partial

    seq = _sequence(cfg, cfg.level)
    spectrum = eigenvalues(seq, cfg.cutoff)
    vals = spectrum.values
    alpha = seq.all_lengths()
    zetas = {str(p): zeta_partial(spectrum, p).value for p in (1.0, 1.5, 2.0)}
    doc = {
        "command": "spectrum",
        "geometry": cfg.geometry,
        "kind": cfg.kind,
        "max_level": cfg.level,
        "refinement": _refinement(cfg),
        "cutoff": cfg.cutoff,
        "sources": int(alpha.size),
        "count": len(spectrum),
        "counting_function": counting_function(seq, cfg.cutoff),
        "min_abs_eigenvalue": float(np.min(np.abs(vals))) if vals.size else None,
        "gap_bound": math.pi / (2 * float(alpha.max())),
        "symmetric": bool(np.array_equal(np.sort(vals), -np.sort(vals)[::-1])),
        "zeta_partial": zetas,
    }
    rows = [(_source_label(s), k, lam) for s, k, lam in spectrum.tagged()]

    def figure():
        from .plotting import counting_figure

        cut = np.linspace(0.0, cfg.cutoff, 201)[1:]
        counts = np.array([counting_function(alpha, c) for c in cut])
        return counting_figure(cut, counts, f"{cfg.geometry} {cfg.kind} triple, levels 0..{cfg.level}")

    return Report(doc, ["source", "k", "eigenvalue"], rows, figure)


def cmd_specdim(cfg: RunConfig, args) -> Report:
    from .spectra import spectral_dimension

    a, b = cfg.levels
    if cfg.geometry == HARMONIC and b > MAX_HARMONIC_SPECDIM_LEVEL:
        raise BudgetExceeded(f"harmonic dimension estimates are limited to level {MAX_HARMONIC_SPECDIM_LEVEL}")
    seq = _sequence(cfg, b)
    estimate, diag = spectral_dimension(seq, (a, b))
    if cfg.geometry == EUCLIDEAN:
        reference, note = math.log(3) / math.log(2), "log 3 / log 2"
    else:
        reference, note = HARMONIC_REFERENCE_DIMENSION, "approximate value quoted in the literature; not asserted"
    partition = {}
    for m in range(a, b + 1):
        lengths = seq.level_lengths(m)
        partition[str(m)] = {"sources": int(lengths.size), "sum_alpha": float(lengths.sum())}
    doc = {
        "command": "specdim",
        "geometry": cfg.geometry,
        "kind": cfg.kind,
        "levels": [a, b],
        "refinement": _refinement(cfg),
        "estimate": estimate,
        "reference": reference,
        "reference_note": note,
        "difference": estimate - reference,
        "diagnostics": diag.as_dict(),
        "levels_data": partition,
    }
    rows = [(m, diag.step_roots[m], m in diag.averaged_steps) for m in sorted(diag.step_roots)]

    def figure():
        from .plotting import dimension_figure

        return dimension_figure(estimate, diag, reference, f"{cfg.geometry} {cfg.kind} triple")

    return Report(doc, ["step", "root", "averaged"], rows, figure)


def _endpoints(cfg: RunConfig, args):
    p = _vertex(args.source, VertexId((), 1))
    q = _vertex(args.target, VertexId((), 2))
    return p, q


def cmd_geodesic(cfg: RunConfig, args) -> Report:
    from .geodesics import geodesic_distance, geodesic_path

    g = _graph(cfg)
    p, q = (_in_graph(g, v) for v in _endpoints(cfg, args))
    path = geodesic_path(p, q, g)
    doc = {
        "command": "geodesic",
        "geometry": cfg.geometry,
        "level": cfg.level,
        "refinement": _refinement(cfg),
        "from": str(p),
        "to": str(q),
        "distance": geodesic_distance(p, q, g),
        "path_length": path.length,
        "path": [str(e) for e in path.edges],
        "vertices": [str(v) for v in path.vertices],
    }
    rows = [(i, str(e), str(v), g.edge_length(e)) for i, (e, v) in enumerate(zip(path.edges, path.vertices[1:]))]

    def figure():
        from .plotting import gasket_figure

        return gasket_figure(cfg.geometry, cfg.level, path)

    return Report(doc, ["step", "edge", "reaches", "length"], rows, figure)


def cmd_connes(cfg: RunConfig, args) -> Report:
    from .connes import LP_ORACLE_MAX_VERTICES, connes_distance, connes_distance_lp
    from .geodesics import geodesic_distance

    g = _graph(cfg)
    p, q = (_in_graph(g, v) for v in _endpoints(cfg, args))
    if p == q:
        raise UsageError("--from and --to name the same vertex")
    c = connes_distance(p, q, g)
    d = geodesic_distance(p, q, g)
    oracle = connes_distance_lp(p, q, g) if len(g.vertices) <= LP_ORACLE_MAX_VERTICES else None
    doc = {
        "command": "connes",
        "geometry": cfg.geometry,
        "level": cfg.level,
        "refinement": _refinement(cfg),
        "from": str(p),
        "to": str(q),
        "connes": c,
        "geodesic": d,
        "difference": c - d,
        "lp_oracle": oracle,
    }
    return Report(doc, ["from", "to", "connes", "geodesic", "difference", "lp_oracle"], [(str(p), str(q), c, d, c - d, oracle)])


def cmd_kusuoka(cfg: RunConfig, args) -> Report:
    from .harmonic import kusuoka_measure, kusuoka_state

    try:
        w = parse_word(args.word)
        st = kusuoka_state(w)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {
        "command": "kusuoka",
        "word": format_word(w),
        "J": st.J,
        "Z": st.Z,
        "Z_eigenvalues": np.linalg.eigvalsh(st.Z) if st.Z is not None else None,
        "nu": st.nu,
    }
    rows = [(format_word(w), st.nu)]
    if args.check_additivity:
        children = {format_word(w + (i,)): kusuoka_measure(w + (i,)) for i in LETTERS}
        residual = abs(st.nu - sum(children.values()))
        doc["children"] = children
        doc["additivity_residual"] = residual
        rows += list(children.items())
    return Report(doc, ["word", "nu"], rows)


def cmd_render(cfg: RunConfig, args) -> Report:
    from .plotting import gasket_figure

    overlay = None
    if args.source is not None or args.target is not None:
        from .geodesics import geodesic_path

        g = _graph(cfg)
        p, q = (_in_graph(g, v) for v in _endpoints(cfg, args))
        overlay = geodesic_path(p, q, g)
    doc = {"command": "render", "geometry": cfg.geometry, "level": cfg.level}
    return Report(doc, figure=lambda: gasket_figure(cfg.geometry, cfg.level, overlay))


def cmd_validate(cfg: RunConfig, args) -> Report:
    from .checks import run_checks

    results = run_checks(cfg.level, cfg.seed, cfg.refine)
    doc = {
        "command": "validate",
        "level": cfg.level,
        "seed": cfg.seed,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    rows = [(r.name, r.value, r.threshold, r.passed) for r in results]
    return Report(doc, ["check", "value", "threshold", "passed"], rows)


COMMANDS = {
    "build": cmd_build,
    "spectrum": cmd_spectrum,
    "specdim": cmd_specdim,
    "geodesic": cmd_geodesic,
    "connes": cmd_connes,
    "kusuoka": cmd_kusuoka,
    "render": cmd_render,
    "validate": cmd_validate,
}


# -- argument handling -------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration; flags override its values")
    common.add_argument("--geometry", choices=GEOMETRIES)
    common.add_argument("--level", type=int)
    common.add_argument("--refine", type=int, help="extra levels used to approximate harmonic edges")
    common.add_argument("--cutoff", type=float, help="eigenvalue cutoff")
    common.add_argument("--kind", choices=KINDS)
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--cache-dir", help="length cache directory (default: $CACHE_DIR)")
    common.add_argument("--seed", type=int)
    common.add_argument("--levels", help="level range a..b for dimension estimates")
    common.add_argument("--from", dest="source", help="vertex as word:corner, e.g. 12:3 or 0:1")
    common.add_argument("--to", dest="target", help="vertex as word:corner")
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--figure", help="also write the command's SVG figure to this path")

    parser = _Parser(prog="spectral-gasket", description="Spectral triples on the Sierpinski gasket.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "kusuoka":
            sp.add_argument("--word", default="1", help="cell word, e.g. 123")
            sp.add_argument("--check-additivity", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else RunConfig()
    d = base.to_dict()
    for key in ("geometry", "level", "refine", "cutoff", "kind", "format", "cache_dir", "seed"):
        val = getattr(args, key)
        if val is not None:
            d[key] = val
    if args.levels is not None:
        d["levels"] = parse_levels(args.levels)
    if args.command == "render" and args.format is None:
        d["format"] = "svg"
    return RunConfig.from_dict(d)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    try:
        args = make_parser().parse_args(argv)
        cfg = resolve_config(args)
        if args.command == "render" and cfg.format != "svg":
            raise UsageError("render only produces SVG")
        report = COMMANDS[args.command](cfg, args)
        _emit(report.render(cfg.format), args.output)
        if args.figure:
            if report.figure is None:
                raise UsageError(f"{args.command} has no figure")
            _emit(report.render("svg"), args.figure)
    except (UsageError, ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"spectral-gasket: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"spectral-gasket: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if args.command == "validate" and not report.doc["passed"]:
        failed = [c["name"] for c in report.doc["checks"] if not c["passed"]]
        print(f"spectral-gasket: failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

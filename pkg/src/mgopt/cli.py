"""Command-line interface.

Every command prints one result in the format chosen by ``--format``:
``table`` (12 significant digits), ``csv`` (shortest round-trip decimals)
or ``json`` (one document ``{command, version, seed, result}``).

Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid input,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence

from . import __version__
from .errors import ComputeError, ParseError, ValidationError
from .generators import GENERATORS
from .graph import MetricGraphModel, rho_diameter, total_length
from .io import format_point, jsonable, load_graph, load_measure, parse_point
from .optimize import cheeger_constant, lambda1_min, partition_l2
from .resistance import resistance, resistance_diameter
from .search import MAX_ITERS, lambda_k_min_search, weyl_scan
from .spectral import spectrum

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_COMPUTE = 4

EXAMPLES = ("path", "cycle", "star", "complete", "pumpkin", "butterfly", "pumpkin-chain")


class Result:
    """Scalar fields plus an optional table of rows."""

    def __init__(self, fields: dict, rows: list[dict] | None = None):
        self.fields = fields
        self.rows = rows


# ---------------------------------------------------------------------------
# rendering


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _csv_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return " ".join(_csv_cell(v) for v in x)
    return str(x)


def render(command: str, res: Result, fmt: str, seed: int) -> str:
    if fmt == "json":
        doc = {"command": command, "version": __version__, "seed": seed, "result": dict(res.fields)}
        if res.rows is not None:
            doc["result"]["rows"] = res.rows
        return json.dumps(jsonable(doc), indent=2) + "\n"
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        if res.rows is not None:
            cols = list(res.rows[0]) if res.rows else []
            w.writerow(cols)
            for r in res.rows:
                w.writerow([_csv_cell(r[c]) for c in cols])
        else:
            w.writerow(["field", "value"])
            for k, v in res.fields.items():
                w.writerow([k, _csv_cell(v)])
        return buf.getvalue()
    width = max((len(k) for k in res.fields), default=0)
    for k, v in res.fields.items():
        buf.write(f"{k:<{width}}  {_fmt(v)}\n")
    if res.rows:
        cols = list(res.rows[0])
        cells = [[_fmt(r[c]) for c in cols] for r in res.rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        if res.fields:
            buf.write("\n")
        buf.write("  ".join(c.rjust(wd) for c, wd in zip(cols, widths)) + "\n")
        for row in cells:
            buf.write("  ".join(c.rjust(wd) for c, wd in zip(row, widths)) + "\n")
    return buf.getvalue()


def _atom_rows(model: MetricGraphModel, mu) -> list[dict]:
    return [{"point": format_point(model, p), "mass": float(m)} for p, m in mu.atoms()]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> Result:
    g = load_graph(args.graph)
    degs = [len(g.incident[v]) for v in g.vertices]
    return Result(
        {
            "valid": True,
            "vertices": g.n_vertices,
            "edges": g.n_edges,
            "total_length": total_length(g),
            "max_degree": max(degs),
            "tree": g.n_edges == g.n_vertices - 1,
        }
    )


def cmd_resistance(args) -> Result:
    g = load_graph(args.graph)
    x, y = parse_point(args.x, g), parse_point(args.y, g)
    return Result({"x": format_point(g, x), "y": format_point(g, y), "r": resistance(g, x, y)})


def cmd_diam_r(args) -> Result:
    g = load_graph(args.graph)
    d, x, y = resistance_diameter(g)
    return Result({"diam_r": d, "x": format_point(g, x), "y": format_point(g, y)})


def cmd_lambda1min(args) -> Result:
    g = load_graph(args.graph)
    opt = lambda1_min(g)
    rho, _, _ = rho_diameter(g)
    return Result(
        {
            "lambda1_min": opt.value,
            "diam_r": opt.diameter,
            "diam_rho": rho,
            "x": format_point(g, opt.x),
            "y": format_point(g, opt.y),
        },
        _atom_rows(g, opt.measure),
    )


def cmd_spectrum(args) -> Result:
    g = load_graph(args.graph)
    mu, dirichlet = load_measure(args.measure, g)
    if args.dirichlet:
        dirichlet = [parse_point(p, g) for p in args.dirichlet]
    dec = spectrum(g, mu, dirichlet)
    rows = [{"k": k, "eigenvalue": float(lam)} for k, lam in enumerate(dec.eigenvalues)]
    return Result({"atoms": mu.n_atoms, "total_mass": mu.total_mass, "dirichlet": len(dec.dirichlet)}, rows)


def cmd_lambdakmin(args) -> Result:
    g = load_graph(args.graph)
    if args.k < 0:
        raise ValidationError("--k must be >= 0")
    res = lambda_k_min_search(
        g, args.k, restarts=args.restarts, seed=args.seed, max_iters=args.max_iters, threads=args.threads
    )
    return Result(
        {
            "k": res.k,
            "value": res.value,
            "lower": res.lower,
            "upper": res.upper,
            "converged": res.converged,
            "restarts": res.restarts,
            "extra_atom_improved": res.extra_atom_improved,
        },
        _atom_rows(g, res.measure),
    )


def cmd_cheeger(args) -> Result:
    g = load_graph(args.graph)
    h, witness = cheeger_constant(g)
    return Result({"h": h, "witness": witness})


def cmd_partition(args) -> Result:
    g = load_graph(args.graph)
    p = partition_l2(g)
    return Result(
        {
            "value": p.value,
            "lambda1_min": p.lambda1,
            "energies": list(p.energies),
            "lengths": [total_length(q) if q is not None else math.nan for q in p.pieces],
            "connected": list(p.connected),
            "cuts": [str(c) for c in p.cuts],
        }
    )


def cmd_weyl(args) -> Result:
    g = load_graph(args.graph)
    restarts = 3 if args.restarts is None else args.restarts
    table = weyl_scan(
        g,
        args.kmax,
        restarts=restarts,
        seed=args.seed,
        max_iters=args.max_iters,
        bounds_only=args.bounds_only,
        threads=args.threads,
    )
    rows = [
        {"k": r.k, "value": r.estimate, "lower": r.lower, "upper": r.upper, "ratio": r.ratio,
         "lower_ratio": r.lower_ratio, "upper_ratio": r.upper_ratio}
        for r in table.rows
    ]
    return Result({"total_length": total_length(g)}, rows)


def golden(name: str, n: int | None, L: float) -> dict:
    """Closed-form values for the example families (empty where none is known)."""
    if name == "path":
        return {"lambda1_min": 4 / L, "h": 1 / L, "diam_r": L}
    if name == "cycle" or (name == "complete" and n == 3):
        return {"lambda1_min": 16 / L, "h": 4 / L, "diam_r": L / 4}
    if name == "complete" and n == 2:
        return golden("path", None, L)
    if name == "star":
        out = {"lambda1_min": 2 * n / L, "h": n / L, "diam_r": 2 * L / n}
        if n == 1:
            out["lambda1_min"], out["diam_r"] = 4 / L, L
        if n == 2:
            out.update(golden("path", None, L))
        return out
    if name == "complete":
        return {"lambda1_min": 4 * n * n * (n - 1) / ((n + 2) * L), "h": n * (n - 1) / L, "diam_r": (n + 2) * L / (n * n * (n - 1))}
    if name == "pumpkin" and n >= 2:
        return {"lambda1_min": 8 * n / L, "h": 2 * n / L, "diam_r": L / (2 * n)}
    if name == "butterfly" and n >= 2:
        out = {"lambda1_min": 16 * (n - 1) / L, "diam_r": L / (4 * (n - 1)), "offset": (n - 2) * L / (4 * n * (n - 1))}
        out["h"] = 4 * n / L if n >= 3 else 4 / L
        return out
    return {}


def _example_model(args) -> MetricGraphModel:
    name = args.name
    if name == "pumpkin-chain":
        sizes = args.sizes or [2, 3]
        return GENERATORS[name](sizes, args.L)
    if name in ("path", "cycle"):
        n = args.n if args.n is not None else (1 if name == "path" else 2)
        return GENERATORS[name](args.L, n)
    if args.n is None:
        raise ValidationError(f"example {name} needs --n")
    return GENERATORS[name](args.n, args.L)


def cmd_example(args) -> Result:
    if not args.L > 0:
        raise ValidationError("--L must be > 0")
    g = _example_model(args)
    opt = lambda1_min(g)
    h, witness = cheeger_constant(g)
    fields = {
        "graph": args.name,
        "vertices": g.n_vertices,
        "edges": g.n_edges,
        "total_length": total_length(g),
        "lambda1_min": opt.value,
        "h": h,
        "diam_r": opt.diameter,
        "x": format_point(g, opt.x),
        "y": format_point(g, opt.y),
    }
    gold = golden(args.name, args.n, args.L)
    if "offset" in gold:
        fields["offset"] = min(p.offset for p in (g.canonical(opt.x), g.canonical(opt.y)))
    ok = True
    for key, want in gold.items():
        fields[f"expected_{key}"] = want
        ok &= abs(fields[key] - want) <= args.tol * max(abs(want), 1.0)
    if gold:
        fields["matches_closed_form"] = bool(ok)
    return Result(fields, [{"id": e.id, "u": e.u, "v": e.v, "length": e.length} for e in g.edges])


COMMANDS = {
    "validate": cmd_validate,
    "resistance": cmd_resistance,
    "diam-r": cmd_diam_r,
    "lambda1min": cmd_lambda1min,
    "spectrum": cmd_spectrum,
    "lambdakmin": cmd_lambdakmin,
    "cheeger": cmd_cheeger,
    "partition": cmd_partition,
    "weyl": cmd_weyl,
    "example": cmd_example,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=None, help="search restarts (default depends on k)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--max-iters", type=int, default=MAX_ITERS)

    parser = argparse.ArgumentParser(prog="mgopt", description="Optimal eigenvalues on metric graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    add("validate", "check a graph file").add_argument("graph")
    p = add("resistance", "effective resistance between two points")
    p.add_argument("graph")
    p.add_argument("x", help="edgeId:offset or v:vertexId")
    p.add_argument("y", help="edgeId:offset or v:vertexId")
    add("diam-r", "resistance diameter and a maximizing pair").add_argument("graph")
    add("lambda1min", "optimal first eigenvalue and minimizing measure").add_argument("graph")
    p = add("spectrum", "eigenvalues of a measure")
    p.add_argument("graph")
    p.add_argument("measure")
    p.add_argument("--dirichlet", nargs="+", metavar="POINT", help="Dirichlet points (override the file)")
    p = add("lambdakmin", "search for the k-th optimal eigenvalue")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    add("cheeger", "Cheeger-type constant").add_argument("graph")
    add("partition", "nodal two-partition from the optimal measure").add_argument("graph")
    p = add("weyl", "normalized estimates and bounds for k = 1..kmax")
    p.add_argument("graph")
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--bounds-only", action="store_true")
    p = add("example", "built-in graph family with closed-form values")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--sizes", type=int, nargs="+", default=None, help="pumpkin-chain sizes")
    p.add_argument("--tol", type=float, default=1e-8, help="relative tolerance for the closed-form check")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        res = COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ComputeError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    sys.stdout.write(render(args.command, res, args.format, args.seed))
    return 0


if __name__ == "__main__":
    sys.exit(main())

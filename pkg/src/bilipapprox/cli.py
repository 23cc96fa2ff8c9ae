"""Command-line front end: ``bilip <command> ...``.

Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a certification
fails (the failing witness is printed).  ``--json`` prints one JSON object
per line on standard output.  ``BILIP_GRID`` overrides the default grid step.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import curvefile
from .circle import ClosedPLCurve, approximate_closed, check_closed_bilip
from .curve import PLCurve
from .errors import BilipError
from .pipeline import approximate
from .shorten import shorten
from .testkit import GenSpec, generate
from .verify import check_bilip, default_grid_step

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _emit(args, record: dict, text: str) -> None:
    if args.json:
        print(json.dumps(curvefile.jsonable(record), sort_keys=True))
    else:
        print(text)


def _grid(args, domain_length: float) -> float:
    if getattr(args, "grid", None):
        return args.grid
    return default_grid_step(domain_length)


def _load(path: str, kind: str | None = None):
    curve, meta = curvefile.load(path)
    if kind == "open" and not isinstance(curve, PLCurve):
        raise UsageError(f"{path}: expected an open curve (use approx-closed for closed curves)")
    if kind == "closed" and not isinstance(curve, ClosedPLCurve):
        raise UsageError(f"{path}: expected a closed curve")
    return curve, meta


def _fail_text(rep, L, slack) -> str:
    w = rep.failing_witness(L, slack)
    return f"FAIL: measured constant {rep.bilip_constant!r} > L={L!r}; witness pair ({w[0]!r}, {w[1]!r})"


def cmd_verify(args) -> int:
    curve, _ = _load(args.input)
    if isinstance(curve, ClosedPLCurve):
        ok, rep = check_closed_bilip(curve, args.L, slack=args.slack)
    else:
        ok, rep = check_bilip(curve, args.L, _grid(args, curve.domain_length), args.slack)
    record = {"command": "verify", "input": args.input, "L": args.L, "passed": ok, **rep.as_dict()}
    if not ok:
        record["witness"] = rep.failing_witness(args.L, args.slack)
    text = (f"PASS: measured constant {rep.bilip_constant!r} <= L={args.L!r}" if ok
            else _fail_text(rep, args.L, args.slack))
    _emit(args, record, text)
    return EXIT_OK if ok else EXIT_FAIL


def _grid_fraction(args, D: float) -> dict:
    if getattr(args, "grid", None):
        return {"grid_step": args.grid / D}
    if os.environ.get("BILIP_GRID"):
        return {"grid_step": float(os.environ["BILIP_GRID"]) / D}
    return {}


def cmd_approx(args) -> int:
    curve, meta = _load(args.input, "open")
    res = approximate(curve, args.L, args.eps, **_grid_fraction(args, curve.domain_length))
    curvefile.dump(res.curve, args.out, {"source": args.input, "L": args.L, "eps": args.eps,
                                         "measured_L": res.report.bilip_constant})
    if args.dump_stages:
        os.makedirs(args.dump_stages, exist_ok=True)
        for name in ("phi1", "phi2", "phi3", "phi4"):
            curvefile.dump(res.stages[name], os.path.join(args.dump_stages, f"{name}.json"), {"stage": name})
        for name in ("tau", "tau_tilde"):
            with open(os.path.join(args.dump_stages, f"{name}.json"), "w", encoding="utf-8") as fh:
                json.dump(res.stages[name].as_dict(), fh, indent=1)
    record = {"command": "approx", "input": args.input, "output": args.out, "certified": res.certified,
              "sup_distance": res.sup_distance, "endpoints_exact": res.endpoints_exact, "C": res.C,
              "C_prime": res.C_prime, "segments": res.curve.n_segments, **res.report.as_dict()}
    target = args.L + args.eps
    if res.certified:
        text = (f"certified: {res.curve.n_segments} segments, constant {res.report.bilip_constant!r} "
                f"<= {target!r}, sup-distance {res.sup_distance!r}")
    else:
        w = res.report.failing_witness(target)
        text = (f"FAIL: constant {res.report.bilip_constant!r}, sup-distance {res.sup_distance!r}, "
                f"endpoints exact {res.endpoints_exact}; witness pair {w}")
    _emit(args, record, text)
    return EXIT_OK if res.certified else EXIT_FAIL


def cmd_approx_closed(args) -> int:
    curve, _ = _load(args.input, "closed")
    res = approximate_closed(curve, args.L, args.eps)
    curvefile.dump(res.curve, args.out, {"source": args.input, "L": args.L, "eps": args.eps,
                                         "measured_L": res.report.bilip_constant})
    record = {"command": "approx-closed", "input": args.input, "output": args.out, "certified": res.certified,
              "sup_distance": res.sup_distance, "theta": res.theta, "eps_prime": res.eps_prime,
              "charts": len(res.charts), "vertices": res.curve.n_vertices, **res.report.as_dict()}
    target = args.L + args.eps
    if res.certified:
        text = (f"certified: {res.curve.n_vertices} vertices, chordal constant {res.report.bilip_constant!r} "
                f"<= {target!r}, sup-distance {res.sup_distance!r}")
    else:
        text = (f"FAIL: chordal constant {res.report.bilip_constant!r}, sup-distance {res.sup_distance!r}; "
                f"witness pair {res.report.failing_witness(target)}")
    _emit(args, record, text)
    return EXIT_OK if res.certified else EXIT_FAIL


def cmd_shorten(args) -> int:
    curve, _ = _load(args.input, "open")
    out, cert, trace = shorten(curve, args.a, args.b, args.L, args.grid)
    curvefile.dump(out, args.out, {"source": args.input, "a": args.a, "b": args.b, "L": args.L,
                                   "b_prime": cert.b_prime})
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump({"iterations": [list(it) for it in trace.iterations], "final_b_prime": trace.final_b_prime},
                      fh, indent=1)
    record = {"command": "shorten", "input": args.input, "output": args.out, "b_prime": cert.b_prime,
              "passed": cert.passed, "speed_dev": cert.speed_dev, "mild_value": cert.mild_value,
              "accepted_steps": len(trace.accepted)}
    if cert.passed:
        text = f"shortened [{args.a!r}, {args.b!r}] to [{args.a!r}, {cert.b_prime!r}] in {len(trace.accepted)} steps"
    else:
        text = f"FAIL: shortened curve not certified; witness pair {cert.mild_witness}"
    _emit(args, record, text)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_gen(args) -> int:
    g = generate(GenSpec(args.seed, args.L, args.n, args.closed))
    meta = {"seed": args.seed, "target_L": args.L, "measured_L": g.report.bilip_constant, "attempts": g.attempts}
    if args.out:
        curvefile.dump(g.curve, args.out, meta)
        _emit(args, {"command": "gen", "output": args.out, **meta}, f"wrote {args.out}")
    else:
        sys.stdout.write(curvefile.dumps(g.curve, meta))
    return EXIT_OK


def render_svg(curves, width: int = 800, height: int = 800) -> str:
    """SVG 1.1 drawing of the curves in one frame, y up, with a 5% margin."""
    allpts = [c.pts for c in curves]
    xs = [p[:, 0] for p in allpts]
    ys = [p[:, 1] for p in allpts]
    x0, x1 = float(min(x.min() for x in xs)), float(max(x.max() for x in xs))
    y0, y1 = float(min(y.min() for y in ys)), float(max(y.max() for y in ys))
    span = max(x1 - x0, y1 - y0, 1e-12)
    m = 0.05 * span
    x0, x1, y0, y1 = x0 - m, x1 + m, y0 - m, y1 + m
    vw, vh = x1 - x0, y1 - y0
    r = 0.006 * max(vw, vh)
    sw = 0.003 * max(vw, vh)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="{x0!r} {-y1!r} {vw!r} {vh!r}">',
        '<g transform="scale(1,-1)">',
    ]
    for k, c in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{x!r},{y!r}" for x, y in c.pts.tolist())
        tag = "polygon" if isinstance(c, ClosedPLCurve) else "polyline"
        lines.append(f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{sw!r}"/>')
        for x, y in c.pts.tolist():
            lines.append(f'<circle cx="{x!r}" cy="{y!r}" r="{r!r}" fill="{color}"/>')
    lines += ["</g>", "</svg>"]
    return "\n".join(lines) + "\n"


def cmd_render(args) -> int:
    curves = [_load(p)[0] for p in args.inputs]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(render_svg(curves, args.width, args.height))
    _emit(args, {"command": "render", "output": args.out, "curves": len(curves)}, f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bilip", description="Certified biLipschitz approximation of PL curves.")
    ap.add_argument("--json", action="store_true", help="print one JSON record per line")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="measure and check the biLipschitz constant")
    p.add_argument("input")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--grid", type=_positive, help="grid step (default: BILIP_GRID or domain/2048)")
    p.add_argument("--slack", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("approx", help="approximate an open curve")
    p.add_argument("input")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--eps", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=_positive)
    p.add_argument("--dump-stages", metavar="DIR", help="write the intermediate curves and time changes")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("approx-closed", help="approximate a closed curve")
    p.add_argument("input")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--eps", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_approx_closed)

    p = sub.add_parser("shorten", help="shorten an open curve on [a, b]")
    p.add_argument("input")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=_positive, help="finest candidate width (default (b - a) / 64)")
    p.add_argument("--trace", metavar="FILE", help="write every candidate tried")
    p.set_defaults(func=cmd_shorten)

    p = sub.add_parser("gen", help="generate a seeded biLipschitz curve")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--n", type=int, required=True, help="vertex count")
    p.add_argument("--closed", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("render", help="draw curves as SVG")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--height", type=int, default=800)
    p.set_defaults(func=cmd_render)

    for p in sub.choices.values():
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="print JSON records")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, curvefile.CurveFileError, OSError) as exc:
        print(f"bilip: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BilipError as exc:
        print(f"bilip: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

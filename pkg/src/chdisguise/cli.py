"""Command-line front end.

Channels travel as JSON files; profiles land as CSV; scalar results are
printed as single-line JSON records.  Exit codes: 0 success, 2 malformed
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import channels, disguise, relations, sdp_exact
from .errors import NumericalError, ValidationError

log = logging.getLogger("chdisguise")

_FIXTURES = ("bitflip", "phaseflip", "xzflip", "appendix-b-e", "appendix-b-f")


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CHDISGUISE_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _add_sdp_flags(sub):
    sub.add_argument("--sdp-tol", type=float, default=1e-6, help="bisection tolerance on alpha")
    sub.add_argument("--sdp-max-iter", type=int, default=20000, help="inner iteration cap")
    sub.add_argument("--sdp-warm-start", choices=("auto", "none"), default="auto")


def _solver_options(args) -> sdp_exact.SolverOptions:
    return sdp_exact.SolverOptions(
        bisect_tol=args.sdp_tol,
        max_iter=args.sdp_max_iter,
        warm_start=args.sdp_warm_start,
    )


def _load_channel(path: str, tp_tol: float) -> channels.KrausChannel:
    text = Path(path).read_text()
    return channels.loads_channel(text, tp_tol=tp_tol)


def _parse_beta_grid(text: str):
    parts = text.split(":")
    if len(parts) != 4 or parts[0] != "log":
        raise ValidationError(
            f"beta grid must look like log:<lo>:<hi>:<count>, got {text!r}"
        )
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ValidationError(f"malformed beta grid {text!r}: {exc}") from exc
    return disguise.default_beta_grid(lo, hi, count)


def _emit(record: dict):
    print(channels.canonical_json(record))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chdisguise",
        description="Mixing-probability trade-off profiles between quantum channels",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("profile", help="compute lower/upper trade-off curves")
    p.add_argument("channel_e")
    p.add_argument("channel_f")
    p.add_argument("--beta-grid", default=None, help="log:<lo>:<hi>:<count>")
    p.add_argument("--out", required=True, help="output prefix for the CSV files")
    p.add_argument("--exact", action="store_true", help="add an exact alpha column")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the beta sweep")
    p.add_argument("--tp-tol", type=float, default=channels.JSON_TP_TOL)
    _add_sdp_flags(p)

    p = sub.add_parser("exact", help="exact solve at a single beta")
    p.add_argument("channel_e")
    p.add_argument("channel_f")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--tp-tol", type=float, default=channels.JSON_TP_TOL)
    _add_sdp_flags(p)

    p = sub.add_parser("containment", help="minimal q with E = (1-q)F + q F_delta")
    p.add_argument("channel_e")
    p.add_argument("channel_f")
    p.add_argument("--tp-tol", type=float, default=channels.JSON_TP_TOL)

    p = sub.add_parser("triangle", help="combine trade-off points through a middle channel")
    p.add_argument("channels", nargs="*", help="three channel files for region mode")
    p.add_argument("--p1", type=float)
    p.add_argument("--q1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--q2", type=float)
    p.add_argument("--dense", action="store_true", help="combine every profile point")
    p.add_argument("--beta-grid", default=None)
    p.add_argument("--out", default=None, help="region CSV path (region mode)")
    p.add_argument("--tp-tol", type=float, default=channels.JSON_TP_TOL)

    p = sub.add_parser("compose", help="mixing probabilities for composed channels")
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--q1", type=float, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--q2", type=float, required=True)
    p.add_argument("--mode", choices=("product", "sum"), default="product")

    p = sub.add_parser("diamond", help="diamond-norm bracket from the equal-mix probability")
    p.add_argument("channels", nargs="*", help="two channel files (solves beta=1 exactly)")
    p.add_argument("--p-eq", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--tp-tol", type=float, default=channels.JSON_TP_TOL)
    _add_sdp_flags(p)

    p = sub.add_parser("qkd", help="key-rate upper bound from a mixing probability")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--dim", type=int, required=True)

    p = sub.add_parser("gen-random", help="emit a seeded random channel as JSON")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--kraus", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fixture", help="emit a named fixture channel as JSON")
    p.add_argument("name", choices=_FIXTURES)
    p.add_argument("--a", type=float, default=None, help="bit-flip probability")
    p.add_argument("--b", type=float, default=None, help="phase-flip probability")
    p.add_argument("--c", type=float, default=None, help="xz-flip probability")

    return parser


def _write_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _cmd_profile(args) -> int:
    e = _load_channel(args.channel_e, args.tp_tol)
    f = _load_channel(args.channel_f, args.tp_tol)
    grid = _parse_beta_grid(args.beta_grid) if args.beta_grid else None
    curve = disguise.trace_profile(e, f, beta_grid=grid, jobs=args.jobs)
    exact_alphas = None
    if args.exact:
        opts = _solver_options(args)
        log.info("running %d exact solves", len(curve.samples))
        exact_alphas = []
        for s in curve.samples:
            try:
                exact_alphas.append(sdp_exact.solve_pair(e, f, s.beta, opts=opts).alpha_hat)
            except NumericalError as exc:
                raise NumericalError(
                    f"exact solve failed at beta={s.beta:.9g}: {exc}",
                    residual=exc.residual,
                ) from exc
    bounds_path = Path(f"{args.out}_bounds.csv")
    hull_path = Path(f"{args.out}_hull.csv")
    _write_lines(bounds_path, disguise.profile_csv_lines(curve, exact_alphas))
    _write_lines(hull_path, disguise.hull_csv_lines(curve))
    log.info("wrote %s and %s", bounds_path, hull_path)
    return 0


def _cmd_exact(args) -> int:
    e = _load_channel(args.channel_e, args.tp_tol)
    f = _load_channel(args.channel_f, args.tp_tol)
    sol = sdp_exact.solve_pair(e, f, args.beta, opts=_solver_options(args))
    _emit(
        {
            "alpha_hat": sol.alpha_hat,
            "beta": sol.beta,
            "p": sol.p,
            "q": sol.q,
            "residual": sol.residual,
            "iterations": sol.iterations,
        }
    )
    return 0


def _cmd_containment(args) -> int:
    e = _load_channel(args.channel_e, args.tp_tol)
    f = _load_channel(args.channel_f, args.tp_tol)
    result = relations.containment_min_q(e, f)
    _emit({"q_min": result.q_min})
    return 0


def _cmd_triangle(args) -> int:
    point_flags = [args.p1, args.q1, args.p2, args.q2]
    if args.channels:
        if len(args.channels) != 3:
            raise ValidationError("region mode needs exactly three channel files")
        if args.out is None:
            raise ValidationError("region mode needs --out for the CSV")
        e, f, g = (_load_channel(c, args.tp_tol) for c in args.channels)
        grid = _parse_beta_grid(args.beta_grid) if args.beta_grid else None
        prof_ef = disguise.trace_profile(e, f, beta_grid=grid)
        prof_fg = disguise.trace_profile(f, g, beta_grid=grid)
        stride = 1 if args.dense else 5
        boundary = relations.triangle_region(prof_ef, prof_fg, stride=stride)
        lines = ["p,q"] + [
            f"{pt.p + 0.0:.12g},{pt.q + 0.0:.12g}" for pt in boundary
        ]
        _write_lines(Path(args.out), lines)
        return 0
    if any(v is None for v in point_flags):
        raise ValidationError(
            "point mode needs --p1 --q1 --p2 --q2 (or pass three channel files)"
        )
    pt = relations.triangle_combine((args.p1, args.q1), (args.p2, args.q2))
    _emit({"p2": pt.p, "q2": pt.q})
    return 0


def _cmd_compose(args) -> int:
    pt = relations.compose_mixing((args.p1, args.q1), (args.p2, args.q2), mode=args.mode)
    _emit({"p2": pt.p, "q2": pt.q})
    return 0


def _cmd_diamond(args) -> int:
    if args.channels:
        if len(args.channels) != 2:
            raise ValidationError("diamond mode with files needs exactly two channels")
        e = _load_channel(args.channels[0], args.tp_tol)
        f = _load_channel(args.channels[1], args.tp_tol)
        sol = sdp_exact.solve_pair(e, f, 1.0, opts=_solver_options(args))
        # p = q at beta = 1 never exceeds 1/2; clip solver round-off
        p_eq, dim = min(sol.p, 0.5), e.dim
    else:
        if args.p_eq is None or args.dim is None:
            raise ValidationError("need either two channel files or --p-eq and --dim")
        p_eq, dim = args.p_eq, args.dim
    bracket = relations.diamond_bracket(p_eq, dim)
    _emit({"diamond_hi": bracket.upper, "diamond_lo": bracket.lower, "p_eq": p_eq})
    return 0


def _cmd_qkd(args) -> int:
    _emit({"rate_bound_bits": relations.qkd_rate_bound(args.p, args.dim)})
    return 0


def _cmd_gen_random(args) -> int:
    ch = channels.random_channel(args.dim, args.kraus, args.seed)
    sys.stdout.write(channels.dumps_channel(ch))
    return 0


def _cmd_fixture(args) -> int:
    name = args.name
    if name == "bitflip":
        if args.a is None:
            raise ValidationError("fixture bitflip needs --a")
        ch = channels.bit_flip(args.a)
    elif name == "phaseflip":
        if args.b is None:
            raise ValidationError("fixture phaseflip needs --b")
        ch = channels.phase_flip(args.b)
    elif name == "xzflip":
        if args.c is None:
            raise ValidationError("fixture xzflip needs --c")
        ch = channels.xz_flip(args.c)
    elif name == "appendix-b-e":
        ch = channels.appendix_b_pair()[0]
    else:
        ch = channels.appendix_b_pair()[1]
    sys.stdout.write(channels.dumps_channel(ch))
    return 0


_COMMANDS = {
    "profile": _cmd_profile,
    "exact": _cmd_exact,
    "containment": _cmd_containment,
    "triangle": _cmd_triangle,
    "compose": _cmd_compose,
    "diamond": _cmd_diamond,
    "qkd": _cmd_qkd,
    "gen-random": _cmd_gen_random,
    "fixture": _cmd_fixture,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import criterion, experiments, model, npa, realization as rlz, seesaw
from .errors import SdpError, ValidationError


def _add_common(p: argparse.ArgumentParser, n_default: int):
    p.add_argument("--n", type=int, default=n_default, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", choices=["uniform", "rare-case"], default="uniform")
    p.add_argument("--out", type=Path, default=None, help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol-verdict", type=float, default=1e-7)
    p.add_argument("--tol-sdp-gap", type=float, default=1e-8)
    p.add_argument("--tol-sdp-feas", type=float, default=1e-9)
    p.add_argument("--restarts", type=int, default=20, help="seesaw restarts")


def _config(args, subcommand: str) -> experiments.RunConfig:
    return experiments.RunConfig(
        subcommand=subcommand,
        n_samples=args.n,
        seed=args.seed,
        profile=getattr(args, "profile", "uniform"),
        out=args.out,
        workers=getattr(args, "workers", 1),
        seesaw_restarts=getattr(args, "restarts", 20),
        verdict_tol=getattr(args, "tol_verdict", 1e-7),
        sdp_gap_tol=getattr(args, "tol_sdp_gap", 1e-8),
        sdp_feas_tol=getattr(args, "tol_sdp_feas", 1e-9),
        grid_points=getattr(args, "grid", 101),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellext",
        description="Extremality checks, moment-matrix bounds and seesaw maximization "
                    "for two-input/two-output Bell correlations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", help="random-expression sweep over seesaw maximizers")
    _add_common(p, 20000)

    p = sub.add_parser("fig2", help="saturating-realization sweep with mixing-weight scans")
    _add_common(p, 4000)

    p = sub.add_parser("fig3", help="bounds along the straight boundary slice")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("root-match", help="quadratic-root matching sweep")
    _add_common(p, 10000)

    p = sub.add_parser("check", help="full verdict for one point (file of 5 angles or 8 correlators)")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, default=None, help="also write the report as CSV")
    p.add_argument("--tol-verdict", type=float, default=1e-7)
    p.add_argument("--tol-sdp-gap", type=float, default=1e-8)
    p.add_argument("--tol-sdp-feas", type=float, default=1e-9)

    p = sub.add_parser("seesaw", help="maximize a Bell expression (8 coefficients or --random)")
    p.add_argument("coefficients", nargs="*", type=float,
                   help="va0 va1 vb0 vb1 v00 v01 v10 v11")
    p.add_argument("--random", action="store_true", help="draw a random expression instead")
    p.add_argument("--profile", choices=["uniform", "rare-case"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)

    p = sub.add_parser("di-bound", help="device-independent guessing bounds for a point file")
    p.add_argument("input", type=Path)
    p.add_argument("--target", choices=["DB0", "DB1", "DA0", "DA1", "all"], default="all")
    p.add_argument("--level", choices=["1", "1+AB"], default="1+AB")
    p.add_argument("--tol-sdp-gap", type=float, default=1e-8)
    p.add_argument("--tol-sdp-feas", type=float, default=1e-9)

    p = sub.add_parser("lambda-max", help="mixing-weight boundary scan for a point file")
    p.add_argument("input", type=Path)
    p.add_argument("--bisection", action="store_true", help="use the feasibility-bisection fallback")
    p.add_argument("--tol-sdp-gap", type=float, default=1e-8)
    p.add_argument("--tol-sdp-feas", type=float, default=1e-9)
    return parser


def _load_correlation(path: Path):
    data = experiments.parse_point_file(path)
    if isinstance(data, rlz.TwoQubitRealization):
        return rlz.correlation_of(data)
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SdpError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    cmd = args.command
    if cmd in ("fig1", "fig2", "fig3", "root-match"):
        cfg = _config(args, cmd)
        runner = {"fig1": experiments.run_fig1, "fig2": experiments.run_fig2,
                  "fig3": experiments.run_fig3, "root-match": experiments.run_root_match}[cmd]
        result = runner(cfg)
        if cfg.out is None:
            sys.stdout.write(result["csv"])
        else:
            print(f"wrote {cfg.out}")
        return 0

    if cmd == "check":
        cfg = experiments.RunConfig(
            subcommand="check", n_samples=1,
            verdict_tol=args.tol_verdict, sdp_gap_tol=args.tol_sdp_gap, sdp_feas_tol=args.tol_sdp_feas,
        )
        data = experiments.parse_point_file(args.input)
        report = experiments.check_point(data, cfg)
        for line in report.lines():
            print(line)
        if args.out is not None and report.report is not None:
            experiments._write_csv(args.out, "check", list(criterion.EXTREMALITY_CSV_FIELDS),
                                   [report.report.to_csv_row()])
        return 0

    if cmd == "seesaw":
        if args.random:
            rng = experiments.rng_for(args.seed, 1)
            e = seesaw.random_bell_expression(rng, args.profile)
        else:
            if len(args.coefficients) != 8:
                raise ValidationError("need 8 coefficients: va0 va1 vb0 vb1 v00 v01 v10 v11")
            v = args.coefficients
            e = model.BellExpression(va=v[0:2], vb=v[2:4], vab=np.array([[v[4], v[5]], [v[6], v[7]]]))
        res = seesaw.maximize_bell(e, seesaw.SeesawSettings(restarts=args.restarts, seed=args.seed))
        print("value", format(res.value, ".12g"))
        print("converged", res.converged, "iterations", res.iterations, "restart", res.restart_index)
        print("realization", " ".join(format(v, ".17g") for v in rlz.realization_to_row(res.realization)))
        return 0

    if cmd == "di-bound":
        c = _load_correlation(args.input)
        from .sdp import SdpSettings
        settings = SdpSettings(gap_tol=args.tol_sdp_gap, feas_tol=args.tol_sdp_feas)
        targets = ["DB0", "DB1", "DA0", "DA1"] if args.target == "all" else [args.target]
        for t in targets:
            print(t, format(npa.di_upper_bound(c, t, level=args.level, settings=settings), ".12g"))
        return 0

    if cmd == "lambda-max":
        c = _load_correlation(args.input)
        from .sdp import SdpSettings
        settings = SdpSettings(gap_tol=args.tol_sdp_gap, feas_tol=args.tol_sdp_feas)
        scan = npa.lambda_max_bisection(c, settings=settings) if args.bisection \
            else npa.lambda_max(c, settings=settings)
        print("lambda_max", format(scan.lambda_max, ".12g"))
        print("method", scan.method, "status", scan.status, "cap_hit", scan.cap_hit)
        return 0

    raise ValidationError(f"unknown command {cmd!r}")


if __name__ == "__main__":
    raise SystemExit(main())

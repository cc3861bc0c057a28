"""Command-line interface.

Subcommands: spectrum, scattering, thresholds, check-levinson, hexagon, sweep.
Exit codes: 0 success; 2 failed identity check (|residual| >= 0.01);
3 unclassifiable threshold; 64 usage error.
"""

from __future__ import annotations

import argparse
import math
import re
import sys

import numpy as np

from . import reports
from .hexagon import HexagonDomainError, hexagon_symbol, hexagon_winding, q_limit
from .model import ModelError, ModelParams, build_model
from .scattering import ExtrapolationDiverged, ThresholdClass, all_threshold_limits
from .sweep import SweepConfig, VDistribution, run_sweep
from .winding import UnclassifiedThresholdError, levinson_report

EXIT_OK = 0
EXIT_IDENTITY = 2
EXIT_UNCLASSIFIED = 3
EXIT_USAGE = 64

RESIDUAL_GATE = 0.01


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


_PI_FORM = re.compile(
    r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$", re.IGNORECASE
)


def parse_theta(text: str) -> float:
    """Radians, or a rational-pi literal like 'pi/2', '3pi/4', '0.5pi'."""
    m = _PI_FORM.match(text)
    if m:
        num = m.group(1)
        coef = 1.0 if num in ("", "+") else (-1.0 if num == "-" else float(num))
        den = float(m.group(2)) if m.group(2) else 1.0
        if den == 0:
            raise UsageError("theta: zero denominator")
        frac = (coef / den) % 2.0
        return frac * math.pi
    try:
        val = float(text)
    except ValueError:
        raise UsageError(f"cannot parse theta {text!r}") from None
    return val % (2.0 * math.pi)


def parse_v(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse potential {text!r}") from None


def _model_from_args(args) -> "object":
    if args.n is None or args.theta is None or args.v is None:
        raise UsageError("--n, --theta and --v are required")
    try:
        return build_model(ModelParams(n=args.n, theta=parse_theta(args.theta), v=parse_v(args.v)))
    except ModelError as exc:
        raise UsageError(str(exc)) from None


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, help="ring size (>= 2)")
    p.add_argument("--theta", type=str, help="flux in radians; accepts pi/2-style literals")
    p.add_argument("--v", type=str, help="potential, comma-separated, one value per ring site")


def build_parser() -> _Parser:
    parser = _Parser(prog="qlev", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="levels, thresholds and the intricate flag")
    _add_model_flags(p)
    p.add_argument("--out", type=str, help="write a JSON summary here")

    p = sub.add_parser("scattering", help="sample the scattering matrix over the spectrum")
    _add_model_flags(p)
    p.add_argument("--grid", type=int, default=512, help="number of energy samples")
    p.add_argument("--csv", type=str, help="write the sampled grid as CSV")

    p = sub.add_parser("thresholds", help="one-sided limits at every band edge")
    _add_model_flags(p)
    p.add_argument("--out", type=str, help="write a JSON summary here")

    p = sub.add_parser("check-levinson", help="verify the counting identity for one model")
    _add_model_flags(p)
    p.add_argument("--out", type=str, help="write the report JSON here")
    p.add_argument("--csv", type=str, help="write the per-interval phase traces as CSV")
    p.add_argument("--no-oracle", action="store_true", help="skip the truncated-lattice cross-check")
    p.add_argument("--oracle-layers", type=int, default=600)

    p = sub.add_parser("hexagon", help="six-edge contour at a coinciding threshold")
    _add_model_flags(p)
    p.add_argument("--out", type=str, help="write a JSON summary here")
    p.add_argument("--csv", type=str, help="write edge determinant traces as CSV")

    p = sub.add_parser("sweep", help="run a deterministic model sweep")
    p.add_argument("--n", type=str, required=True, help="comma list of ring sizes")
    p.add_argument("--theta-grid", "--grid", dest="theta_grid", type=int, default=16)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", type=str, default="sweep_out")
    p.add_argument(
        "--distribution",
        type=str,
        default="unit-sphere",
        help="unit-sphere | deep:SCALE | sparse:P_ZERO",
    )
    p.add_argument("--oracle-layers", type=int, default=600)
    return parser


# -- subcommand bodies -----------------------------------------------------------


def _cmd_spectrum(args) -> int:
    model = _model_from_args(args)
    print(f"ring size n = {model.n}, flux theta = {model.theta:.12g}")
    print(f"levels ({len(model.levels)} distinct):")
    for lev in model.levels:
        chans = ",".join(str(j) for j in lev.channels)
        print(
            f"  level {lev.k}: value {lev.value:+.12g}, channels [{chans}],"
            f" band ({lev.value - 2.0:+.6g}, {lev.value + 2.0:+.6g})"
        )
    print("thresholds:")
    for t in model.thresholds:
        tag = "  (coincides with partner)" if t.partner else ""
        print(f"  level {t.k} {t.side}: {t.energy:+.12g}{tag}")
    info = model.intricate
    print(f"intricate: {info.is_intricate}" + (f" (alpha = {info.alpha:+d})" if info.is_intricate else ""))
    if args.out:
        reports.write_json(
            args.out,
            {
                "schema_version": reports.SCHEMA_VERSION,
                "kind": "spectrum",
                "params": {"n": model.n, "theta": model.theta, "v": list(model.params.v)},
                "levels": [
                    {"k": l.k, "value": l.value, "channels": list(l.channels)}
                    for l in model.levels
                ],
                "thresholds": [
                    {"level_k": t.k, "side": t.side, "energy": t.energy, "coincides": t.partner}
                    for t in model.thresholds
                ],
                "intricate": {"flag": info.is_intricate, "alpha": info.alpha},
            },
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_scattering(args) -> int:
    model = _model_from_args(args)
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    if args.csv:
        worst = reports.write_scattering_csv(args.csv, model, points=args.grid)
        print(f"wrote {args.csv}")
    else:
        blocks = reports.scattering_grid(model, points=args.grid)
        worst = max(float(d.max()) for _, _, _, d, _ in blocks)
    print(f"max unitarity defect over grid: {worst:.3e}")
    return EXIT_OK


def _cmd_thresholds(args) -> int:
    model = _model_from_args(args)
    limits = all_threshold_limits(model)
    print("level side   energy        class            extrap_residual")
    for t in limits:
        extra = ""
        if t.classification is ThresholdClass.REFLECTION:
            extra = f"  a={t.reflection_a:+.6f}, b={t.reflection_b:+.6f}"
        print(
            f"{t.k:>5} {t.side:<6} {t.energy:+12.8f}  {t.classification.value:<16}"
            f" {t.extrap_residual:.2e}{extra}"
        )
    if args.out:
        payload = {
            "schema_version": reports.SCHEMA_VERSION,
            "kind": "thresholds",
            "params": {"n": model.n, "theta": model.theta, "v": list(model.params.v)},
            "thresholds": [
                {
                    "level_k": t.k,
                    "side": t.side,
                    "energy": t.energy,
                    "class": t.classification.value,
                    "matrix_re": np.asarray(t.matrix).real,
                    "matrix_im": np.asarray(t.matrix).imag,
                    "extrap_residual": t.extrap_residual,
                }
                for t in limits
            ],
        }
        reports.write_json(args.out, payload)
        print(f"wrote {args.out}")
    if any(t.classification is ThresholdClass.UNCLASSIFIED for t in limits):
        print("at least one threshold limit is unclassified", file=sys.stderr)
        return EXIT_UNCLASSIFIED
    return EXIT_OK


def _cmd_check_levinson(args) -> int:
    model = _model_from_args(args)
    report = levinson_report(
        model,
        include_oracle=not args.no_oracle,
        oracle_layers=args.oracle_layers,
    )
    intro = " - 1/2 (coinciding threshold)" if report.intricate else ""
    print(f"n = {report.n}, theta = {report.theta:.12g}, v = {report.v}")
    print(f"var(det S)            = {report.var_det_s:+.9f}")
    print(f"open channels (n)     = {report.n}")
    print(f"correction C          = {report.correction_c}")
    print(f"lhs = var + n - C/2{intro} = {report.lhs:+.9f}")
    print(
        f"bound states          = {report.bound_total}"
        f" (discrete {report.discrete.total}, embedded {report.embedded.total})"
    )
    if report.oracle_total is not None:
        print(f"lattice oracle        = {report.oracle_total}")
    print(f"residual              = {report.residual:+.3e}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        reports.write_json(args.out, reports.levinson_report_dict(report))
        print(f"wrote {args.out}")
    if args.csv:
        reports.write_trace_csv(args.csv, report.traces)
        print(f"wrote {args.csv}")
    if abs(report.residual) >= RESIDUAL_GATE:
        print("counting identity FAILED", file=sys.stderr)
        return EXIT_IDENTITY
    print("counting identity holds")
    return EXIT_OK


def _cmd_hexagon(args) -> int:
    model = _model_from_args(args)
    try:
        symbol = hexagon_symbol(model)
    except HexagonDomainError as exc:
        raise UsageError(str(exc)) from None
    hw = hexagon_winding(symbol)
    print(f"case: {hw.case_label} (boundary signs {hw.sigma_low:+d}, {hw.sigma_high:+d})")
    print(f"winding along the closed contour: {hw.winding:+.9f} (nearest integer {hw.nearest_int})")
    print(f"pattern residual:      {hw.pattern_residual:.3e}")
    print(f"det closed-form check: {hw.det_formula_residual:.3e}")
    print(f"vertex continuity gap: {hw.vertex_gap:.3e}")
    if model.intricate.is_intricate:
        q = q_limit(model)
        print(
            f"mixed limits: above {q.upper:+.6f} (target {q.predicted_upper:+.2f}),"
            f" below {q.lower:+.6f} (target {q.predicted_lower:+.2f})"
        )
    for w in hw.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        reports.write_json(args.out, reports.hexagon_report_dict(model, hw, symbol.constants))
        print(f"wrote {args.out}")
    if args.csv:
        reports.write_hexagon_csv(args.csv, symbol)
        print(f"wrote {args.csv}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        n_values = [int(p) for p in args.n.split(",")]
        dist = VDistribution.parse(args.distribution)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = SweepConfig(
        n_values=n_values,
        theta_grid=args.theta_grid,
        trials_per_cell=args.trials,
        rng_seed=args.seed,
        v_distribution=dist,
        out_dir=args.out,
        oracle_layers=args.oracle_layers,
    )
    done = 0

    def progress(row):
        nonlocal done
        done += 1
        if done % 25 == 0:
            print(f"  ... {done} trials finished", file=sys.stderr)

    rows = run_sweep(config, progress=progress)
    bad = [r for r in rows if r.status != "ok"]
    loose = [r for r in rows if r.residual is not None and abs(r.residual) >= RESIDUAL_GATE]
    print(f"{len(rows)} trials -> {args.out}/manifest.csv; {len(bad)} not ok, {len(loose)} loose residuals")
    if bad or loose:
        for r in (bad + loose)[:10]:
            print(f"  {r.trial_id}: status={r.status} residual={r.residual}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


_HANDLERS = {
    "spectrum": _cmd_spectrum,
    "scattering": _cmd_scattering,
    "thresholds": _cmd_thresholds,
    "check-levinson": _cmd_check_levinson,
    "hexagon": _cmd_hexagon,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnclassifiedThresholdError as exc:
        print(f"unclassified threshold: {exc}", file=sys.stderr)
        return EXIT_UNCLASSIFIED
    except ExtrapolationDiverged as exc:
        print(f"threshold extrapolation failed: {exc}", file=sys.stderr)
        return EXIT_UNCLASSIFIED


if __name__ == "__main__":
    sys.exit(main())

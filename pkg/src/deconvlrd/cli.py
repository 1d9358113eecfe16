"""Command line frontend: simulate | gn | estimate | bandwidth | mc | rate-fit.

Exit codes: 0 success, 2 usage/configuration error, 1 runtime error.  Errors
raised by the library are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from . import bandwidth as bw
from . import estimators as est
from . import harness
from . import noise as noise_mod
from . import process as proc
from .errors import ConfigurationError, DataError, DeconvError, ParameterError
from .kernel import GridConfig, build_gn, default_kernel

_USAGE_ERRORS = (ParameterError, ConfigurationError, DataError)


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--version", action="version", version=f"deconvlrd {__version__}")

    parser = argparse.ArgumentParser(
        prog="deconvlrd",
        description="Deconvolution density estimation for dependent linear processes",
        parents=[shared],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[shared],
                       help="simulate a linear process with additive noise")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, help="LRD exponent in (1/2, 1)")
    p.add_argument("--phi", type=float, help="geometric coefficient in (-1, 1)")
    p.add_argument("--ma", type=str, help="comma-separated explicit weights, e.g. '1,0.5'")
    p.add_argument("--M", type=int, help="truncation lag override")
    p.add_argument("--noise", type=str, default="none")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str, required=True, help="output CSV (index,x,y)")

    p = sub.add_parser("gn", parents=[shared], help="tabulate the deconvolution kernel")
    p.add_argument("--noise", type=str, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--dx", type=float, default=0.005)
    p.add_argument("--xmax", type=float, default=200.0)
    p.add_argument("--out", type=str, required=True, help="output CSV (x,gn,Gn)")

    p = sub.add_parser("estimate", parents=[shared], help="estimate a density or CDF")
    p.add_argument("--input", type=str, required=True, help="CSV with a y (or x) column")
    p.add_argument("--noise", type=str, required=True)
    p.add_argument("--h", type=str, default="auto", help="bandwidth value or 'auto'")
    p.add_argument("--gamma", type=float, help="LRD exponent for --h auto")
    p.add_argument("--x0", type=str, default="0",
                   help="comma list '0,1' or 'grid:lo:hi:count'")
    p.add_argument("--kind", choices=("density", "cdf"), default="density")
    p.add_argument("--out", type=str, help="output CSV (default stdout)")

    p = sub.add_parser("bandwidth", parents=[shared], help="compute a bandwidth rule")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rule", default="auto",
                   choices=("auto", "iid-like", "strong-lrd", "cdf-lrd",
                            "supersmooth", "pilot-kde"))
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--sigma-sq", type=float, help="sigma_n1^2 for the cdf rule")
    p.add_argument("--theta", type=float, help="supersmooth tuning in (2-2gamma, 1)")
    p.add_argument("--a", type=float, help="supersmooth decay constant")
    p.add_argument("--d", type=float, default=1.0, help="kernel band limit")

    p = sub.add_parser("mc", parents=[shared], help="run a Monte Carlo experiment")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--threads", type=int, help="worker cap (DECONV_THREADS fallback)")

    p = sub.add_parser("rate-fit", parents=[shared], help="fit a rate to records")
    p.add_argument("--records", type=str, required=True)
    p.add_argument("--theory-slope", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=0.12)
    p.add_argument("--x0", type=float, help="restrict to one evaluation point")
    return parser


def cmd_simulate(args) -> int:
    chosen = [name for name, v in (("gamma", args.gamma), ("phi", args.phi), ("ma", args.ma))
              if v is not None]
    if len(chosen) != 1:
        raise ConfigurationError(
            f"exactly one of --gamma / --phi / --ma must be given, got {chosen or 'none'}"
        )
    if args.gamma is not None:
        M = args.M if args.M is not None else proc.default_truncation(args.n)
        spec = proc.build_coefficients(proc.KIND_LRD, gamma=args.gamma, M=M)
    elif args.phi is not None:
        M = args.M if args.M is not None else max(64, math.ceil(-16 / math.log10(abs(args.phi))))
        spec = proc.build_coefficients(proc.KIND_GEOMETRIC, phi=args.phi, M=M)
    else:
        weights = tuple(float(v) for v in args.ma.split(","))
        spec = proc.build_coefficients(proc.KIND_FINITE, weights=weights)

    noise = noise_mod.parse_noise_spec(args.noise)
    sample = proc.simulate(spec, proc.InnovationLaw(), args.n, args.seed)
    if noise.kind == "none":
        y = sample.x.copy()
    else:
        y = sample.x + noise.sample(args.n, harness.child_seed(args.seed, args.n, 0, 1))
    proc.series_to_csv(sample, args.out, noisy=y)
    print(json.dumps({
        "n": args.n,
        "gamma": args.gamma,
        "noise": args.noise,
        "sample_variance": float(np.var(y, ddof=1)) if args.n > 1 else 0.0,
        "out": args.out,
    }, sort_keys=True))
    return 0


def cmd_gn(args) -> int:
    noise = noise_mod.parse_noise_spec(args.noise)
    table = build_gn(default_kernel(), noise, args.h, GridConfig(dx=args.dx, x_max=args.xmax))
    table.to_csv(args.out, sidecar={"noise": args.noise})
    print(json.dumps({
        "h": table.h, "noise": args.noise, "l1": table.l1, "total": table.total,
        "dx": table.dx, "x_max": table.x_max, "out": args.out,
    }, sort_keys=True))
    return 0


def _parse_x0(text: str) -> np.ndarray:
    if text.startswith("grid:"):
        try:
            lo, hi, count = text.split(":")[1:]
            return np.linspace(float(lo), float(hi), int(count))
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"malformed x0 grid spec {text!r}") from exc
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigurationError(f"malformed x0 list {text!r}") from exc


def _read_series_column(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read input file {path}: {exc}") from exc
    if not rows:
        raise ConfigurationError(f"input file {path} contains no observations")
    col = "y" if "y" in rows[0] else "x"
    if col not in rows[0]:
        raise ConfigurationError(f"input file {path} has neither a 'y' nor an 'x' column")
    return np.array([float(r[col]) for r in rows])


def cmd_estimate(args) -> int:
    noise = noise_mod.parse_noise_spec(args.noise)
    cls = noise_mod.classify(noise, self_check=False)
    if args.kind == "cdf" and cls.tag == noise_mod.SUPERSMOOTH:
        raise ConfigurationError(
            "cdf estimation is supported for ordinary smooth noise only: the "
            "distribution-function theory has no supersmooth counterpart here"
        )
    y = _read_series_column(args.input)
    if args.h == "auto":
        if cls.tag != noise_mod.ORDINARY_SMOOTH:
            raise ConfigurationError("--h auto requires ordinary smooth noise")
        if args.gamma is None:
            raise ConfigurationError("--h auto requires --gamma")
        h = bw.bw_density(len(y), cls.beta, args.gamma).h
    else:
        h = float(args.h)
    table = build_gn(default_kernel(), noise, h)
    x0 = _parse_x0(args.x0)
    if args.kind == "cdf":
        results = est.cdf_estimate(y, table, x0)
    else:
        results = est.density_estimate(y, table, x0)
    if args.out:
        est.estimates_to_csv(results, args.out)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["kind", "x0", "n", "h", "value"])
        for r in results:
            writer.writerow([r.kind, format(r.x0, ".17g"), r.n,
                             format(r.h, ".17g"), format(r.value, ".17g")])
    return 0


def cmd_bandwidth(args) -> int:
    gamma_star = bw.regime_threshold(args.beta)
    regime = ""
    if args.rule in ("auto", "iid-like", "strong-lrd") :
        if args.rule == "auto":
            plan = bw.bw_density(args.n, args.beta, args.gamma, args.C)
            regime = plan.regime
        elif args.rule == "iid-like":
            plan = bw.bw_density(args.n, args.beta, None, args.C)
            regime = "moderate"
        else:
            if args.gamma is None:
                raise ConfigurationError("strong-lrd rule requires --gamma")
            expo = (2.0 * args.gamma - 1.0) / (2.0 * (2.0 + args.beta))
            plan = bw.BandwidthPlan(args.C * args.n ** (-expo), bw.RULE_STRONG, "strong", args.C)
            regime = "strong"
    elif args.rule == "cdf-lrd":
        if args.sigma_sq is None:
            raise ConfigurationError("cdf-lrd rule requires --sigma-sq")
        plan = bw.bw_cdf(args.n, args.beta, args.sigma_sq, args.C)
    elif args.rule == "supersmooth":
        if args.theta is None or args.a is None or args.gamma is None:
            raise ConfigurationError("supersmooth rule requires --theta, --a and --gamma")
        plan = bw.bw_supersmooth(args.n, args.d, args.a, args.beta, args.theta, args.gamma)
    else:
        plan = bw.bw_pilot_kde(args.n, args.C)
    if args.gamma is not None and not regime:
        regime = bw.classify_regime(args.gamma, args.beta)
    print(json.dumps({
        "h": plan.h, "rule": plan.rule, "regime": regime, "gamma_star": gamma_star,
    }, sort_keys=True))
    return 0


def cmd_mc(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"/: config is not valid JSON ({exc})") from exc
    config = harness.ExperimentConfig.from_dict(raw)
    if not config.out:
        raise ConfigurationError("/out: output base path is required for the mc command")
    result = harness.run_experiment(config, workers=args.threads, progress=True)
    harness.write_records_csv(result.records, config.out + ".records.csv")
    harness.write_summary_json(result.summary, config.out + ".summary.json")
    print(json.dumps(result.summary, sort_keys=True))
    return 0


def cmd_rate_fit(args) -> int:
    records = harness.read_records_csv(args.records)
    fit = harness.fit_rate_from_records(records, args.theory_slope, args.tolerance, x0=args.x0)
    print(json.dumps({
        "slope": fit.slope, "intercept": fit.intercept, "stderr": fit.stderr,
        "r2": fit.r2, "theory_slope": fit.theory_slope, "tolerance": fit.tolerance,
        "passed": fit.passed,
    }, sort_keys=True))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "gn": cmd_gn,
    "estimate": cmd_estimate,
    "bandwidth": cmd_bandwidth,
    "mc": cmd_mc,
    "rate-fit": cmd_rate_fit,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        _emit_error(exc)
        return 2
    except DeconvError as exc:
        _emit_error(exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _emit_error(exc)
        return 1


def _emit_error(exc: Exception) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())

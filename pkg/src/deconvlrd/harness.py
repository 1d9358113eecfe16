"""Monte Carlo experiment engine with deterministic parallel replication.

An experiment is described by a JSON-serializable config (see
``ExperimentConfig``).  For every (n, replicate) pair a child seed is derived
deterministically from (master seed, n, replicate, stream), so results are
bit-identical regardless of the worker count; replicate records are reduced
in (n, replicate) key order before anything is written.

Experiment kinds
----------------
mse-density / mse-cdf : squared-error records against the exact marginal law
clt                   : standardized replicates for normality checks
coverage              : plug-in confidence intervals against the truth
var-law               : replicate estimates for variance-versus-theory ratios
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from scipy import special, stats

from . import bandwidth as bw
from . import estimators as est
from . import noise as noise_mod
from . import process as proc
from .errors import ConfigurationError, DataError, ParameterError
from .kernel import D1 as kernel_D1
from .kernel import GnTable, GridConfig, build_gn, default_kernel, loglog_fit

RECORD_FIELDS = (
    "experiment_id", "replicate", "n", "h", "x0",
    "estimate", "truth", "squared_error", "standardized", "seed",
)

_CHUNK = 64  # replicates per parallel work item

EXPERIMENT_KINDS = ("mse-density", "mse-cdf", "clt", "coverage", "var-law")
BANDWIDTH_RULES = (
    "fixed", "iid-like", "auto-density", "strong-lrd", "cdf-lrd",
    "supersmooth", "undersmoothed",
)


@dataclass(frozen=True)
class McRecord:
    """One Monte Carlo replicate outcome with full provenance."""

    experiment_id: str
    replicate: int
    n: int
    h: float
    x0: float
    estimate: float
    truth: float
    squared_error: float
    standardized: float | None
    seed: int
    ci_lo: float | None = None  # coverage experiments only; not serialized
    ci_hi: float | None = None


@dataclass(frozen=True)
class RateFit:
    """Log-log regression of mean squared error on sample size."""

    slope: float
    intercept: float
    stderr: float
    r2: float
    theory_slope: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment (JSON keys match fields)."""

    experiment_id: str
    kind: str
    process: dict
    noise: str
    x0: tuple[float, ...]
    n_grid: tuple[int, ...]
    bandwidth: dict
    replicates: int
    master_seed: int
    estimator: str = "density"
    innovation_variance: float = 1.0
    pilot_C: float = 1.0
    level: float = 0.95
    out: str | None = None

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        errors = validate_config_dict(raw)
        if errors:
            raise ConfigurationError("; ".join(errors))
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        kwargs = {k: v for k, v in raw.items() if k in known}
        kwargs["x0"] = tuple(float(v) for v in raw["x0"])
        kwargs["n_grid"] = tuple(int(v) for v in raw["n_grid"])
        return ExperimentConfig(**kwargs)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "kind": self.kind,
            "process": dict(self.process),
            "noise": self.noise,
            "x0": list(self.x0),
            "n_grid": list(self.n_grid),
            "bandwidth": dict(self.bandwidth),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "estimator": self.estimator,
            "innovation_variance": self.innovation_variance,
            "pilot_C": self.pilot_C,
            "level": self.level,
            "out": self.out,
        }


def validate_config_dict(raw: dict) -> list[str]:
    """Field-wise validation; messages carry a JSON pointer to the culprit."""
    errors: list[str] = []

    def need(key: str, test, message: str) -> None:
        if key not in raw:
            errors.append(f"/{key}: missing")
        elif not test(raw[key]):
            errors.append(f"/{key}: {message}")

    need("experiment_id", lambda v: isinstance(v, str) and v, "must be a non-empty string")
    need("kind", lambda v: v in EXPERIMENT_KINDS, f"must be one of {EXPERIMENT_KINDS}")
    need("process", lambda v: isinstance(v, dict) and "kind" in v, "must be an object with 'kind'")
    need("noise", lambda v: isinstance(v, str), "must be a noise spec string")
    need("x0", lambda v: isinstance(v, (list, tuple)) and len(v) >= 1, "must be a non-empty list")
    need(
        "n_grid",
        lambda v: isinstance(v, (list, tuple))
        and len(v) >= 1
        and all(int(a) >= 2 for a in v)
        and list(v) == sorted(set(int(a) for a in v)),
        "must be a strictly increasing list of integers >= 2",
    )
    need(
        "bandwidth",
        lambda v: isinstance(v, dict) and v.get("rule") in BANDWIDTH_RULES,
        f"rule must be one of {BANDWIDTH_RULES}",
    )
    need("replicates", lambda v: isinstance(v, int) and v >= 2, "must be an integer >= 2")
    need("master_seed", lambda v: isinstance(v, int), "must be an integer")
    if isinstance(raw.get("bandwidth"), dict) and raw["bandwidth"].get("rule") == "fixed":
        if not raw["bandwidth"].get("h", 0) > 0:
            errors.append("/bandwidth/h: fixed rule requires h > 0")
    if isinstance(raw.get("process"), dict):
        p = raw["process"]
        if p.get("kind") == "lrd-power" and not (0.5 < p.get("gamma", 0) < 1.0):
            errors.append("/process/gamma: must lie in (1/2, 1)")
    if "noise" in raw and isinstance(raw["noise"], str):
        try:
            noise_mod.parse_noise_spec(raw["noise"])
        except Exception as exc:
            errors.append(f"/noise: {exc}")
    return errors


def child_seed(master_seed: int, n: int, replicate: int, stream: int) -> int:
    """64-bit child seed derived from the (master, n, replicate, stream) counter.

    Distinct counters map to distinct SeedSequence spawn keys, so streams
    never collide by construction.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(n, replicate, stream))
    return int(ss.generate_state(1, np.uint64)[0])


# -- per-n experiment context -------------------------------------------------


def _build_process_spec(process: dict, n: int) -> proc.CoefficientSequence:
    kind = process["kind"]
    if kind == "iid":
        return proc.build_coefficients(proc.KIND_FINITE, weights=(1.0,))
    if kind == "lrd-power":
        M = int(process.get("M") or proc.default_truncation(n))
        return proc.build_coefficients(proc.KIND_LRD, gamma=float(process["gamma"]), M=M)
    if kind == "srd-geometric":
        phi = float(process["phi"])
        M = int(process.get("M") or max(64, math.ceil(math.log(1e-16) / math.log(abs(phi)))))
        return proc.build_coefficients(proc.KIND_GEOMETRIC, phi=phi, M=M)
    if kind == "srd-finite":
        return proc.build_coefficients(proc.KIND_FINITE, weights=process["weights"])
    raise ConfigurationError(f"/process/kind: unknown process kind {kind!r}")


def _resolve_bandwidth(cfg: ExperimentConfig, n: int, beta: float | None,
                       gamma: float | None, sigma_sq: float | None,
                       noise_cls: noise_mod.SmoothnessClass, kernel_d: float) -> float:
    b = cfg.bandwidth
    rule = b["rule"]
    C = float(b.get("C", 1.0))
    if rule == "fixed":
        return float(b["h"])
    if rule == "iid-like":
        return bw.bw_density(n, _need_beta(beta), None, C).h
    if rule == "auto-density":
        return bw.bw_density(n, _need_beta(beta), gamma, C).h
    if rule == "strong-lrd":
        if gamma is None:
            raise ConfigurationError("/bandwidth: strong-lrd rule requires an LRD process")
        expo = (2.0 * gamma - 1.0) / (2.0 * (2.0 + _need_beta(beta)))
        return C * n ** (-expo)
    if rule == "undersmoothed":
        return bw.bw_density(n, _need_beta(beta), None, C).h / math.log(n)
    if rule == "cdf-lrd":
        if sigma_sq is None:
            raise ConfigurationError("/bandwidth: cdf-lrd rule requires sigma_n1_sq")
        return bw.bw_cdf(n, _need_beta(beta), sigma_sq, C).h
    if rule == "supersmooth":
        if noise_cls.tag != noise_mod.SUPERSMOOTH:
            raise ConfigurationError("/bandwidth: supersmooth rule requires supersmooth noise")
        theta = float(b["theta"])
        g = gamma if gamma is not None else 0.999
        return bw.bw_supersmooth(n, kernel_d, noise_cls.a, noise_cls.beta, theta, g).h
    raise ConfigurationError(f"/bandwidth/rule: unknown rule {rule!r}")


def _need_beta(beta: float | None) -> float:
    if beta is None:
        raise ConfigurationError("/bandwidth: rule needs an ordinary smooth noise (beta)")
    return beta


@dataclass(frozen=True)
class _CellContext:
    """Everything a worker needs for one sample size n (pure data)."""

    n: int
    h: float
    weights: np.ndarray
    innovation_variance: float
    noise_kind: str
    noise_scale: float
    noise_shape: float
    table_x: np.ndarray
    table_gn: np.ndarray
    table_Gn: np.ndarray
    table_total: float
    x0: tuple[float, ...]
    truths: tuple[float, ...]
    estimator: str
    kind: str
    # clt fields
    expected: tuple[float, ...] = ()
    rate_factor: float = 0.0
    asym_sd: tuple[float, ...] = ()
    # coverage fields
    pilot_b: float = 0.0
    D1_value: float = 0.0
    level: float = 0.0
    k_table_x: np.ndarray | None = None
    k_table_gn: np.ndarray | None = None
    beta: float = 0.0


def _run_chunk(payload: tuple) -> list[tuple]:
    """Worker: compute rows for replicates [rep_lo, rep_hi) at one n."""
    ctx, experiment_id, master_seed, rep_lo, rep_hi = payload
    noise = _noise_from_fields(ctx.noise_kind, ctx.noise_scale, ctx.noise_shape)
    rows: list[tuple] = []
    n, h = ctx.n, ctx.h
    for rep in range(rep_lo, rep_hi):
        proc_seed = child_seed(master_seed, n, rep, 0)
        rng = np.random.default_rng(proc_seed)
        z = rng.standard_normal(n + len(ctx.weights) - 1) * math.sqrt(ctx.innovation_variance)
        x = proc._convolve_valid(z, ctx.weights)
        if noise is None:
            y = x
        else:
            noise_seed = child_seed(master_seed, n, rep, 1)
            y = x + noise.sample(n, noise_seed)
        for i, x0 in enumerate(ctx.x0):
            args = (x0 - y) / h
            if ctx.estimator == "cdf":
                value = float(
                    np.sum(np.interp(args, ctx.table_x, ctx.table_Gn,
                                     left=0.0, right=ctx.table_total))
                ) / n
            else:
                value = float(
                    np.sum(np.interp(args, ctx.table_x, ctx.table_gn, left=0.0, right=0.0))
                ) / (n * h)
            truth = ctx.truths[i]
            standardized = None
            lo = hi = None
            if ctx.kind == "clt":
                standardized = ctx.rate_factor * (value - ctx.expected[i]) / ctx.asym_sd[i]
            elif ctx.kind == "coverage":
                fy_hat = float(
                    np.sum(np.interp((x0 - y) / ctx.pilot_b, ctx.k_table_x, ctx.k_table_gn,
                                     left=0.0, right=0.0))
                ) / (n * ctx.pilot_b)
                lo, hi = bw.confidence_interval(
                    value, fy_hat, ctx.D1_value, n, h, ctx.beta, ctx.level
                )
            rows.append(
                (experiment_id, rep, n, h, x0, value, truth,
                 (value - truth) ** 2, standardized, proc_seed, lo, hi)
            )
    return rows


def _noise_from_fields(kind: str, scale: float, shape: float) -> noise_mod.NoiseModel | None:
    if kind == "none":
        return None
    return noise_mod.NoiseModel(kind, scale=scale, shape=shape)


def _clt_mode(cfg: ExperimentConfig, gamma: float | None, beta: float) -> str:
    if cfg.estimator == "cdf":
        return "cdf"
    if gamma is None:
        return "moderate"
    regime = bw.classify_regime(gamma, beta)
    return "strong" if regime == "strong" else "moderate"


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: list[McRecord]
    summary: dict


def run_experiment(
    config: ExperimentConfig,
    *,
    workers: int | None = None,
    grid: GridConfig | None = None,
    progress: bool = False,
) -> ExperimentResult:
    """Run all replicates of an experiment and aggregate the summary.

    Results are bit-identical for any worker count: each replicate is a
    pure function of (master seed, n, replicate), and records are reduced
    in key order.
    """
    if config.kind not in EXPERIMENT_KINDS:
        raise ConfigurationError(f"/kind: unknown experiment kind {config.kind!r}")
    workers = _resolve_workers(workers)
    kernel = default_kernel()
    noise = noise_mod.parse_noise_spec(config.noise)
    noise_cls = noise_mod.classify(noise, self_check=False)
    beta = noise_cls.beta if noise_cls.tag == noise_mod.ORDINARY_SMOOTH else None
    gamma = config.process.get("gamma") if config.process.get("kind") == "lrd-power" else None

    if config.kind in ("clt", "coverage") and config.estimator == "density":
        pass
    if config.kind == "coverage" and noise_cls.tag != noise_mod.ORDINARY_SMOOTH:
        raise ConfigurationError("/kind: coverage experiments need ordinary smooth noise")

    k_table: GnTable | None = None
    if config.kind == "coverage" or (config.kind == "clt" and config.estimator == "cdf"):
        k_table = build_gn(kernel, noise_mod.no_noise(), 1.0, grid)

    contexts: list[_CellContext] = []
    sigma_by_n: dict[int, float] = {}
    for n in config.n_grid:
        spec_n = _build_process_spec(config.process, n)
        sigma_x = math.sqrt(config.innovation_variance * spec_n.sum_of_squares())
        sigma_sq = None
        if config.kind in ("clt", "var-law") or config.bandwidth["rule"] == "cdf-lrd":
            rho = proc.autocovariance(spec_n, config.innovation_variance, n - 1)
            sigma_sq = proc.sigma_n1_sq(rho, n)
            sigma_by_n[n] = sigma_sq
        h = _resolve_bandwidth(config, n, beta, gamma, sigma_sq, noise_cls, kernel.d)
        table = build_gn(kernel, noise, h, grid)

        if config.estimator == "cdf" or config.kind == "mse-cdf":
            truths = tuple(float(stats.norm.cdf(x0, scale=sigma_x)) for x0 in config.x0)
            estimator = "cdf"
        else:
            truths = tuple(float(stats.norm.pdf(x0, scale=sigma_x)) for x0 in config.x0)
            estimator = "density"

        ctx = _CellContext(
            n=n, h=h, weights=spec_n.weights,
            innovation_variance=config.innovation_variance,
            noise_kind=noise.kind, noise_scale=noise.scale, noise_shape=noise.shape,
            table_x=table.x, table_gn=table.gn, table_Gn=table.Gn, table_total=table.total,
            x0=config.x0, truths=truths, estimator=estimator, kind=config.kind,
        )

        if config.kind == "clt":
            if beta is None:
                raise ConfigurationError("/kind: clt experiments need ordinary smooth noise")
            mode = _clt_mode(config, gamma, beta)
            fY = noise_mod.convolved_density(sigma_x, noise, config.x0)
            fYp = noise_mod.convolved_density_prime(sigma_x, noise, config.x0)
            d1 = kernel_D1(kernel, noise_cls)
            expected = []
            asym_sd = []
            rate = None
            for i, x0 in enumerate(config.x0):
                if estimator == "cdf":
                    expected.append(est.expected_cdf_estimate(kernel, sigma_x, h, x0, k_table))
                else:
                    expected.append(est.expected_density_estimate(kernel, sigma_x, h, x0))
                scale = bw.clt_scaling(
                    mode, n, h, beta, math.sqrt(sigma_sq),
                    D1=d1, fY=float(fY[i]), fYprime=float(fYp[i]),
                )
                if scale.degenerate or scale.asym_var <= 0:
                    raise DataError(
                        f"degenerate CLT limit at x0={x0}: asymptotic variance is zero"
                    )
                rate = scale.rate_factor
                asym_sd.append(math.sqrt(scale.asym_var))
            ctx = replace(ctx, expected=tuple(expected), rate_factor=float(rate),
                          asym_sd=tuple(asym_sd))
        elif config.kind == "coverage":
            d1 = kernel_D1(kernel, noise_cls)
            pilot_b = bw.bw_pilot_kde(n, config.pilot_C).h
            ctx = replace(
                ctx, pilot_b=pilot_b, D1_value=d1, level=config.level,
                k_table_x=k_table.x, k_table_gn=k_table.gn, beta=beta,
            )
        contexts.append(ctx)

    tasks = []
    for ctx in contexts:
        for lo in range(0, config.replicates, _CHUNK):
            hi = min(lo + _CHUNK, config.replicates)
            tasks.append((ctx, config.experiment_id, config.master_seed, lo, hi))

    chunk_rows: dict[tuple[int, int], list[tuple]] = {}
    if workers <= 1:
        for t in tasks:
            chunk_rows[(t[0].n, t[3])] = _run_chunk(t)
            _progress(progress, len(chunk_rows), len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for t, rows in zip(tasks, pool.map(_run_chunk, tasks, chunksize=1)):
                chunk_rows[(t[0].n, t[3])] = rows
                _progress(progress, len(chunk_rows), len(tasks))

    records: list[McRecord] = []
    for key in sorted(chunk_rows):
        for row in chunk_rows[key]:
            records.append(
                McRecord(
                    experiment_id=row[0], replicate=row[1], n=row[2], h=row[3], x0=row[4],
                    estimate=row[5], truth=row[6], squared_error=row[7],
                    standardized=row[8], seed=row[9], ci_lo=row[10], ci_hi=row[11],
                )
            )
    records.sort(key=lambda r: (r.n, r.replicate, r.x0))

    summary = _summarize(config, records, sigma_by_n)
    return ExperimentResult(config=config, records=records, summary=summary)


def _progress(enabled: bool, done: int, total: int) -> None:
    if enabled:
        print(f"chunk {done}/{total}", file=sys.stderr, flush=True)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("DECONV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"DECONV_THREADS must be an integer, got {env!r}")
    return 1


# -- aggregation -------------------------------------------------------------


def _summarize(cfg: ExperimentConfig, records: list[McRecord],
               sigma_by_n: dict[int, float]) -> dict:
    cells = []
    for n in cfg.n_grid:
        for x0 in cfg.x0:
            sel = [r for r in records if r.n == n and r.x0 == x0]
            estimates = np.array([r.estimate for r in sel])
            cell: dict[str, Any] = {
                "n": n,
                "x0": x0,
                "h": sel[0].h,
                "replicates": len(sel),
                "mean_estimate": float(np.mean(estimates)),
                "var_estimate": float(np.var(estimates, ddof=1)),
                "mean_squared_error": float(np.mean([r.squared_error for r in sel])),
                "truth": sel[0].truth,
            }
            if cfg.kind == "clt":
                cell.update(clt_check([r.standardized for r in sel]))
            if cfg.kind == "coverage":
                cell["coverage"] = coverage_check(sel, cfg.level)
            if n in sigma_by_n:
                cell["sigma_n1_sq"] = sigma_by_n[n]
            cells.append(cell)

    summary: dict[str, Any] = {
        "experiment_id": cfg.experiment_id,
        "kind": cfg.kind,
        "estimator": cfg.estimator,
        "noise": cfg.noise,
        "cells": cells,
    }
    if cfg.kind == "var-law":
        summary["var_law"] = _var_law_report(cfg, cells, sigma_by_n)
    return summary


def _var_law_report(cfg: ExperimentConfig, cells: list[dict],
                    sigma_by_n: dict[int, float]) -> list[dict]:
    kernel = default_kernel()
    noise = noise_mod.parse_noise_spec(cfg.noise)
    noise_cls = noise_mod.classify(noise, self_check=False)
    if noise_cls.tag != noise_mod.ORDINARY_SMOOTH:
        raise ConfigurationError("var-law experiments need ordinary smooth noise")
    d1 = kernel_D1(kernel, noise_cls)
    beta = noise_cls.beta
    report = []
    for cell in cells:
        n, x0, h = cell["n"], cell["x0"], cell["h"]
        spec_n = _build_process_spec(cfg.process, n)
        sigma_x = math.sqrt(cfg.innovation_variance * spec_n.sum_of_squares())
        fY = float(noise_mod.convolved_density(sigma_x, noise, x0)[0])
        fYp = float(noise_mod.convolved_density_prime(sigma_x, noise, x0)[0])
        sigma_sq = sigma_by_n[n]
        if cfg.estimator == "cdf":
            theory = est.theory_mse_cdf(fY, 0.0, kernel.mu2, n, h, beta, sigma_sq)
            terms = {"var_lrd_term": theory.var_lrd_term}
        else:
            theory = est.theory_mse_density(
                fY, fYp, 0.0, kernel.mu2, d1, n, h, beta, sigma_sq
            )
            terms = {"var_iid_term": theory.var_iid_term, "var_lrd_term": theory.var_lrd_term}
        total = sum(terms.values())
        emp = cell["var_estimate"]
        report.append(
            {
                "n": n,
                "x0": x0,
                "h": h,
                "var_empirical": emp,
                "var_theory_terms": terms,
                "var_theory_total": total,
                "ratio_total": emp / total if total > 0 else float("nan"),
                "ratio_per_term": {k: emp / v if v > 0 else float("nan")
                                   for k, v in terms.items()},
            }
        )
    return report


def fit_rate(
    ns: Sequence[int],
    mean_squared_errors: Sequence[float],
    theory_slope: float,
    tolerance: float,
) -> RateFit:
    """OLS of log mean squared error on log n against a theoretical slope.

    Needs at least 4 distinct sample sizes spanning two octaves, and every
    cell mean must be positive.
    """
    ns = np.asarray(ns, dtype=float)
    mse = np.asarray(mean_squared_errors, dtype=float)
    if len(set(ns.tolist())) < 4:
        raise DataError("rate fit needs >= 4 distinct sample sizes")
    if ns.max() / ns.min() < 4.0:
        raise DataError("rate fit needs sample sizes spanning >= 2 octaves")
    if np.any(mse <= 0):
        raise DataError("non-positive mean squared error cell")
    slope, intercept, stderr, r2 = loglog_fit(ns, mse)
    return RateFit(
        slope=slope, intercept=intercept, stderr=stderr, r2=r2,
        theory_slope=theory_slope, tolerance=tolerance,
        passed=abs(slope - theory_slope) <= tolerance,
    )


def fit_rate_from_records(
    records: Sequence[McRecord], theory_slope: float, tolerance: float,
    x0: float | None = None,
) -> RateFit:
    """Group records by n (optionally filtering one x0) and fit the rate."""
    sel = [r for r in records if x0 is None or r.x0 == x0]
    if not sel:
        raise DataError("no records matched the rate-fit filter")
    ns = sorted({r.n for r in sel})
    mses = [float(np.mean([r.squared_error for r in sel if r.n == n])) for n in ns]
    return fit_rate(ns, mses, theory_slope, tolerance)


def clt_check(standardized: Sequence[float]) -> dict:
    """Kolmogorov-Smirnov distance to N(0,1) plus first two moments."""
    z = np.sort(np.asarray(standardized, dtype=float))
    if z.size == 0 or not np.all(np.isfinite(z)):
        raise DataError("standardized sample must be non-empty and finite")
    n = z.size
    cdf = special.ndtr(z)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return {
        "ks_distance": float(max(upper, lower)),
        "mean": float(np.mean(z)),
        "sd": float(np.std(z, ddof=1)) if n > 1 else 0.0,
    }


def coverage_check(records: Sequence[McRecord], level: float) -> float:
    """Fraction of replicates whose interval contains the truth."""
    hits = 0
    total = 0
    for r in records:
        if r.ci_lo is None or r.ci_hi is None:
            raise DataError("coverage check needs records with interval bounds")
        total += 1
        hits += int(r.ci_lo <= r.truth <= r.ci_hi)
    if total == 0:
        raise DataError("no records with intervals")
    return hits / total


def var_law_check(config: ExperimentConfig, *, workers: int | None = None) -> list[dict]:
    """Run a var-law experiment and return the per-cell ratio report."""
    if config.kind != "var-law":
        raise ConfigurationError("/kind: var_law_check requires kind = var-law")
    return run_experiment(config, workers=workers).summary["var_law"]


# -- persistence -------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_records_csv(records: Sequence[McRecord], path: str) -> None:
    """Atomically write the records CSV (temp file + rename)."""
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RECORD_FIELDS)
            for r in records:
                writer.writerow(
                    [r.experiment_id, r.replicate, r.n, _fmt(r.h), _fmt(r.x0),
                     _fmt(r.estimate), _fmt(r.truth), _fmt(r.squared_error),
                     _fmt(r.standardized), r.seed]
                )
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def read_records_csv(path: str) -> list[McRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                McRecord(
                    experiment_id=row["experiment_id"],
                    replicate=int(row["replicate"]),
                    n=int(row["n"]),
                    h=float(row["h"]),
                    x0=float(row["x0"]),
                    estimate=float(row["estimate"]),
                    truth=float(row["truth"]),
                    squared_error=float(row["squared_error"]),
                    standardized=float(row["standardized"]) if row["standardized"] else None,
                    seed=int(row["seed"]),
                )
            )
    return records


def write_summary_json(summary: dict, path: str) -> None:
    """Atomically write the summary JSON with stable key order."""
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)

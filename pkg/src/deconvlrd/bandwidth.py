"""Dependence-regime classification, bandwidth rules, CLT scalings, intervals.

The moderate/strong boundary for the density problem sits at

    gamma* = (4 (2 + beta) + 1) / (4 (2 + beta) + 2),

above which the i.i.d.-style bandwidth n^(-1/(5+2beta)) is admissible and
below which the dependence exponent enters the bandwidth itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ParameterError

BOUNDARY_TOL = 1e-12

RULE_IID = "iid-like"
RULE_STRONG = "strong-lrd"
RULE_CDF = "cdf-lrd"
RULE_SUPERSMOOTH = "supersmooth"
RULE_PILOT = "pilot-kde"
RULE_PLUGIN = "plugin-optimal"


@dataclass(frozen=True)
class BandwidthPlan:
    """A chosen bandwidth with the rule and regime that produced it."""

    h: float
    rule: str
    regime: str = ""
    C: float = 1.0
    theta: float | None = None


@dataclass(frozen=True)
class CltScaling:
    """Normalization of (fhat - E fhat): multiply by rate_factor, compare to
    a centered normal with variance asym_var."""

    regime: str
    rate_factor: float
    asym_var: float
    variance_formula: str  # "D1*fY" | "fYprime_sq" | "fY_sq"
    degenerate: bool = False


def regime_threshold(beta: float) -> float:
    """Critical dependence exponent gamma* separating moderate from strong."""
    if beta < 1:
        raise ParameterError(f"beta must be >= 1, got {beta}")
    q = 4.0 * (2.0 + beta)
    return (q + 1.0) / (q + 2.0)


def classify_regime(gamma: float, beta: float) -> str:
    """'moderate' above gamma*, 'strong' below, 'boundary' at equality."""
    if not (0.5 < gamma < 1.0):
        raise ParameterError(f"gamma must be in (1/2, 1), got {gamma}")
    gstar = regime_threshold(beta)
    if abs(gamma - gstar) < BOUNDARY_TOL:
        return "boundary"
    return "moderate" if gamma > gstar else "strong"


def iid_bandwidth_admissible(gamma: float, beta: float) -> bool:
    """Exponent inequality -1/(5+2beta) < -(2-2gamma): the i.i.d.-style
    bandwidth decays faster than the dependence scale n^(-2(1-gamma))."""
    return -1.0 / (5.0 + 2.0 * beta) < -(2.0 - 2.0 * gamma)


def bw_density(n: int, beta: float, gamma: float | None, C: float = 1.0) -> BandwidthPlan:
    """Density bandwidth: regime-dependent power of n.

    moderate (or gamma None, i.i.d. data): h = C n^(-1/(5+2beta));
    strong: h = C n^(-(2gamma-1)/(2(2+beta))).  At the boundary the two
    rates coincide up to constants and the i.i.d.-style rule is used.
    """
    _check_bw_inputs(n, C, minimum_n=2)
    if gamma is None:
        return BandwidthPlan(C * n ** (-1.0 / (5.0 + 2.0 * beta)), RULE_IID, "moderate", C)
    regime = classify_regime(gamma, beta)
    if regime == "strong":
        expo = (2.0 * gamma - 1.0) / (2.0 * (2.0 + beta))
        return BandwidthPlan(C * n ** (-expo), RULE_STRONG, regime, C)
    return BandwidthPlan(C * n ** (-1.0 / (5.0 + 2.0 * beta)), RULE_IID, regime, C)


def bw_cdf(n: int, beta: float, sigma_n1_sq: float, C: float = 1.0) -> BandwidthPlan:
    """Distribution-function bandwidth h = C (sigma_n1^2 / n^2)^(1/(2(beta+2)))."""
    _check_bw_inputs(n, C, minimum_n=2)
    if not sigma_n1_sq > 0:
        raise ParameterError(f"sigma_n1_sq must be > 0, got {sigma_n1_sq}")
    h = C * (sigma_n1_sq / n**2) ** (1.0 / (2.0 * (beta + 2.0)))
    return BandwidthPlan(h, RULE_CDF, "", C)


def bw_supersmooth(
    n: int, d: float, a: float, beta: float, theta: float, gamma: float
) -> BandwidthPlan:
    """Supersmooth bandwidth h = d (2a / ((1-theta) ln n))^(1/beta).

    theta must lie in (2 - 2 gamma, 1); the lower bound keeps the
    dependence-driven variance term of smaller order than the bias.
    """
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    lo = 2.0 - 2.0 * gamma
    if not (lo < theta < 1.0):
        raise ParameterError(
            f"theta must lie in (2 - 2 gamma, 1) = ({lo:g}, 1), got {theta}"
        )
    h = d * (2.0 * a / ((1.0 - theta) * math.log(n))) ** (1.0 / beta)
    return BandwidthPlan(h, RULE_SUPERSMOOTH, "", 1.0, theta)


def bw_pilot_kde(n: int, C: float = 1.0) -> BandwidthPlan:
    """Pilot bandwidth b = C n^(-1/5) for the ordinary KDE of f_Y."""
    _check_bw_inputs(n, C, minimum_n=2)
    return BandwidthPlan(C * n ** (-0.2), RULE_PILOT, "", C)


def bw_plugin_optimal(
    fY_x0: float, fxx_x0: float, mu2: float, D1: float, n: int, beta: float
) -> BandwidthPlan:
    """Exact minimizer of A h^4 + B / (n h^(2beta+1)) with oracle constants.

    A = (f''(x0) mu2 / 2)^2 and B = D1 f_Y(x0); the minimizer is
    h = ((2beta+1) B / (4 A n))^(1/(2beta+5)).
    """
    _check_bw_inputs(n, 1.0, minimum_n=1)
    if fxx_x0 == 0.0:
        raise ParameterError("f''(x0) = 0: the two-term expansion has no interior minimizer")
    A = (0.5 * fxx_x0 * mu2) ** 2
    B = D1 * fY_x0
    h = ((2.0 * beta + 1.0) * B / (4.0 * A * n)) ** (1.0 / (2.0 * beta + 5.0))
    return BandwidthPlan(h, RULE_PLUGIN, "", 1.0)


def _check_bw_inputs(n: int, C: float, minimum_n: int) -> None:
    if n < minimum_n:
        raise ParameterError(f"n must be >= {minimum_n}, got {n}")
    if not C > 0:
        raise ParameterError(f"bandwidth constant C must be > 0, got {C}")


def clt_scaling(
    mode: str,
    n: int,
    h: float,
    beta: float,
    sigma_n1: float,
    D1: float | None = None,
    fY: float | None = None,
    fYprime: float | None = None,
) -> CltScaling:
    """Normalization for the centered estimator under the requested limit.

    mode "moderate": rate n^(1/2) h^(beta+1/2), variance D1 f_Y(x0).
    mode "strong":   rate n h^beta / sigma_n1, variance (f_Y'(x0))^2.
    mode "cdf":      rate n h^beta / sigma_n1, variance (f_Y(x0))^2.
    """
    if not (n >= 1 and h > 0):
        raise ParameterError("need n >= 1 and h > 0")
    if mode == "moderate":
        if D1 is None or fY is None:
            raise ParameterError("moderate scaling needs D1 and fY")
        return CltScaling("moderate", math.sqrt(n) * h ** (beta + 0.5), D1 * fY, "D1*fY")
    if mode == "strong":
        if fYprime is None:
            raise ParameterError("strong scaling needs fYprime")
        if h * sigma_n1**2 / n < 0.1:
            warnings.warn(
                "strong-dependence scaling requested but h sigma_n1^2 / n < 0.1: "
                "the sample sits in the small-bandwidth regime",
                RuntimeWarning,
                stacklevel=2,
            )
        return CltScaling(
            "strong", n * h**beta / sigma_n1, fYprime**2, "fYprime_sq",
            degenerate=(fYprime == 0.0),
        )
    if mode == "cdf":
        if fY is None:
            raise ParameterError("cdf scaling needs fY")
        return CltScaling("cdf", n * h**beta / sigma_n1, fY**2, "fY_sq")
    raise ParameterError(f"unknown CLT mode {mode!r}")


def normal_quantile(p: float) -> float:
    """Standard normal quantile via a rational approximation plus one Halley
    refinement with erfc; absolute error well below 1e-8."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"quantile level must be in (0, 1), got {p}")
    # rational approximation (relative error ~1.15e-9 before refinement)
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    # one Halley step against the exact CDF
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def confidence_interval(
    fhat: float,
    kde_fY: float,
    D1: float,
    n: int,
    h: float,
    beta: float,
    level: float,
) -> tuple[float, float]:
    """Plug-in normal interval fhat +- z sqrt(D1 fYhat) / (n^(1/2) h^(beta+1/2)).

    Valid for undersmoothed bandwidths in the moderate regime (caller
    asserted).  Non-positive density plug-ins are floored at 1e-6.
    """
    if not (0.0 <= level < 1.0):
        raise ParameterError(f"level must be in [0, 1), got {level}")
    if kde_fY <= 0.0:
        warnings.warn(
            "non-positive density plug-in floored at 1e-6", RuntimeWarning, stacklevel=2
        )
        kde_fY = 1e-6
    if level == 0.0:
        return (fhat, fhat)
    z = normal_quantile(0.5 * (1.0 + level))
    half = z * math.sqrt(D1 * kde_fY) / (math.sqrt(n) * h ** (beta + 0.5))
    return (fhat - half, fhat + half)

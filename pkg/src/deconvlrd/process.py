"""Stationary linear processes x_j = sum_k c_k z_{j-k} and their second-order theory.

Three coefficient families are supported:

* ``lrd-power``     : c_0 = 1, c_k = k**(-gamma) with gamma in (1/2, 1); the
  covariances decay hyperbolically and are not summable (long range
  dependence).
* ``srd-geometric`` : c_k = phi**k, |phi| < 1 (summable, short range).
* ``srd-finite``    : an explicit finite weight vector (moving average).

All simulation is seeded and reproducible: the same (spec, innovation, n,
seed) yields a bit-identical sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, ResourceError

KIND_LRD = "lrd-power"
KIND_GEOMETRIC = "srd-geometric"
KIND_FINITE = "srd-finite"

# n + M above this would need >8 GiB of scratch for the FFT convolution.
_MAX_WORK_LENGTH = 2**29

# below this lag count the direct O(n*M) convolution beats the FFT setup cost
_DIRECT_CONV_MAX_LAG = 64


@dataclass(frozen=True)
class CoefficientSequence:
    """Truncated weight sequence c_0..c_M of a linear process.

    ``weights[0] == 1`` in every family.  For ``lrd-power`` the regular
    variation exponent ``gamma`` is kept so downstream code can derive
    theoretical rates; the slowly varying factor is fixed to the constant 1.
    """

    kind: str
    weights: np.ndarray
    gamma: float | None = None
    phi: float | None = None

    @property
    def truncation_lag(self) -> int:
        return len(self.weights) - 1

    def sum_of_squares(self) -> float:
        """sum c_k^2 over the truncated sequence (marginal variance factor)."""
        return float(np.dot(self.weights, self.weights))


@dataclass(frozen=True)
class InnovationLaw:
    """Centered i.i.d. innovation law.  v1 supports the normal family only.

    The fourth moment is finite (EZ^4 = 3 var^2), and the marginal law of the
    simulated process is exactly normal, which gives closed-form ground truth
    densities for the Monte Carlo harness.
    """

    kind: str = "standard-normal"
    variance: float = 1.0

    def __post_init__(self) -> None:
        if self.kind != "standard-normal":
            raise ParameterError(f"unsupported innovation kind {self.kind!r}")
        if not self.variance > 0:
            raise ParameterError(f"innovation variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class SeriesSample:
    """One simulated path plus everything needed to regenerate it."""

    x: np.ndarray
    spec: CoefficientSequence
    innovation: InnovationLaw
    seed: int

    def marginal_std(self) -> float:
        """Exact standard deviation of the (normal) marginal law."""
        return float(np.sqrt(self.innovation.variance * self.spec.sum_of_squares()))


def default_truncation(n: int) -> int:
    """Default truncation lag for LRD simulation: max(10*n, 1e5).

    The neglected coefficient tail perturbs rho_0 by O(M**(1-2*gamma)).
    """
    return max(10 * n, 100_000)


def build_coefficients(
    kind: str,
    *,
    gamma: float | None = None,
    phi: float | None = None,
    weights: Sequence[float] | None = None,
    M: int | None = None,
) -> CoefficientSequence:
    """Build a truncated coefficient sequence for the given family.

    Parameters
    ----------
    kind : {"lrd-power", "srd-geometric", "srd-finite"}
    gamma : float, required for "lrd-power"; must lie in (1/2, 1).
    phi : float, required for "srd-geometric"; must satisfy |phi| < 1.
    weights : sequence, required for "srd-finite"; weights[0] must be 1.
    M : int, truncation lag (>= 1 for the infinite families).

    Returns
    -------
    CoefficientSequence with ``weights`` of length M+1 and c_0 = 1.
    """
    if kind == KIND_LRD:
        if gamma is None or not (0.5 < gamma < 1.0):
            raise ParameterError(f"lrd-power requires gamma in (1/2, 1), got {gamma}")
        if M is None or M < 1:
            raise ParameterError(f"lrd-power requires truncation lag M >= 1, got {M}")
        k = np.arange(1, M + 1, dtype=float)
        w = np.concatenate(([1.0], k ** (-gamma)))
        return CoefficientSequence(kind, w, gamma=gamma)

    if kind == KIND_GEOMETRIC:
        if phi is None or not abs(phi) < 1.0:
            raise ParameterError(f"srd-geometric requires |phi| < 1, got {phi}")
        if M is None or M < 0:
            raise ParameterError(f"srd-geometric requires M >= 0, got {M}")
        w = phi ** np.arange(M + 1, dtype=float)
        seq = CoefficientSequence(kind, w, phi=phi)
        _check_srd(seq)
        return seq

    if kind == KIND_FINITE:
        if weights is None or len(weights) == 0:
            raise ParameterError("srd-finite requires a non-empty weight sequence")
        w = np.asarray(weights, dtype=float)
        if M is not None and M != len(w) - 1:
            raise ParameterError(f"M={M} inconsistent with {len(w)} explicit weights")
        seq = CoefficientSequence(kind, w)
        _check_srd(seq)
        return seq

    raise ParameterError(f"unknown coefficient kind {kind!r}")


def _check_srd(seq: CoefficientSequence) -> None:
    w = seq.weights
    if w[0] != 1.0:
        raise ParameterError(f"c_0 must equal 1, got {w[0]}")
    if not np.all(np.isfinite(w)):
        raise ParameterError("coefficients must be finite")
    if abs(float(np.sum(w))) < 1e-12:
        raise ParameterError("sum of coefficients must be nonzero for SRD sequences")


def simulate(
    spec: CoefficientSequence,
    innovation: InnovationLaw,
    n: int,
    seed: int,
    *,
    innovations: np.ndarray | None = None,
) -> SeriesSample:
    """Simulate n stationary observations of the linear process.

    Draws n + M innovations (M extra as burn-in) and convolves with the
    weights, so the output is stationary from the first index.  Fast FFT
    convolution with power-of-two padding is used unless M is tiny.

    ``innovations`` is a diagnostic hook: when given, it replaces the random
    draw (length must be n + M) and the seed is ignored.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    M = spec.truncation_lag
    total = n + M
    if total > _MAX_WORK_LENGTH:
        raise ResourceError(f"n + M = {total} exceeds the addressable budget {_MAX_WORK_LENGTH}")

    if innovations is not None:
        z = np.asarray(innovations, dtype=float)
        if len(z) != total:
            raise ParameterError(f"innovation hook must have length n + M = {total}")
    else:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(total) * np.sqrt(innovation.variance)

    x = _convolve_valid(z, spec.weights)
    return SeriesSample(x=x, spec=spec, innovation=innovation, seed=int(seed))


def _convolve_valid(z: np.ndarray, c: np.ndarray) -> np.ndarray:
    """x_i = sum_k c_k z_{i+M-k} for i = 0..n-1 (full-window outputs only)."""
    M = len(c) - 1
    n = len(z) - M
    if M <= _DIRECT_CONV_MAX_LAG:
        return np.convolve(z, c, mode="valid")
    nfft = 1 << int(np.ceil(np.log2(len(z) + M)))
    out = np.fft.irfft(np.fft.rfft(z, nfft) * np.fft.rfft(c, nfft), nfft)
    return out[M : M + n].copy()


def autocovariance(spec: CoefficientSequence, var_z: float, maxlag: int) -> np.ndarray:
    """Exact autocovariances rho_0..rho_maxlag of the truncated process.

    rho_k = var_z * sum_j c_j c_{j+k}.  For the truncated sequence this sum
    is exact at every lag; lags beyond the truncation M are exactly zero.
    """
    if maxlag < 0:
        raise ParameterError(f"maxlag must be >= 0, got {maxlag}")
    w = spec.weights
    M = spec.truncation_lag
    out = np.zeros(maxlag + 1)
    kmax = min(maxlag, M)
    if (M + 1) * (kmax + 1) <= 10_000_000:
        for k in range(kmax + 1):
            out[k] = np.dot(w[: M + 1 - k], w[k:])
    else:
        nfft = 1 << int(np.ceil(np.log2(2 * (M + 1))))
        spec_pow = np.abs(np.fft.rfft(w, nfft)) ** 2
        acf = np.fft.irfft(spec_pow, nfft)
        out[: kmax + 1] = acf[: kmax + 1]
    return var_z * out


def lrd_autocovariance_exact(
    gamma: float, maxlag: int, var_z: float = 1.0, n_terms: int = 2**20
) -> np.ndarray:
    """Autocovariances of the untruncated power-law sequence c_k = k**(-gamma).

    rho_k = var_z * (c_k + sum_{j>=1} j**(-gamma) (j+k)**(-gamma)).  The
    infinite sum is split into an explicit partial sum over j <= n_terms
    (evaluated for all lags at once by FFT cross-correlation) plus the
    Euler-Maclaurin midpoint tail expanded in powers of k/n_terms.  Accurate
    to ~1e-10 absolute for maxlag << n_terms.
    """
    if not (0.5 < gamma < 1.0):
        raise ParameterError(f"gamma must be in (1/2, 1), got {gamma}")
    if maxlag >= n_terms // 8:
        raise ParameterError(f"maxlag {maxlag} too large for n_terms {n_terms}")
    J = int(n_terms)
    a = np.arange(1, J + 1, dtype=float) ** (-gamma)
    b = np.arange(1, J + maxlag + 1, dtype=float) ** (-gamma)
    nfft = 1 << int(np.ceil(np.log2(len(b) + len(a))))
    # cross-correlation S(k) = sum_j a_j b_{j+k} via conjugate-product FFT
    fa = np.fft.rfft(a, nfft)
    fb = np.fft.rfft(b, nfft)
    corr = np.fft.irfft(np.conj(fa) * fb, nfft)
    partial = corr[: maxlag + 1]

    # midpoint tail: sum_{j>J} j^-g (j+k)^-g ~ int_{J+1/2}^inf x^-g (x+k)^-g dx,
    # integral expanded binomially in k/x (k/X <= 1/8 by the maxlag guard)
    X = J + 0.5
    k = np.arange(maxlag + 1, dtype=float)
    tail = np.zeros(maxlag + 1)
    coef = 1.0
    for m in range(12):
        if m > 0:
            coef *= -(gamma + m - 1) / m
        tail += coef * k**m * X ** (1.0 - 2.0 * gamma - m) / (2.0 * gamma - 1.0 + m)

    c_k = np.concatenate(([1.0], np.arange(1, maxlag + 1, dtype=float) ** (-gamma)))
    return var_z * (c_k + partial + tail)


def sigma_n1_sq(rho: np.ndarray, n: int, *, tail_exponent: float | None = None) -> float:
    """Variance of the n-term partial sum: n rho_0 + 2 sum_{k<n} (n-k) rho_k.

    ``rho`` must hold at least n autocovariances; alternatively pass
    ``tail_exponent=gamma`` and the missing tail is extrapolated with the
    power law rho_k ~ rho_last (k / k_last)**(1 - 2 gamma).
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rho = np.asarray(rho, dtype=float)
    have = len(rho)
    if have >= n:
        k = np.arange(1, n)
        return float(n * rho[0] + 2.0 * np.sum((n - k) * rho[1:n]))
    if tail_exponent is None:
        raise ParameterError(f"need {n} autocovariances, got {have} and no tail exponent")
    g = tail_exponent
    k = np.arange(1, have)
    s = n * rho[0] + 2.0 * np.sum((n - k) * rho[1:])
    k_tail = np.arange(have, n, dtype=float)
    rho_tail = rho[-1] * (k_tail / (have - 1)) ** (1.0 - 2.0 * g)
    s += 2.0 * np.sum((n - k_tail) * rho_tail)
    return float(s)


def series_to_csv(sample: SeriesSample, path: str, noisy: np.ndarray | None = None) -> None:
    """Write ``index,x`` rows (plus ``y`` when noisy values are given).

    Numbers are rendered with 17 significant digits so the file round-trips
    to the exact float64 values.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if noisy is None:
            writer.writerow(["index", "x"])
            for i, v in enumerate(sample.x):
                writer.writerow([i, format(v, ".17g")])
        else:
            if len(noisy) != len(sample.x):
                raise ParameterError("noisy column length mismatch")
            writer.writerow(["index", "x", "y"])
            for i, (v, w) in enumerate(zip(sample.x, noisy)):
                writer.writerow([i, format(v, ".17g"), format(w, ".17g")])

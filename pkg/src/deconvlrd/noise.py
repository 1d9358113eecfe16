"""Measurement-error laws with exact densities, samplers and characteristic functions.

The v1 catalog is exactly four laws plus the no-noise placeholder:

==================  ============================  =======================================
spec string         characteristic function       smoothness class
==================  ============================  =======================================
``laplace:s``       1 / (1 + s^2 t^2)             ordinary smooth, beta = 2,  B1 = s^-2
``gamma:k:s``       (1 + s^2 t^2)^(-k/2)          ordinary smooth, beta = k,  B1 = s^-k
``gauss:sigma``     exp(-sigma^2 t^2 / 2)         supersmooth, a = sigma^2/2, beta = 2
``cauchy:s``        exp(-s |t|)                   supersmooth, a = s,         beta = 1
``none``            1                             degenerate
==================  ============================  =======================================

The gamma law is symmetrized (difference of two i.i.d. Gamma(k/2, s)
variables) so its characteristic function is real and positive, which keeps
the Fourier inversion of the deconvolution kernel a plain cosine integral.

Every characteristic function here satisfies phi(0) = 1 and |phi(t)| > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import integrate, special, stats

from .errors import ConfigurationError, ParameterError

ORDINARY_SMOOTH = "ordinary-smooth"
SUPERSMOOTH = "supersmooth"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SmoothnessClass:
    """Decay class of |phi_eps| with the parameters bandwidth rules need.

    ordinary smooth: |t|**beta |phi(t)| -> B1 > 0 as t -> inf.
    supersmooth:     |phi(t)| ~ B |t|**beta0 exp(-a |t|**beta).
    """

    tag: str
    beta: float | None = None
    B1: float | None = None
    a: float | None = None
    beta0: float | None = None


@dataclass(frozen=True)
class NoiseModel:
    """A measurement-error law identified by kind plus scale parameters."""

    kind: str  # "laplace" | "gamma" | "gauss" | "cauchy" | "none"
    scale: float = 0.0
    shape: float = 0.0  # gamma only

    def __post_init__(self) -> None:
        if self.kind in ("laplace", "gauss", "cauchy") and not self.scale > 0:
            raise ParameterError(f"{self.kind} noise requires scale > 0, got {self.scale}")
        if self.kind == "gamma":
            if not self.scale > 0:
                raise ParameterError(f"gamma noise requires scale > 0, got {self.scale}")
            if not self.shape >= 1:
                raise ParameterError(f"gamma noise requires shape k >= 1, got {self.shape}")
        if self.kind not in ("laplace", "gamma", "gauss", "cauchy", "none"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")

    # -- closed forms ------------------------------------------------------

    def cf(self, t):
        """Characteristic function (complex dtype; real valued for v1 laws)."""
        t = np.asarray(t, dtype=float)
        s = self.scale
        if self.kind == "laplace":
            out = 1.0 / (1.0 + (s * t) ** 2)
        elif self.kind == "gamma":
            out = (1.0 + (s * t) ** 2) ** (-self.shape / 2.0)
        elif self.kind == "gauss":
            out = np.exp(-0.5 * (s * t) ** 2)
        elif self.kind == "cauchy":
            out = np.exp(-s * np.abs(t))
        else:
            out = np.ones_like(t)
        return out.astype(complex) if out.ndim else complex(out)

    def cf_real(self, t: np.ndarray) -> np.ndarray:
        """Real part shortcut used by the cosine-form Fourier inversion."""
        return np.real(self.cf(t)) if np.ndim(t) else float(np.real(self.cf(t)))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == "laplace":
            return np.exp(-np.abs(x) / s) / (2.0 * s)
        if self.kind == "gamma":
            return _sym_gamma_density(x, self.shape, s)
        if self.kind == "gauss":
            return np.exp(-0.5 * (x / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
        if self.kind == "cauchy":
            return s / (np.pi * (s * s + x * x))
        # degenerate point mass: no density; callers special-case kind "none"
        raise ParameterError("the no-noise model has no density")

    def sample(self, n: int, seed) -> np.ndarray:
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        s = self.scale
        if self.kind == "laplace":
            return rng.laplace(0.0, s, n)
        if self.kind == "gamma":
            k2 = self.shape / 2.0
            return rng.gamma(k2, s, n) - rng.gamma(k2, s, n)
        if self.kind == "gauss":
            return rng.normal(0.0, s, n)
        if self.kind == "cauchy":
            return s * rng.standard_cauchy(n)
        return np.zeros(n)

    def variance(self) -> float:
        """Exact variance (inf for cauchy)."""
        s = self.scale
        if self.kind == "laplace":
            return 2.0 * s * s
        if self.kind == "gamma":
            return self.shape * s * s  # two Gamma(k/2, s) halves, k/2*s^2 each
        if self.kind == "gauss":
            return s * s
        if self.kind == "cauchy":
            return float("inf")
        return 0.0


def _sym_gamma_density(x: np.ndarray, k: float, s: float) -> np.ndarray:
    """Density of G1 - G2 with Gi ~ Gamma(k/2, scale s) (variance-gamma form).

    f(x) = |x/s|^((k-1)/2) K_((k-1)/2)(|x|/s) / (s sqrt(pi) Gamma(k/2) 2^((k-1)/2)).
    For k = 1 the density has an integrable logarithmic singularity at 0.
    """
    a = (k - 1.0) / 2.0
    z = np.abs(x) / s
    with np.errstate(divide="ignore", invalid="ignore"):
        out = z**a * special.kv(a, z) / (s * np.sqrt(np.pi) * special.gamma(k / 2.0) * 2.0**a)
    if np.ndim(out):
        zero = z == 0
        if np.any(zero):
            out[zero] = _sym_gamma_density_at_zero(k, s)
    elif z == 0:
        return _sym_gamma_density_at_zero(k, s)
    return out


def _sym_gamma_density_at_zero(k: float, s: float) -> float:
    if k <= 1:
        return float("inf")
    a = (k - 1.0) / 2.0
    # K_a(z) ~ Gamma(a) 2^(a-1) z^-a for z -> 0, a > 0
    return float(special.gamma(a) / (2.0 * s * np.sqrt(np.pi) * special.gamma(k / 2.0)))


# -- constructors / parsing -----------------------------------------------


def laplace(s: float) -> NoiseModel:
    return NoiseModel("laplace", scale=s)


def symmetrized_gamma(k: float, s: float) -> NoiseModel:
    return NoiseModel("gamma", scale=s, shape=k)


def gaussian(sigma: float) -> NoiseModel:
    return NoiseModel("gauss", scale=sigma)


def cauchy(s: float) -> NoiseModel:
    return NoiseModel("cauchy", scale=s)


def no_noise() -> NoiseModel:
    return NoiseModel("none")


def parse_noise_spec(text: str) -> NoiseModel:
    """Parse the CLI noise spec: laplace:s | gamma:k:s | gauss:sigma | cauchy:s | none."""
    parts = text.strip().lower().split(":")
    kind = parts[0]
    try:
        if kind == "none" and len(parts) == 1:
            return no_noise()
        if kind == "laplace" and len(parts) == 2:
            return laplace(float(parts[1]))
        if kind == "gamma" and len(parts) == 3:
            return symmetrized_gamma(float(parts[1]), float(parts[2]))
        if kind == "gauss" and len(parts) == 2:
            return gaussian(float(parts[1]))
        if kind == "cauchy" and len(parts) == 2:
            return cauchy(float(parts[1]))
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed noise spec {text!r}") from exc
    raise ParameterError(f"malformed noise spec {text!r}")


def format_noise_spec(model: NoiseModel) -> str:
    if model.kind == "none":
        return "none"
    if model.kind == "gamma":
        return f"gamma:{model.shape:g}:{model.scale:g}"
    return f"{model.kind}:{model.scale:g}"


# -- operations -------------------------------------------------------------


def cf_eval(model: NoiseModel, t) -> complex:
    """Exact closed-form characteristic function value."""
    return model.cf(t)


def classify(model: NoiseModel, *, self_check: bool = True) -> SmoothnessClass:
    """Smoothness class with hard-coded parameters plus a numeric self-check.

    Checks performed (consistency of the stored parameters with the closed
    forms): ordinary smooth |t|^beta |phi(t)| at t=1e3 within 1% of B1;
    supersmooth log|phi(t)| / |t|^beta at t=30 within 2% of -a.
    """
    s = model.scale
    if model.kind == "laplace":
        cls = SmoothnessClass(ORDINARY_SMOOTH, beta=2.0, B1=s**-2.0)
    elif model.kind == "gamma":
        cls = SmoothnessClass(ORDINARY_SMOOTH, beta=float(model.shape), B1=s ** -float(model.shape))
    elif model.kind == "gauss":
        cls = SmoothnessClass(SUPERSMOOTH, beta=2.0, a=s * s / 2.0, beta0=0.0)
    elif model.kind == "cauchy":
        cls = SmoothnessClass(SUPERSMOOTH, beta=1.0, a=s, beta0=0.0)
    else:
        return SmoothnessClass(DEGENERATE)

    if self_check:
        if cls.tag == ORDINARY_SMOOTH:
            t = 1e3
            got = t**cls.beta * abs(model.cf(t))
            if abs(got / cls.B1 - 1.0) > 0.01:
                raise ParameterError(
                    f"ordinary-smooth self-check failed for {model.kind}: "
                    f"|t|^beta |phi| = {got:.6g} vs B1 = {cls.B1:.6g}"
                )
        else:
            t = 30.0
            got = np.log(abs(model.cf(t))) / t**cls.beta
            if abs(got / (-cls.a) - 1.0) > 0.02:
                raise ParameterError(
                    f"supersmooth self-check failed for {model.kind}: "
                    f"log|phi|/|t|^beta = {got:.6g} vs -a = {-cls.a:.6g}"
                )
    return cls


def sample(model: NoiseModel, n: int, seed) -> np.ndarray:
    """n i.i.d. noise draws, reproducible by seed."""
    return model.sample(n, seed)


def _fy_integrand(u: float, y: float, sigma_x: float, model: NoiseModel) -> float:
    return stats.norm.pdf(y - u, scale=sigma_x) * float(model.density(u))


def _fyp_integrand(u: float, y: float, sigma_x: float, model: NoiseModel) -> float:
    z = y - u
    fx = stats.norm.pdf(z, scale=sigma_x)
    return (-z / sigma_x**2) * fx * float(model.density(u))


def _convolve_point(integrand, y: float, sigma_x: float, model: NoiseModel) -> float:
    f = partial(integrand, y=y, sigma_x=sigma_x, model=model)
    # split at the noise density's kink / singularity at u = 0
    left, _ = integrate.quad(f, -np.inf, 0.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    right, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-10, epsrel=1e-10, limit=200)
    return left + right


def convolved_density(sigma_x: float, model: NoiseModel, points) -> np.ndarray:
    """f_Y = f_X * f_eps at arbitrary points (f_X normal, mean 0, sd sigma_x)."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if model.kind == "none":
        return stats.norm.pdf(pts, scale=sigma_x)
    if model.kind == "gauss":
        return stats.norm.pdf(pts, scale=np.hypot(sigma_x, model.scale))
    return np.array([_convolve_point(_fy_integrand, y, sigma_x, model) for y in pts])


def convolved_density_prime(sigma_x: float, model: NoiseModel, points) -> np.ndarray:
    """d/dy of f_Y, obtained by differentiating under the convolution."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if model.kind == "none":
        return -pts / sigma_x**2 * stats.norm.pdf(pts, scale=sigma_x)
    if model.kind == "gauss":
        s = np.hypot(sigma_x, model.scale)
        return -pts / s**2 * stats.norm.pdf(pts, scale=s)
    return np.array([_convolve_point(_fyp_integrand, y, sigma_x, model) for y in pts])


def density_y_oracle(sigma_x: float, model: NoiseModel, grid) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth f_Y and f_Y' on a grid, accurate to 1e-6 absolute.

    f_Y is the numerical convolution of the exactly known normal marginal
    with the noise density (adaptive quadrature per grid point); f_Y' uses
    the analytically differentiated integrand.

    Raises ConfigurationError when the grid spacing exceeds one tenth of the
    noise scale (coarser grids defeat the oracle's intended resolution).
    """
    grid = np.asarray(grid, dtype=float)
    if not sigma_x > 0:
        raise ParameterError(f"sigma_x must be > 0, got {sigma_x}")
    if model.kind != "none" and len(grid) > 1:
        spacing = float(np.max(np.diff(grid)))
        if spacing > model.scale / 10.0 + 1e-12:
            raise ConfigurationError(
                f"grid spacing {spacing:g} too coarse for noise scale {model.scale:g} "
                f"(need <= scale/10)"
            )
    return convolved_density(sigma_x, model, grid), convolved_density_prime(sigma_x, model, grid)

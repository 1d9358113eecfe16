"""Deconvolution kernel density estimation for dependent linear processes.

Layers: ``process`` simulates the latent series and its second-order theory,
``noise`` provides the measurement-error catalog, ``kernel`` builds the
deconvolution kernel tables, ``estimators`` evaluates the statistics,
``bandwidth`` holds the selection rules and limit scalings, and ``harness``
runs reproducible Monte Carlo experiments.
"""

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthPlan,
    CltScaling,
    bw_cdf,
    bw_density,
    bw_pilot_kde,
    bw_plugin_optimal,
    bw_supersmooth,
    classify_regime,
    clt_scaling,
    confidence_interval,
    normal_quantile,
    regime_threshold,
)
from .errors import (
    ConfigurationError,
    DataError,
    DeconvError,
    NumericalRangeError,
    ParameterError,
    ResourceError,
    UnsupportedSmoothnessError,
)
from .estimators import (
    EstimateResult,
    TheoryMse,
    cdf_estimate,
    density_estimate,
    expected_cdf_estimate,
    expected_density_estimate,
    kde_y,
    theory_bias,
    theory_mse_cdf,
    theory_mse_density,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    McRecord,
    RateFit,
    clt_check,
    coverage_check,
    fit_rate,
    fit_rate_from_records,
    run_experiment,
    var_law_check,
)
from .kernel import (
    D1,
    GnTable,
    GridConfig,
    KernelSpec,
    build_gn,
    default_kernel,
    kernel_K,
    kernel_K_second,
    l1_norm_scaling,
)
from .noise import (
    NoiseModel,
    SmoothnessClass,
    cauchy,
    cf_eval,
    classify,
    convolved_density,
    convolved_density_prime,
    density_y_oracle,
    gaussian,
    laplace,
    no_noise,
    parse_noise_spec,
    symmetrized_gamma,
)
from .process import (
    CoefficientSequence,
    InnovationLaw,
    SeriesSample,
    autocovariance,
    build_coefficients,
    default_truncation,
    lrd_autocovariance_exact,
    sigma_n1_sq,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Planar domains whose Brownian exit point has a prescribed horizontal law.

The pipeline runs law -> Fourier data of its circle quantile -> analytic map
of the unit disk -> lower boundary curve, with Monte Carlo exit simulation
to check the result.
"""

from .boundary import BoundaryCurve, build_curve, exit_density, gamma, gamma_prime, membership
from .distributions import (
    Arcsine,
    Atomic,
    Cauchy,
    Custom,
    Distribution,
    Gaussian,
    HypSecant,
    Uniform,
    center,
    from_samples,
    parse_dist,
    support_and_moments,
)
from .embedding import (
    AnalyticMap,
    boundary_point,
    build_map,
    eval_map,
    hardy_profile,
    injectivity_check,
    schwarz_eval,
    slit_tips,
)
from .errors import (
    CskorError,
    DegenerateDistributionError,
    DomainError,
    NumericalError,
    RunawayPathError,
    UncenterableError,
    ValidationError,
)
from .fourier import FourierSeries, conjugate_series, fourier_coeffs, gross_coeffs, hilbert_pv, phi_mu
from .simulate import (
    DomainOracle,
    VerificationReport,
    VerifyConfig,
    consistency_sample,
    estimate_rate,
    ks_test,
    minimal_rate,
    run_verification,
    simulate_exit,
)

__version__ = "0.1.0"

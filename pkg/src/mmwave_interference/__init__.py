"""Spatial-spectral interference model for directional mmWave links.

Analytic BER via the Laplace transform of Poisson interference under
Poisson blockages, plus an independent Monte Carlo simulator.
"""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    BerCurve,
    BerPoint,
    MgfEvaluator,
    aggregate_laplace,
    average_ber,
    ber_curve,
    per_interferer_laplace,
)
from .exceptions import ConfigError, ConvergenceError  # noqa: E402
from .model import (  # noqa: E402
    NetworkConfig,
    RadiationCone,
    active_count_rate,
    cone_area,
    pgf_active_count,
    pgf_active_indicator,
    radial_pdf,
    survival_probability,
)
from .montecarlo import (  # noqa: E402
    InterferenceScene,
    McEstimate,
    blockage_correlation_probe,
    estimate_ber,
    estimate_ber_curve,
    sample_scene,
    scene_sinr,
)
from .spectral import SpectralModel, SpectralShape, kappa, overlap  # noqa: E402

__all__ = [
    "BerCurve",
    "BerPoint",
    "ConfigError",
    "ConvergenceError",
    "InterferenceScene",
    "McEstimate",
    "MgfEvaluator",
    "NetworkConfig",
    "RadiationCone",
    "SpectralModel",
    "SpectralShape",
    "active_count_rate",
    "aggregate_laplace",
    "average_ber",
    "ber_curve",
    "blockage_correlation_probe",
    "cone_area",
    "estimate_ber",
    "estimate_ber_curve",
    "kappa",
    "overlap",
    "pgf_active_count",
    "pgf_active_indicator",
    "per_interferer_laplace",
    "radial_pdf",
    "sample_scene",
    "scene_sinr",
    "survival_probability",
]

"""Network parameters and the geometric/statistical primitives of the blockage model.

Interferers form a Poisson process in space and frequency with density
``lambda_sf`` per (m^2 Hz). Blockages form a spatial Poisson process with
density ``rho`` per m^2. An interferer at distance ``ell`` is visible (line
of sight) when its radiation cone, a triangle of area ``ell^2 tan(theta)``,
contains no blockage.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .exceptions import ConfigError

# Below this value of rho * D^2 * tan(theta) the active-count rate switches to
# its Taylor expansion to avoid 0/0.
SMALL_BLOCKAGE_LOAD = 1e-8


@dataclass(frozen=True)
class NetworkConfig:
    """Physical and statistical parameters of one victim-receiver scenario.

    Powers are linear. ``half_beamwidth`` is theta in radians, so the full
    beamwidth is ``2 * half_beamwidth``. ``noise_power`` is the in-band noise
    variance; see :meth:`with_snr_db` for the SNR mapping.
    """

    lambda_sf: float = 1e-4
    rho: float = 1e-4
    radius_d: float = math.sqrt(100.0 / math.pi)
    half_beamwidth: float = math.radians(10.0)
    pathloss_exp: float = 2.5
    nakagami_m: float = 3.0
    bandwidth_w: float = 1.0
    q_interferer: float = 1.0
    q_desired: float = 1.0
    ell_desired: float = 1.0
    noise_power: float = 0.1
    mod_constant: float = 1.0

    def __post_init__(self):
        checks = [
            (self.lambda_sf >= 0, "lambda_sf must be >= 0"),
            (self.rho >= 0, "rho must be >= 0"),
            (self.radius_d > 0, "radius_d must be > 0"),
            (self.bandwidth_w > 0, "bandwidth_w must be > 0"),
            (0 < self.half_beamwidth < math.pi / 2, "half_beamwidth must lie in (0, pi/2) radians"),
            (self.pathloss_exp > 2, "pathloss_exp must be > 2"),
            (self.nakagami_m >= 0.5, "nakagami_m must be >= 0.5"),
            (self.ell_desired > 0, "ell_desired must be > 0"),
            (self.q_interferer >= 0, "q_interferer must be >= 0"),
            (self.q_desired > 0, "q_desired must be > 0"),
            (self.noise_power > 0, "noise_power must be > 0"),
            (self.mod_constant > 0, "mod_constant must be > 0"),
        ]
        for ok, message in checks:
            # NaN fails every comparison, so it lands here too
            if not ok:
                raise ConfigError(message)

    @property
    def desired_gain(self) -> float:
        """Mean received desired power ``q0 * ell0^-alpha`` (unit-mean fading)."""
        return self.q_desired * self.ell_desired ** (-self.pathloss_exp)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.desired_gain / self.noise_power)

    @property
    def noise_ratio(self) -> float:
        """``b = sigma_n^2 / (q0 ell0^-alpha)``, the inverse mean SNR."""
        return self.noise_power / self.desired_gain

    @property
    def interference_scale(self) -> float:
        """``q / (q0 ell0^-alpha)``, the factor normalizing interference to desired power."""
        return self.q_interferer / self.desired_gain

    @property
    def blockage_load(self) -> float:
        """``rho * D^2 * tan(theta)``, expected blockages in the largest cone."""
        return self.rho * self.radius_d**2 * math.tan(self.half_beamwidth)

    def with_snr_db(self, snr_db: float) -> NetworkConfig:
        """Copy with the noise power set so the mean SNR equals ``snr_db``."""
        return self.replace(noise_power=self.desired_gain * 10.0 ** (-snr_db / 10.0))

    def replace(self, **changes) -> NetworkConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RadiationCone:
    """Triangular region between an interferer and the receiver."""

    apex_distance: float
    half_beamwidth: float

    @property
    def area(self) -> float:
        return cone_area(self.apex_distance, self.half_beamwidth)


def cone_area(ell: float, theta: float) -> float:
    """Area of the radiation cone of an interferer at distance ``ell``.

    Raises:
        ValueError: if ``theta`` is not in (0, pi/2) or ``ell`` is negative.
    """
    if not 0 < theta < math.pi / 2:
        raise ValueError(f"theta must lie in (0, pi/2), got {theta}")
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    return ell * ell * math.tan(theta)


def survival_probability(ell: float, cfg: NetworkConfig) -> float:
    """Probability that no blockage falls in the cone of an interferer at ``ell``."""
    return math.exp(-cfg.rho * cone_area(ell, cfg.half_beamwidth))


def active_count_rate(cfg: NetworkConfig) -> float:
    """Mean number of unblocked interferers in the disk and band.

    Equals ``lambda pi W (1 - exp(-D^2 rho tan theta)) / (rho tan theta)``,
    tending to ``lambda pi W D^2`` as ``rho -> 0``.
    """
    full = cfg.lambda_sf * math.pi * cfg.bandwidth_w * cfg.radius_d**2
    return full * mean_survival(cfg)


def radial_pdf(ell: float, radius_d: float) -> float:
    """Density of the distance of a uniform point in a disk of radius ``radius_d``."""
    if radius_d <= 0:
        raise ValueError(f"radius_d must be > 0, got {radius_d}")
    if 0 < ell < radius_d:
        return 2.0 * ell / radius_d**2
    return 0.0


def mean_survival(cfg: NetworkConfig) -> float:
    """Survival probability averaged over the uniform-disk distance law."""
    x = cfg.blockage_load
    if x < SMALL_BLOCKAGE_LOAD:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def pgf_active_indicator(z: float, cfg: NetworkConfig) -> float:
    """PGF of the visibility indicator of one interferer, distance averaged."""
    return 1.0 - (1.0 - z) * mean_survival(cfg)


def pgf_active_count(z: float, cfg: NetworkConfig) -> float:
    """PGF of the number of visible interferers, ``exp(mu_K (z - 1))``."""
    return math.exp(active_count_rate(cfg) * (z - 1.0))

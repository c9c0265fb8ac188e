import math

import numpy as np
from scipy import integrate, special, stats

from mmwave_interference.model import NetworkConfig

DISK_D = math.sqrt(100.0 / math.pi)
TEN_DEG = math.radians(10.0)


def base_config(**changes) -> NetworkConfig:
    base = NetworkConfig(
        lambda_sf=1e-4,
        rho=1e-4,
        radius_d=DISK_D,
        half_beamwidth=TEN_DEG,
        pathloss_exp=2.5,
        nakagami_m=3.0,
        bandwidth_w=1.0,
        q_interferer=1.0,
        q_desired=1.0,
        ell_desired=1.0,
        mod_constant=1.0,
    )
    return base.replace(**changes)


def nakagami_ber(snr_db, m, c=1.0):
    """Interference-free BER, E_h[erfc(sqrt(c g h))/2] with h ~ Gamma(m, 1/m), by direct quadrature."""
    g = 10 ** (snr_db / 10)
    pdf = stats.gamma(m, scale=1.0 / m).pdf
    val, _ = integrate.quad(
        lambda h: 0.5 * special.erfc(math.sqrt(c * g * h)) * pdf(h), 0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400
    )
    return val



def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

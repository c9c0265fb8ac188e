"""Analytic engine: interference Laplace transform and average BER.

All transforms use the decaying convention ``L(s) = E[exp(-s I)]`` where
``I`` is the aggregate interference normalized by the mean desired power
``q0 ell0^-alpha``.

The average BER for ``BER = erfc(sqrt(c SINR)) / 2`` with Nakagami-m desired
fading follows from the Gamma averaging identity::

    BER = 1/2 - sqrt(c)/pi * G(m+1/2)/G(m)
              * int_0^inf s^-1/2 1F1(1-m; 3/2; c s) L(m s) exp(-(m b + c) s) ds

with ``b`` the inverse mean SNR. The integral is evaluated after the
substitution ``s = t^2``, which removes the endpoint singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import specfun
from .exceptions import ConvergenceError
from .model import NetworkConfig, active_count_rate, mean_survival
from .quadrature import adaptive_quad
from .specfun import SeriesControl
from .spectral import SpectralModel, kappa, overlap, overlap_array

QUADRATURE = "quadrature"
SERIES = "series"
UNIFORM = "uniform"
THINNED = "thinned"

_ELL_CHUNK = 96
_BER_ENVELOPE = 41.0  # integrand envelope cut at exp(-41) ~ 1.6e-18


@dataclass(frozen=True)
class MgfEvaluator:
    """Laplace transform of the aggregate normalized interference.

    Attributes:
        cfg: network parameters.
        spectral: PSD and filter shapes.
        method: ``"quadrature"`` (reference) or ``"series"``.
        control: truncation control for the series method.
        distance_law: ``"thinned"`` (default) averages each active
            interferer over the exact law of an unblocked interferer's
            distance, proportional to ``ell * p(ell)``; ``"uniform"`` uses
            the uniform-disk law of the moment-series closed form, which
            ignores that blockage removes far interferers more often and
            underestimates interference once ``rho D^2 tan(theta)`` is not small.
        epsabs: absolute tolerance of the quadrature path.
    """

    cfg: NetworkConfig
    spectral: SpectralModel = field(default_factory=SpectralModel)
    method: str = QUADRATURE
    control: SeriesControl = SeriesControl()
    distance_law: str = THINNED
    epsabs: float = 1e-11

    def __post_init__(self):
        if self.method not in (QUADRATURE, SERIES):
            raise ValueError(f"unknown method {self.method!r}")
        if self.distance_law not in (UNIFORM, THINNED):
            raise ValueError(f"unknown distance law {self.distance_law!r}")
        if self.method == SERIES and self.distance_law != UNIFORM and self.cfg.rho > 0:
            raise ValueError(
                "the series method needs distance_law='uniform' when rho > 0"
            )
        if not math.isclose(self.cfg.bandwidth_w, self.spectral.bandwidth_w):
            raise ValueError("config and spectral model disagree on the bandwidth")

    @property
    def active_rate(self) -> float:
        return active_count_rate(self.cfg)

    def __call__(self, s):
        return aggregate_laplace(s, self)


def distance_averaged_laplace(y: float, alpha: float) -> float:
    """``E[exp(-y (ell/D)^-alpha)]`` for ``ell`` uniform on the disk of radius ``D``.

    Closed form ``(2/alpha) y^(2/alpha) Gamma(-2/alpha, y)``.
    """
    if y == 0:
        return 1.0
    delta = 2.0 / alpha
    return delta * y**delta * specfun.upper_incomplete_gamma(-delta, y)


def _distance_weight(ell: np.ndarray, ev: MgfEvaluator) -> np.ndarray:
    cfg = ev.cfg
    w = 2.0 * ell / cfg.radius_d**2
    if ev.distance_law == THINNED:
        tan_t = math.tan(cfg.half_beamwidth)
        w = w * np.exp(-cfg.rho * ell**2 * tan_t) / mean_survival(cfg)
    return w


def _laplace_quadrature(s: np.ndarray, ev: MgfEvaluator) -> np.ndarray:
    cfg = ev.cfg
    model = ev.spectral
    m = cfg.nakagami_m
    alpha = cfg.pathloss_exp
    load = s * cfg.interference_scale / m
    # overlap is even in the carrier offset, so integrate over the upper half-band
    f_edges = model.breakpoints()
    f_edges = np.unique(np.concatenate([[0.0], f_edges[f_edges > 0]]))
    band = f_edges[-1] - f_edges[0]

    def fading_kernel(ell_chunk: np.ndarray) -> np.ndarray:
        r = ell_chunk**alpha

        def over_band(f):
            om = overlap_array(f, model)
            x = om[:, None, None] * load[None, None, :]
            return (r[None, :, None] / (r[None, :, None] + x)) ** m

        val, _ = adaptive_quad(over_band, f_edges, epsabs=0.1 * ev.epsabs, epsrel=0.0)
        return val / band

    def over_distance(ell: np.ndarray) -> np.ndarray:
        parts = [
            fading_kernel(ell[i : i + _ELL_CHUNK]) for i in range(0, len(ell), _ELL_CHUNK)
        ]
        return np.concatenate(parts, axis=0) * _distance_weight(ell, ev)[:, None]

    d = cfg.radius_d
    val, _ = adaptive_quad(
        over_distance, [0.0, d / 8.0, d / 4.0, d / 2.0, d], epsabs=ev.epsabs, epsrel=0.0
    )
    return val


def _laplace_series(s: np.ndarray, ev: MgfEvaluator) -> np.ndarray:
    """Moment expansion of the per-interferer transform.

    Expanding ``Gamma(-delta, y)`` in its ascending series and averaging
    over the carrier offset and the Gamma fading gives::

        1 + Gamma(-delta) Gamma(m+delta)/Gamma(m) delta z^delta k(delta)/W
          + sum_{n>=1} (-1)^n delta/(delta-n) (m)_n/n! z^n k(n)/W

    with ``z = s q / (m D^alpha q0 ell0^-alpha)`` and ``k`` the overlap
    moments. The sum converges for ``z * max(overlap) < 1``.
    """
    cfg = ev.cfg
    model = ev.spectral
    ctrl = ev.control
    m = cfg.nakagami_m
    w = model.bandwidth_w
    delta = 2.0 / cfg.pathloss_exp
    z = s * cfg.interference_scale / (m * cfg.radius_d**cfg.pathloss_exp)

    ratio = float(np.max(z, initial=0.0)) * overlap(0.0, model)
    if ratio >= 1.0:
        raise ConvergenceError(
            f"moment series diverges: z * max overlap = {ratio:.3g} >= 1"
        )

    frac = (
        math.gamma(-delta) * specfun.gamma_ratio(m + delta, m) * delta
        * kappa(delta, model) / w
    )
    total = 1.0 + frac * z**delta
    coef = np.ones_like(z)
    for n in range(1, ctrl.max_terms + 1):
        coef = coef * (m + n - 1) / n * z
        term = (-1) ** n * delta / (delta - n) * coef * kappa(float(n), model) / w
        total = total + term
        if np.all(np.abs(term) <= ctrl.rel_tol * np.abs(total)):
            return total
    raise ConvergenceError(f"moment series did not converge within {ctrl.max_terms} terms")


def per_interferer_laplace(s, ev: MgfEvaluator):
    """Laplace transform of one active interferer's normalized power.

    Accepts a scalar or an array of ``s >= 0`` and returns the same shape.
    """
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("s must be finite and >= 0")
    flat = arr.ravel()
    if ev.cfg.interference_scale == 0:
        out = np.ones_like(flat)
    elif ev.method == SERIES:
        out = _laplace_series(flat, ev)
    else:
        out = _laplace_quadrature(flat, ev)
    out = np.clip(out, 0.0, 1.0)
    out[flat == 0] = 1.0
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def aggregate_laplace(s, ev: MgfEvaluator):
    """Laplace transform of the aggregate interference, ``exp(mu_K (phi(s) - 1))``."""
    mu = ev.active_rate
    if mu == 0:
        arr = np.asarray(s, dtype=float)
        out = np.ones_like(arr)
        return float(out) if out.ndim == 0 else out
    phi = per_interferer_laplace(s, ev)
    return np.exp(mu * (np.asarray(phi) - 1.0)) if np.ndim(phi) else math.exp(mu * (phi - 1.0))


def _scaled_hyp1f1(a: float, x: np.ndarray, ctrl: SeriesControl) -> np.ndarray:
    """``exp(-x) 1F1(a; 3/2; x)`` for ``x >= 0``."""
    b = 1.5
    degree = specfun.hyp1f1_terms(a)
    if degree is not None:
        # polynomial: evaluate coefficients once
        coefs = [1.0]
        for n in range(degree - 1):
            coefs.append(coefs[-1] * (a + n) / ((b + n) * (n + 1)))
        return np.polynomial.polynomial.polyval(x, coefs) * np.exp(-x)

    out = np.empty_like(x)
    small = x <= 60.0
    out[small] = [math.exp(-v) * specfun.hyp1f1(a, b, v, ctrl) for v in x[small]]
    if np.any(~small):
        # large-argument expansion; the companion term is O(exp(-x))
        xl = x[~small]
        pre = math.exp(math.lgamma(b) - math.lgamma(a)) * xl ** (a - b)
        acc = np.ones_like(xl)
        term = np.ones_like(xl)
        for k in range(40):
            term = term * (b - a + k) * (1 - a + k) / ((k + 1) * xl)
            acc = acc + term
            if np.all(np.abs(term) < 1e-16):
                break
        out[~small] = pre * acc
    return out


@dataclass
class BerIntegral:
    ber: np.ndarray
    abserr: float
    upper_limit: float


def _ber_integral(ev: MgfEvaluator, noise_ratios: np.ndarray) -> BerIntegral:
    cfg = ev.cfg
    m = cfg.nakagami_m
    c = cfg.mod_constant
    ctrl = SeriesControl(rel_tol=1e-15, max_terms=5000)
    prefactor = math.sqrt(c) / math.pi * specfun.gamma_ratio(m + 0.5, m)

    integer_m = specfun.hyp1f1_terms(1.0 - m) is not None
    decay = float(np.min(m * noise_ratios)) + (c if integer_m else 0.0)
    if decay <= 0:
        raise ConvergenceError("BER integrand does not decay; noise power must be positive")
    t2 = _BER_ENVELOPE / decay
    for _ in range(4):
        t2 = (_BER_ENVELOPE + max(m - 1.0, 0.0) * math.log1p(c * t2)) / decay
    upper = math.sqrt(t2)

    scale = 1.0 / math.sqrt(c + m * float(np.max(noise_ratios)))
    edges = [0.0]
    edge = 0.25 * scale
    while edge < upper:
        edges.append(edge)
        edge *= 2.0
    edges.append(upper)

    def integrand(t: np.ndarray) -> np.ndarray:
        s = t * t
        lap = np.asarray(aggregate_laplace(m * s, ev), dtype=float)
        core = _scaled_hyp1f1(1.0 - m, c * s, ctrl) * lap
        return 2.0 * core[:, None] * np.exp(-m * np.outer(s, noise_ratios))

    integral, err = adaptive_quad(integrand, edges, epsabs=1e-12, epsrel=0.0)
    ber = np.clip(0.5 - prefactor * integral, 0.0, 0.5)
    return BerIntegral(ber=ber, abserr=prefactor * err, upper_limit=upper**2)


def average_ber(ev: MgfEvaluator, snr_db: float, full_output: bool = False):
    """Average BER at mean SNR ``snr_db`` (``q0 ell0^-alpha / sigma_n^2``).

    With ``full_output`` returns ``(ber, info)`` where ``info`` carries the
    quadrature error estimate and the truncation point in ``s``.
    """
    b = 10.0 ** (-float(snr_db) / 10.0)
    if b == math.inf:
        res = BerIntegral(ber=np.array([0.5]), abserr=0.0, upper_limit=0.0)
    else:
        res = _ber_integral(ev, np.array([b]))
    ber = float(res.ber[0])
    if full_output:
        return ber, {"abserr": res.abserr, "upper_limit": res.upper_limit}
    return ber


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float

    def __post_init__(self):
        if not 0.0 <= self.ber <= 0.5:
            raise ValueError(f"BER must lie in [0, 0.5], got {self.ber}")


@dataclass
class BerCurve:
    """BER against SNR from either or both engines.

    Missing engines are represented by ``None`` columns.
    """

    snr_db: np.ndarray
    ber_analytic: np.ndarray | None = None
    ber_mc: np.ndarray | None = None
    mc_stderr: np.ndarray | None = None
    trials: int | None = None
    cfg: NetworkConfig | None = None
    spectral: SpectralModel | None = None
    abserr: float | None = None

    def points(self) -> list[BerPoint]:
        col = self.ber_analytic if self.ber_analytic is not None else self.ber_mc
        if col is None:
            return []
        return [BerPoint(float(s), float(b)) for s, b in zip(self.snr_db, col)]

    def __len__(self) -> int:
        return len(self.snr_db)


def ber_curve(ev: MgfEvaluator, snr_grid_db: Sequence[float]) -> BerCurve:
    """Analytic BER over a grid of SNR values (one shared adaptive integral)."""
    grid = np.asarray(list(snr_grid_db), dtype=float)
    if grid.size == 0:
        raise ValueError("SNR grid is empty")
    res = _ber_integral(ev, 10.0 ** (-grid / 10.0))
    return BerCurve(
        snr_db=grid, ber_analytic=res.ber, cfg=ev.cfg, spectral=ev.spectral, abserr=res.abserr
    )

"""Interferer PSD, receiver filter response and their spectral overlap.

Both shapes are raised-cosine profiles with Nyquist bandwidth ``W``; roll-off
zero is the ideal rectangle. The PSD is normalized to unit power and the
filter to unit passband gain, so the overlap is the fraction of an
interferer's power that lands in the receiver's band.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .quadrature import _rule, adaptive_quad

RECT = "rect"
RAISED_COSINE = "raised_cosine"


@dataclass(frozen=True)
class SpectralShape:
    kind: str = RECT
    rolloff: float = 0.0

    def __post_init__(self):
        if self.kind not in (RECT, RAISED_COSINE):
            raise ValueError(f"unknown spectral shape {self.kind!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.kind == RECT and self.rolloff != 0.0:
            raise ValueError("rect shape has no roll-off")

    @classmethod
    def rect(cls) -> SpectralShape:
        return cls(RECT, 0.0)

    @classmethod
    def raised_cosine(cls, rolloff: float) -> SpectralShape:
        return cls(RAISED_COSINE, float(rolloff))

    @property
    def beta(self) -> float:
        return self.rolloff if self.kind == RAISED_COSINE else 0.0

    def edges(self, bandwidth_w: float) -> tuple[float, float]:
        """Inner and outer edge of the roll-off region (positive frequencies)."""
        return (1.0 - self.beta) * bandwidth_w / 2.0, (1.0 + self.beta) * bandwidth_w / 2.0

    def profile(self, f, bandwidth_w: float) -> np.ndarray:
        """Peak-one raised-cosine profile evaluated at ``f``."""
        af = np.abs(np.asarray(f, dtype=float))
        inner, outer = self.edges(bandwidth_w)
        out = np.where(af <= inner, 1.0, 0.0)
        if self.beta > 0.0:
            ramp = (af > inner) & (af <= outer)
            phase = np.pi * ((af[ramp] - inner) / (outer - inner))
            out[ramp] = 0.5 * (1.0 + np.cos(phase))
        return out


@dataclass(frozen=True)
class SpectralModel:
    """Interferer PSD shape, receiver filter shape and the common band ``W``."""

    psd_shape: SpectralShape = SpectralShape()
    filter_shape: SpectralShape = SpectralShape()
    bandwidth_w: float = 1.0

    def __post_init__(self):
        if not self.bandwidth_w > 0:
            raise ValueError(f"bandwidth_w must be > 0, got {self.bandwidth_w}")

    @property
    def is_rect(self) -> bool:
        return self.psd_shape.beta == 0.0 and self.filter_shape.beta == 0.0

    def psd(self, f) -> np.ndarray:
        """Unit-power interferer PSD."""
        return self.psd_shape.profile(f, self.bandwidth_w) / self.bandwidth_w

    def filter_gain(self, f) -> np.ndarray:
        """Squared filter magnitude ``|H(f)|^2`` with unit passband gain."""
        return self.filter_shape.profile(f, self.bandwidth_w)

    def kinks(self) -> np.ndarray:
        """Carrier offsets in the band where the overlap may be non-smooth."""
        w = self.bandwidth_w
        psd_edges = np.array(self.psd_shape.edges(w))
        filt_edges = np.array(self.filter_shape.edges(w) + (w / 2.0,))
        psd_edges = np.concatenate([psd_edges, -psd_edges])
        filt_edges = np.concatenate([filt_edges, -filt_edges])
        cand = (filt_edges[:, None] - psd_edges[None, :]).ravel()
        cand = np.concatenate([cand, [0.0]])
        inside = cand[(cand > -w / 2.0) & (cand < w / 2.0)]
        return np.unique(np.round(inside, 15))

    def breakpoints(self) -> np.ndarray:
        """Band edges plus interior kinks, for panel-wise integration over carriers."""
        w = self.bandwidth_w
        return np.unique(np.concatenate([[-w / 2.0], self.kinks(), [w / 2.0]]))


def _integrand_edges(f_offset: float, model: SpectralModel) -> list[float]:
    w = model.bandwidth_w
    p_in, p_out = model.psd_shape.edges(w)
    h_in, h_out = model.filter_shape.edges(w)
    pts = [f_offset + e for e in (-p_out, -p_in, p_in, p_out)] + [-h_out, -h_in, h_in, h_out]
    return sorted(p for p in pts if -w / 2.0 < p < w / 2.0)


def overlap(f_offset: float, model: SpectralModel) -> float:
    """Fraction of an interferer's power, offset by ``f_offset``, captured by the filter.

    Closed form ``max(0, W - |f|) / W`` for the rectangle pair, adaptive
    quadrature over ``[-W/2, W/2]`` otherwise.
    """
    w = model.bandwidth_w
    if model.is_rect:
        return max(0.0, w - abs(f_offset)) / w

    def integrand(f):
        return float(model.psd(f - f_offset) * model.filter_gain(f))

    value, _ = integrate.quad(
        integrand, -w / 2.0, w / 2.0, points=_integrand_edges(f_offset, model) or None,
        epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return value


_PANEL_ORDER = 24


def overlap_array(f_offsets, model: SpectralModel) -> np.ndarray:
    """Vectorized overlap for many carrier offsets.

    For shaped spectra each offset gets a composite Gauss-Legendre rule whose
    panels end at every non-smooth point of the integrand, so the result is
    accurate to rounding.
    """
    f = np.asarray(f_offsets, dtype=float)
    w = model.bandwidth_w
    if model.is_rect:
        return np.maximum(0.0, w - np.abs(f)) / w

    flat = f.ravel()
    p_in, p_out = model.psd_shape.edges(w)
    h_in, h_out = model.filter_shape.edges(w)
    n = flat.size
    shifted = flat[:, None] + np.array([-p_out, -p_in, p_in, p_out])[None, :]
    fixed = np.broadcast_to(np.array([-h_out, -h_in, h_in, h_out, -w / 2.0, w / 2.0]), (n, 6))
    edges = np.sort(np.clip(np.concatenate([shifted, fixed], axis=1), -w / 2.0, w / 2.0), axis=1)

    x, wts = _rule(_PANEL_ORDER)
    lo = edges[:, :-1]
    hi = edges[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * x
    vals = model.psd(nodes - flat[:, None, None]) * model.filter_gain(nodes)
    out = np.einsum("ipk,k,ip->i", vals, wts, half)
    return out.reshape(f.shape)


@lru_cache(maxsize=256)
def kappa(j: float, model: SpectralModel) -> float:
    """``integral over the band of overlap(f)^j df``; ``j`` may be fractional."""
    if j < 0:
        raise ValueError(f"kappa needs j >= 0, got {j}")
    w = model.bandwidth_w
    if model.is_rect:
        return 2.0 * w * (1.0 - 2.0 ** (-(j + 1.0))) / (j + 1.0)
    if j == 0:
        return w
    value, _ = adaptive_quad(
        lambda f: overlap_array(f, model) ** j, model.breakpoints(), epsabs=1e-15, epsrel=1e-13
    )
    return float(value)

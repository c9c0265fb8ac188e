"""Monte Carlo simulator of interferer and blockage fields.

Trials are generated in fixed-size blocks. Block ``k`` of a run with seed
``seed`` draws from ``Philox(key=seed + k * 2**64)``, so every trial's
randomness depends only on ``(seed, trial index)`` and results do not depend
on how blocks are spread over workers. Block statistics are merged in block
order.

Within a block the draws happen in a fixed order: desired fading, interferer
counts, then per-interferer distance, angle, carrier, fading and thinning
uniform, then blockages. Runs that differ only in ``rho`` therefore share
every interferer draw (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from .model import NetworkConfig
from .spectral import SpectralModel, overlap_array

THINNING = "thinning"
EXPLICIT = "explicit"
MODES = (THINNING, EXPLICIT)

BLOCK_SIZE = 1 << 16


@dataclass
class InterferenceScene:
    """One realization of the interferer and blockage fields.

    Arrays are indexed by interferer; ``blockages`` is ``(n, 2)`` and only
    populated in explicit mode.
    """

    positions: np.ndarray
    ell: np.ndarray
    freq: np.ndarray
    fading_h: np.ndarray
    los: np.ndarray
    blockages: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    mode: str = THINNING
    desired_h: float = 1.0

    def __len__(self) -> int:
        return len(self.ell)

    @classmethod
    def empty(cls, desired_h: float = 1.0, mode: str = THINNING) -> InterferenceScene:
        z = np.empty(0)
        return cls(np.empty((0, 2)), z, z, z, np.empty(0, dtype=bool), mode=mode, desired_h=desired_h)


@dataclass(frozen=True)
class McEstimate:
    ber_mean: float
    std_error: float
    trials: int
    seed: int

    def confidence_interval(self, level: float = 0.99) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + level / 2.0)
        return self.ber_mean - z * self.std_error, self.ber_mean + z * self.std_error


def block_rng(seed: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed + (block << 64)))


@dataclass
class _Block:
    desired_h: np.ndarray  # (n,)
    owner: np.ndarray  # (k,) trial index of each interferer
    positions: np.ndarray  # (k, 2)
    ell: np.ndarray
    freq: np.ndarray
    fading_h: np.ndarray
    los: np.ndarray
    blockages: np.ndarray  # (nb, 2)
    blockage_owner: np.ndarray  # (nb,)


def _cone_contains(pos: np.ndarray, pts: np.ndarray, tan_theta: float) -> np.ndarray:
    """Whether each point lies in the cone of the paired interferer.

    The cone is the isosceles triangle with apex at the interferer and base
    of half-width ``ell tan(theta)`` centred on the receiver at the origin.
    """
    ell = np.hypot(pos[:, 0], pos[:, 1])
    ux = pos[:, 0] / ell
    uy = pos[:, 1] / ell
    along = pts[:, 0] * ux + pts[:, 1] * uy
    across = np.abs(pts[:, 1] * ux - pts[:, 0] * uy)
    return (along >= 0.0) & (along <= ell) & (across <= (ell - along) * tan_theta)


def _explicit_los(
    positions: np.ndarray, owner: np.ndarray, blockages: np.ndarray, blockage_owner: np.ndarray,
    n_trials: int, tan_theta: float,
) -> np.ndarray:
    los = np.ones(len(owner), dtype=bool)
    if len(owner) == 0 or len(blockages) == 0:
        return los
    # blockage_owner is sorted, so each trial's blockages are a contiguous slice
    counts = np.bincount(blockage_owner, minlength=n_trials)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    per = counts[owner]
    pair_int = np.repeat(np.arange(len(owner)), per)
    offsets = np.arange(per.sum()) - np.repeat(np.cumsum(per) - per, per)
    pair_blk = starts[owner][pair_int] + offsets
    hit = _cone_contains(positions[pair_int], blockages[pair_blk], tan_theta)
    blocked = np.bincount(pair_int[hit], minlength=len(owner)) > 0
    return ~blocked


def _sample_block(cfg: NetworkConfig, rng: np.random.Generator, n: int, mode: str) -> _Block:
    if mode not in MODES:
        raise ValueError(f"unknown blockage mode {mode!r}")
    m = cfg.nakagami_m
    d = cfg.radius_d
    w = cfg.bandwidth_w
    tan_t = math.tan(cfg.half_beamwidth)

    desired_h = rng.gamma(m, 1.0 / m, size=n)
    counts = rng.poisson(cfg.lambda_sf * math.pi * d * d * w, size=n)
    k = int(counts.sum())
    owner = np.repeat(np.arange(n), counts)
    ell = d * np.sqrt(rng.random(k))
    angle = rng.uniform(0.0, 2.0 * math.pi, size=k)
    freq = rng.uniform(-w / 2.0, w / 2.0, size=k)
    fading = rng.gamma(m, 1.0 / m, size=k)
    u = rng.random(k)
    positions = np.column_stack([ell * np.cos(angle), ell * np.sin(angle)])

    if mode == THINNING:
        los = u < np.exp(-cfg.rho * ell**2 * tan_t)
        blockages = np.empty((0, 2))
        b_owner = np.empty(0, dtype=np.int64)
    else:
        # every cone vertex lies within this radius of the receiver
        radius = d * max(1.0, tan_t)
        b_counts = rng.poisson(cfg.rho * math.pi * radius**2, size=n)
        nb = int(b_counts.sum())
        b_owner = np.repeat(np.arange(n), b_counts)
        br = radius * np.sqrt(rng.random(nb))
        ba = rng.uniform(0.0, 2.0 * math.pi, size=nb)
        blockages = np.column_stack([br * np.cos(ba), br * np.sin(ba)])
        los = _explicit_los(positions, owner, blockages, b_owner, n, tan_t)
    return _Block(desired_h, owner, positions, ell, freq, fading, los, blockages, b_owner)


def sample_scene(
    cfg: NetworkConfig, spectral: SpectralModel, rng: np.random.Generator, mode: str = THINNING
) -> InterferenceScene:
    """Draw one scene (interferers, blockages and desired-link fading)."""
    blk = _sample_block(cfg, rng, 1, mode)
    return InterferenceScene(
        positions=blk.positions, ell=blk.ell, freq=blk.freq, fading_h=blk.fading_h, los=blk.los,
        blockages=blk.blockages, mode=mode, desired_h=float(blk.desired_h[0]),
    )


def _interference(cfg: NetworkConfig, spectral: SpectralModel, blk: _Block, n: int) -> np.ndarray:
    """Per-trial interference normalized by the mean desired power."""
    power = (
        cfg.interference_scale * blk.fading_h * blk.ell ** (-cfg.pathloss_exp)
        * overlap_array(blk.freq, spectral)
    )
    return np.bincount(blk.owner, weights=np.where(blk.los, power, 0.0), minlength=n)


def scene_sinr(scene: InterferenceScene, cfg: NetworkConfig, spectral: SpectralModel) -> float:
    """SINR of the victim receiver for one scene; blocked interferers contribute nothing."""
    power = (
        cfg.q_interferer * scene.fading_h * scene.ell ** (-cfg.pathloss_exp)
        * overlap_array(scene.freq, spectral)
    )
    interference = float(np.sum(power[scene.los]))
    return cfg.desired_gain * scene.desired_h / (interference + cfg.noise_power)


def ber_from_sinr(sinr, c: float):
    return 0.5 * special.erfc(np.sqrt(c * np.asarray(sinr)))


# -- block runner ---------------------------------------------------------


def _block_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _moments(x: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    m2 = ((x - mean) ** 2).sum(axis=0)
    return len(x), mean, m2


def _merge(acc, part):
    # Chan et al. pairwise update of (count, mean, M2)
    if acc is None:
        return part
    na, ma, sa = acc
    nb, mb, sb = part
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta**2 * na * nb / n


def _run_block(task):
    stat, cfg, spectral, mode, seed, block, size, extra = task
    rng = block_rng(seed, block)
    blk = _sample_block(cfg, rng, size, mode)
    return _moments(stat(cfg, spectral, blk, size, extra))


def _run(
    stat: Callable, cfg: NetworkConfig, spectral: SpectralModel, mode: str, trials: int,
    seed: int, workers: int, extra=None,
) -> tuple[np.ndarray, np.ndarray]:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [
        (stat, cfg, spectral, mode, seed, i, size, extra)
        for i, size in enumerate(_block_sizes(trials))
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, tasks))
    else:
        parts = [_run_block(t) for t in tasks]
    acc = None
    for part in parts:
        acc = _merge(acc, part)
    n, mean, m2 = acc
    var = m2 / (n - 1) if n > 1 else np.zeros_like(m2)
    return mean, np.sqrt(var / n)


def _ber_stat(cfg, spectral, blk, n, noise_ratios):
    interference = _interference(cfg, spectral, blk, n)
    sinr = blk.desired_h[:, None] / (interference[:, None] + noise_ratios[None, :])
    return ber_from_sinr(sinr, cfg.mod_constant)


def _laplace_stat(cfg, spectral, blk, n, s_values):
    interference = _interference(cfg, spectral, blk, n)
    return np.exp(-np.outer(interference, s_values))


def estimate_ber_curve(
    cfg: NetworkConfig, spectral: SpectralModel, snr_grid_db: Sequence[float], trials: int,
    seed: int, mode: str = THINNING, workers: int = 1,
) -> list[McEstimate]:
    """Monte Carlo BER at every grid SNR, all points sharing the same scenes."""
    grid = np.asarray(list(snr_grid_db), dtype=float)
    mean, se = _run(_ber_stat, cfg, spectral, mode, trials, seed, workers, 10.0 ** (-grid / 10.0))
    return [McEstimate(float(b), float(e), trials, seed) for b, e in zip(mean, se)]


def estimate_ber(
    cfg: NetworkConfig, spectral: SpectralModel, snr_db: float, trials: int, seed: int,
    mode: str = THINNING, workers: int = 1,
) -> McEstimate:
    """Mean of ``erfc(sqrt(c SINR)) / 2`` over ``trials`` independent scenes."""
    return estimate_ber_curve(cfg, spectral, [snr_db], trials, seed, mode, workers)[0]


def empirical_laplace(
    cfg: NetworkConfig, spectral: SpectralModel, s_values: Sequence[float], trials: int,
    seed: int, mode: str = THINNING, workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of ``exp(-s I)`` for each ``s``."""
    s = np.asarray(list(s_values), dtype=float)
    return _run(_laplace_stat, cfg, spectral, mode, trials, seed, workers, s)


def los_counts(cfg: NetworkConfig, scenes: int, seed: int, mode: str = THINNING) -> np.ndarray:
    """Number of unblocked interferers in each of ``scenes`` scenes."""
    out = []
    for i, size in enumerate(_block_sizes(scenes)):
        blk = _sample_block(cfg, block_rng(seed, i), size, mode)
        out.append(np.bincount(blk.owner[blk.los], minlength=size))
    return np.concatenate(out)


def poisson_fit(counts: np.ndarray, mean: float, min_expected: float = 5.0):
    """Chi-square goodness of fit of ``counts`` to Poisson(``mean``).

    Cells are ``{0}, {1}, ...`` with the upper tail pooled into the last
    cell so that every expected count is at least ``min_expected``.

    Returns:
        ``(statistic, p_value, observed, expected)``.
    """
    n = len(counts)
    edges = []
    k = 0
    while n * stats.poisson.pmf(k, mean) >= min_expected and n * stats.poisson.sf(k, mean) >= min_expected:
        edges.append(k)
        k += 1
    if not edges:
        raise ValueError("too few scenes for a chi-square test")
    observed = np.array([np.sum(counts == e) for e in edges] + [np.sum(counts >= k)], dtype=float)
    expected = np.array(
        [n * stats.poisson.pmf(e, mean) for e in edges] + [n * stats.poisson.sf(k - 1, mean)]
    )
    statistic, p_value = stats.chisquare(observed, expected)
    return float(statistic), float(p_value), observed, expected


@dataclass
class CorrelationReport:
    """Joint vs independent line-of-sight probability of interferer pairs.

    Rows are bins of the angular separation between the two interferers
    (as seen from the receiver).
    """

    bin_edges: np.ndarray
    pairs: np.ndarray
    joint: np.ndarray
    product: np.ndarray
    std_error: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return self.joint - self.product

    @property
    def max_abs_deviation(self) -> float:
        valid = self.pairs > 0
        return float(np.max(np.abs(self.deviation[valid]), initial=0.0))

    @property
    def max_z(self) -> float:
        valid = (self.pairs > 0) & (self.std_error > 0)
        if not valid.any():
            return 0.0
        return float(np.max(np.abs(self.deviation[valid]) / self.std_error[valid]))


def blockage_correlation_probe(
    cfg: NetworkConfig, scenes: int, seed: int, bins: int = 6, separation: float | None = None,
) -> CorrelationReport:
    """Measure how far shared blockages make two links' visibility dependent.

    Each scene places two interferers uniformly on the disk (or the second
    at a fixed angular ``separation`` from the first), draws a blockage field
    and records both visibility flags.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    d = cfg.radius_d
    tan_t = math.tan(cfg.half_beamwidth)
    radius = d * max(1.0, tan_t)

    ell = d * np.sqrt(rng.random((scenes, 2)))
    a0 = rng.uniform(0.0, 2.0 * math.pi, size=scenes)
    if separation is None:
        a1 = rng.uniform(0.0, 2.0 * math.pi, size=scenes)
    else:
        a1 = a0 + separation
    angles = np.column_stack([a0, a1])
    pos = np.stack([ell * np.cos(angles), ell * np.sin(angles)], axis=-1).reshape(-1, 2)
    owner = np.repeat(np.arange(scenes), 2)

    b_counts = rng.poisson(cfg.rho * math.pi * radius**2, size=scenes)
    b_owner = np.repeat(np.arange(scenes), b_counts)
    br = radius * np.sqrt(rng.random(len(b_owner)))
    ba = rng.uniform(0.0, 2.0 * math.pi, size=len(b_owner))
    blockages = np.column_stack([br * np.cos(ba), br * np.sin(ba)])
    los = _explicit_los(pos, owner, blockages, b_owner, scenes, tan_t).reshape(scenes, 2)

    sep = np.abs((a1 - a0 + math.pi) % (2.0 * math.pi) - math.pi)
    edges = np.linspace(0.0, math.pi, bins + 1)
    which = np.clip(np.digitize(sep, edges) - 1, 0, bins - 1)

    pairs = np.zeros(bins)
    joint = np.zeros(bins)
    product = np.zeros(bins)
    se = np.zeros(bins)
    for k in range(bins):
        sel = los[which == k]
        n = len(sel)
        pairs[k] = n
        if n == 0:
            continue
        both = sel[:, 0] & sel[:, 1]
        p0 = sel[:, 0].mean()
        p1 = sel[:, 1].mean()
        joint[k] = both.mean()
        product[k] = p0 * p1
        # delta-method standard error of mean(both) - mean(x0) mean(x1)
        infl = both - p1 * sel[:, 0] - p0 * sel[:, 1]
        se[k] = infl.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return CorrelationReport(edges, pairs, joint, product, se)

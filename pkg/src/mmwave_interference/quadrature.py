"""Batched adaptive Gauss-Legendre quadrature for vector-valued integrands.

The integrand is called with a whole batch of abscissae at once, which lets
nested integrals (and integrals over a grid of parameters) stay vectorized.
Each panel is estimated with an ``order``-point rule on the whole panel and on
its two halves; the difference is the local error estimate.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .exceptions import ConvergenceError


@lru_cache(maxsize=None)
def _rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_sums(func, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    x, w = _rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = np.asarray(func(pts), dtype=float)
    vals = vals.reshape(len(a), order, *vals.shape[1:])
    # contract the node axis against the weights, keeping the value shape
    sums = np.tensordot(w, np.moveaxis(vals, 1, 0), axes=(0, 0))
    return sums * half.reshape((-1,) + (1,) * (sums.ndim - 1))


def adaptive_quad(
    func: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
    order: int = 15,
    max_intervals: int = 20_000,
) -> tuple[np.ndarray, float]:
    """Integrate ``func`` over ``[breakpoints[0], breakpoints[-1]]``.

    Args:
        func: maps a 1-D array of abscissae of length n to an array of shape
            ``(n, ...)``.
        breakpoints: increasing panel edges; the integrand should be smooth
            between consecutive ones.
        epsabs, epsrel: the run stops once the summed error estimate is below
            ``max(epsabs, epsrel * max|integral|)``.
        order: Gauss-Legendre points per panel.
        max_intervals: bound on the number of live panels.

    Returns:
        ``(integral, error_estimate)``; ``integral`` has the trailing shape of
        ``func``'s output.

    Raises:
        ConvergenceError: when the panel budget is exhausted.
    """
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("breakpoints must be a strictly increasing sequence of length >= 2")
    span = edges[-1] - edges[0]

    a = edges[:-1].copy()
    b = edges[1:].copy()
    whole = _panel_sums(func, a, b, order)
    done = np.zeros_like(whole[0])
    done_err = 0.0

    while True:
        mid = 0.5 * (a + b)
        left = _panel_sums(func, a, mid, order)
        right = _panel_sums(func, mid, b, order)
        refined = left + right
        diff = np.abs(refined - whole).reshape(len(a), -1)
        err = diff.max(axis=1) if diff.shape[1] else np.zeros(len(a))

        total = done + refined.sum(axis=0)
        tol = max(epsabs, epsrel * float(np.max(np.abs(total), initial=0.0)))
        if done_err + err.sum() <= tol:
            return total, done_err + float(err.sum())

        ok = err <= tol * (b - a) / span
        done = done + refined[ok].sum(axis=0)
        done_err += float(err[ok].sum())

        keep = ~ok
        if not keep.any():
            return done, done_err
        n_live = 2 * int(keep.sum())
        if n_live > max_intervals:
            raise ConvergenceError(
                f"adaptive quadrature exceeded {max_intervals} panels "
                f"(error estimate {done_err + err.sum():.3g}, tolerance {tol:.3g})"
            )
        a = np.concatenate([a[keep], mid[keep]])
        b = np.concatenate([mid[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])

"""Pick-and-freeze designs and variance-based reference indices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import DataMatrix, make_rng, sample_uniform
from .errors import SizeMismatch, ZeroVariance


@dataclass(frozen=True, eq=False)
class PickFreezeDesign:
    """Base sample plus one frozen copy per input.

    ``x_frozen[k]`` shares column ``k`` with ``x_base`` and redraws every other
    column. ``x_complement[k]`` (only built when requested) shares every column
    except ``k`` and redraws column ``k``; it feeds the total-effect estimator.
    """

    x_base: DataMatrix
    x_frozen: tuple
    seed: int
    x_complement: Optional[tuple] = None

    @property
    def p(self) -> int:
        return self.x_base.d

    @property
    def n(self) -> int:
        return self.x_base.n

    @property
    def evaluations(self) -> int:
        blocks = 1 + len(self.x_frozen) + (len(self.x_complement) if self.x_complement else 0)
        return self.n * blocks


def build_pick_freeze(lows, highs, n: int, seed: int, complement: bool = False) -> PickFreezeDesign:
    """Pick-and-freeze design on a uniform box.

    Stream ``(seed, 0)`` draws the base sample, ``(seed, 1 + k)`` the
    redraws for input ``k`` and ``(seed, 1 + p + k)`` the complementary
    redraw of input ``k``.
    """
    base = sample_uniform(lows, highs, n, seed)
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    p = lows.size
    xb = base.values
    frozen, comp = [], []
    for k in range(p):
        fresh = lows + make_rng(seed, 1 + k).random((n, p)) * (highs - lows)
        fresh[:, k] = xb[:, k]
        frozen.append(DataMatrix(fresh, base.column_names))
        if complement:
            xc = xb.copy()
            xc[:, k] = lows[k] + make_rng(seed, 1 + p + k).random(n) * (highs[k] - lows[k])
            comp.append(DataMatrix(xc, base.column_names))
    return PickFreezeDesign(base, tuple(frozen), seed, tuple(comp) if complement else None)


def _paired(y, y_frozen):
    y = np.asarray(y, dtype=float)
    yf = np.asarray(y_frozen, dtype=float)
    y = y.reshape(len(y), -1) if y.ndim else y.reshape(1, 1)
    yf = yf.reshape(len(yf), -1) if yf.ndim else yf.reshape(1, 1)
    if y.shape != yf.shape:
        raise SizeMismatch(f"paired samples differ in shape: {y.shape} vs {yf.shape}")
    if len(y) < 2:
        raise SizeMismatch("need at least two samples")
    return y, yf


def first_order_pf(y, y_frozen) -> float:
    """Pick-and-freeze first-order index ``Cov(Y, Y_k) / Var(Y)``.

    The mean of the pooled sample ``(y, y_frozen)`` is used in both the
    covariance and the variance term. Not clamped to [0, 1]. For a
    multivariate output the covariances and variances of the columns are
    summed before taking the ratio.
    """
    y, yf = _paired(y, y_frozen)
    m = 0.5 * (y.mean(axis=0) + yf.mean(axis=0))
    var = np.sum(0.5 * (np.mean(y**2, axis=0) + np.mean(yf**2, axis=0)) - m**2)
    if var <= 1e-14 * max(1.0, float(np.sum(m**2))):
        raise ZeroVariance("output variance is zero")
    return float(np.sum(np.mean(y * yf, axis=0) - m**2) / var)


def total_effect_pf(y, y_frozen_all_but_k) -> float:
    """Total-effect index ``1 - Cov(Y, Y_{-k}) / Var(Y)``."""
    return 1.0 - first_order_pf(y, y_frozen_all_but_k)

"""Distance covariance and distance correlation sensitivity indices.

The empirical squared distance covariance is computed from double-centered
distance matrices::

    V2_n(X, Y) = (1/n^2) sum_ij A_ij B_ij

and the distance correlation is ``R_n = sqrt(V2_n(X,Y) / sqrt(V2_n(X,X) V2_n(Y,Y)))``,
set to 0 when the denominator vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import as_matrix
from .errors import BadAlpha, SizeMismatch
from .kernels import SemiMetricSpec, center, pairwise_distances

CLAMP_TOL = 1e-12
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class DcovConfig:
    """Exponent of the distances and optional semi-metrics per argument.

    ``alpha`` must lie in (0, 2); the alpha -> 2 limit (squared covariance)
    is not a distance covariance and is handled by :mod:`depsens.sobol`.
    """

    alpha: float = 1.0
    metric_x: Optional[SemiMetricSpec] = None
    metric_y: Optional[SemiMetricSpec] = None

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise BadAlpha(f"alpha must lie in (0, 2), got {self.alpha}")


def _clamp(v: float) -> float:
    if -CLAMP_TOL <= v < 0:
        return 0.0
    return v


def distance_matrix(x, alpha: float = 1.0, metric: Optional[SemiMetricSpec] = None) -> np.ndarray:
    if metric is not None:
        d = metric.distances(x)
        return d if alpha == 1 else d**alpha
    return pairwise_distances(x, alpha=alpha)


def dcov2(a: np.ndarray, b: np.ndarray) -> float:
    """Squared distance covariance from two distance matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise SizeMismatch(f"distance matrices differ in shape: {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise SizeMismatch("need at least two samples")
    return _clamp(float(np.mean(center(a) * center(b))))


def _ratio(cross: float, self_x: float, self_y: float) -> float:
    denom = self_x * self_y
    if denom <= DEGENERATE_TOL:
        return 0.0
    r2 = cross / np.sqrt(denom)
    # bounded by Cauchy-Schwarz; guard rounding
    return float(np.sqrt(min(max(r2, 0.0), 1.0)))


def _centered_pair(x, y, cfg: DcovConfig):
    x, y = as_matrix(x), as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise SizeMismatch(f"samples differ in size: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise SizeMismatch("need at least two samples")
    A = center(distance_matrix(x, cfg.alpha, cfg.metric_x))
    B = center(distance_matrix(y, cfg.alpha, cfg.metric_y))
    return A, B


def dcor(x, y, cfg: DcovConfig = DcovConfig()) -> float:
    """Empirical distance correlation R_n(X, Y) in [0, 1]."""
    A, B = _centered_pair(x, y, cfg)
    return dcor_from_centered(A, B)


def dcor_from_centered(A: np.ndarray, B: np.ndarray) -> float:
    return _ratio(
        _clamp(float(np.mean(A * B))),
        _clamp(float(np.mean(A * A))),
        _clamp(float(np.mean(B * B))),
    )


def dcor_index(data, inputs: Sequence, outputs, cfg: DcovConfig = DcovConfig()) -> np.ndarray:
    """Distance correlation between each input (or input group) and the output.

    Parameters
    ----------
    data : DataMatrix or array (n, p)
        Input sample.
    inputs : sequence
        Each element is a column index or a tuple of indices (a group).
    outputs : DataMatrix or array (n, q)
        Output sample.
    """
    x = as_matrix(data)
    B = center(distance_matrix(as_matrix(outputs), cfg.alpha, cfg.metric_y))
    if x.shape[0] != B.shape[0]:
        raise SizeMismatch("inputs and outputs differ in sample size")
    out = []
    for sel in inputs:
        cols = list(np.atleast_1d(sel))
        A = center(distance_matrix(x[:, cols], cfg.alpha, cfg.metric_x))
        out.append(dcor_from_centered(A, B))
    return np.array(out)


def dcor_pick_freeze(y, y_frozen, alpha: float = 1.0) -> float:
    """Distance correlation between an output sample and its pick-and-freeze copy."""
    return dcor(y, y_frozen, DcovConfig(alpha=alpha))

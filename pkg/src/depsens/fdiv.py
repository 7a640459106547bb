"""Csiszar f-divergence indices and k-nearest-neighbour mutual information.

An f-divergence index is the plug-in mean ``(1/n) sum_i f(1 / r(x_i, y_i))``
where ``r = p_XY / (p_X p_Y)`` is a density ratio estimate. The only ratio
estimator shipped is a Gaussian kernel density ratio (:func:`kde_ratio`);
any object with the :class:`RatioEstimate` interface can be passed instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .data import as_matrix, make_rng
from .errors import BadK, DegenerateSample, InvalidData, SizeMismatch

RATIO_FLOOR = 1e-6


def _kl_neg_log(t):
    return -np.log(t)


def _kl_tlogt(t):
    return t * np.log(t)


def _hellinger(t):
    return (np.sqrt(t) - 1.0) ** 2


def _total_variation(t):
    return np.abs(t - 1.0)


def _pearson_chi2(t):
    return (t - 1.0) ** 2


def _neyman_chi2(t):
    return (1.0 - t**2) / t


F_CHOICES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "kl_neg_log": _kl_neg_log,
    "kl_tlogt": _kl_tlogt,
    "hellinger": _hellinger,
    "total_variation": _total_variation,
    "pearson_chi2": _pearson_chi2,
    "neyman_chi2": _neyman_chi2,
}


@dataclass(frozen=True)
class RatioEstimate:
    """Density ratio ``r(x, y)``, clamped below at ``floor``."""

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    floor: float = RATIO_FLOOR

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        return np.maximum(self.evaluator(x, y), self.floor)

    @classmethod
    def constant(cls, value: float = 1.0) -> "RatioEstimate":
        return cls(lambda x, y: np.full(np.broadcast(x, y).shape, float(value)))


def _vector(v, name):
    a = np.asarray(v, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise InvalidData(f"{name} must be a scalar variable (1-D)")
    return a


def _gauss(d, h):
    return np.exp(-0.5 * (d / h) ** 2) / (h * np.sqrt(2.0 * np.pi))


def kde_ratio(xs, ys, floor: float = RATIO_FLOOR) -> RatioEstimate:
    """Gaussian KDE estimate of ``p_XY(x, y) / (p_X(x) p_Y(y))``.

    Bandwidths follow Silverman's rule per coordinate: ``s (4 / (3n))^(1/5)``
    for the marginals and ``s n^(-1/6)`` for each axis of the diagonal joint
    kernel.
    """
    x, y = _vector(xs, "xs"), _vector(ys, "ys")
    if x.size != y.size:
        raise SizeMismatch(f"samples differ in size: {x.size} vs {y.size}")
    n = x.size
    if n < 10:
        raise DegenerateSample(f"need at least 10 samples, got {n}")
    sx, sy = x.std(ddof=1), y.std(ddof=1)
    if sx == 0 or sy == 0:
        raise DegenerateSample("zero variance sample; bandwidth undefined")
    f1 = (4.0 / (3.0 * n)) ** 0.2
    f2 = n ** (-1.0 / 6.0)
    hx1, hy1, hx2, hy2 = sx * f1, sy * f1, sx * f2, sy * f2

    def evaluate(u, v):
        out = np.empty(u.size)
        # blocks keep the (m, n) temporaries small
        for start in range(0, u.size, 1024):
            du = u[start:start + 1024, None] - x[None, :]
            dv = v[start:start + 1024, None] - y[None, :]
            joint = np.mean(_gauss(du, hx2) * _gauss(dv, hy2), axis=1)
            px = np.mean(_gauss(du, hx1), axis=1)
            py = np.mean(_gauss(dv, hy1), axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[start:start + 1024] = joint / (px * py)
        return np.nan_to_num(out, nan=floor, posinf=1.0 / floor)

    return RatioEstimate(evaluate, floor)


def fdiv_index(xs, ys, choice: str = "kl_neg_log", ratio: RatioEstimate = None) -> float:
    """Plug-in f-divergence sensitivity index of ``xs`` on ``ys``.

    ``ratio`` defaults to :func:`kde_ratio` fitted on the same sample.
    Negative plug-in values are clamped to 0.
    """
    try:
        f = F_CHOICES[choice]
    except KeyError:
        raise InvalidData(f"unknown f-divergence {choice!r}; choose from {sorted(F_CHOICES)}") from None
    x, y = _vector(xs, "xs"), _vector(ys, "ys")
    if ratio is None:
        ratio = kde_ratio(x, y)
    r = ratio(x, y)
    value = float(np.mean(f(1.0 / r)))
    return max(value, 0.0)


def fdiv_indices(xs, ys, choices=tuple(F_CHOICES)) -> dict[str, float]:
    """All requested f-divergence indices from a single ratio fit."""
    ratio = kde_ratio(xs, ys)
    return {c: fdiv_index(xs, ys, c, ratio) for c in choices}


def smi_index(xs, ys, ratio: RatioEstimate = None) -> float:
    """Squared-loss mutual information, i.e. the Neyman chi^2 index."""
    return fdiv_index(xs, ys, "neyman_chi2", ratio)


def _break_ties(a: np.ndarray, rng) -> np.ndarray:
    if len(np.unique(a, axis=0)) == len(a):
        return a
    span = np.ptp(a, axis=0)
    span = np.where(span > 0, span, 1.0)
    return a + 1e-10 * span * rng.standard_normal(a.shape)


def ksg_mi(xs, ys, k: int = 4, seed: int = 0) -> float:
    """Kraskov-Stoegbauer-Grassberger mutual information estimate (nats).

    Max-norm neighbourhoods::

        psi(k) + psi(n) - mean(psi(n_x + 1) + psi(n_y + 1))

    where ``n_x`` counts points strictly closer in x than the k-th joint
    neighbour. The estimate is not clamped and can be slightly negative.
    ``xs`` and ``ys`` may be multivariate, up to 3 dimensions in total.
    Duplicate points are separated by a seeded jitter of 1e-10 of the range.
    """
    x, y = as_matrix(xs), as_matrix(ys)
    if x.shape[0] != y.shape[0]:
        raise SizeMismatch(f"samples differ in size: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if not 1 <= k < n:
        raise BadK(f"need 1 <= k < n, got k={k}, n={n}")
    if x.shape[1] + y.shape[1] > 3:
        raise InvalidData("ksg_mi supports at most 3 dimensions in total")
    rng = make_rng(seed)
    x, y = _break_ties(x, rng), _break_ties(y, rng)
    joint = np.hstack([x, y])
    dist, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    eps = np.nextafter(dist[:, -1], 0)
    nx = cKDTree(x).query_ball_point(x, eps, p=np.inf, return_length=True) - 1
    ny = cKDTree(y).query_ball_point(y, eps, p=np.inf, return_length=True) - 1
    return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))

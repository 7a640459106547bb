"""HSIC, kernel distance correlation and permutation independence tests.

The biased estimator ``HSIC_n = Tr(K_X H K_Y H) / n^2`` is used throughout.
Since ``H`` is idempotent this equals ``sum(center(K_X) * K_Y) / n^2``, which
is what the permutation test exploits: the centered input matrix is computed
once and only the output Gram matrix is permuted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .data import DataMatrix, as_matrix, make_rng
from .errors import BadB, InvalidData, SizeMismatch
from .kernels import KernelSpec, center, gaussian, gram, pairwise_distances, resolve_bandwidth

CLAMP_TOL = 1e-12
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class HsicConfig:
    kernel_x: KernelSpec = field(default_factory=gaussian)
    kernel_y: KernelSpec = field(default_factory=gaussian)


def _clamp(v: float) -> float:
    return 0.0 if -CLAMP_TOL <= v < 0 else v


def _check_sizes(x, y):
    nx, ny = len(as_matrix(x)), len(as_matrix(y))
    if nx != ny:
        raise SizeMismatch(f"samples differ in size: {nx} vs {ny}")
    if nx < 2:
        raise SizeMismatch("need at least two samples")


def hsic_from_grams(Kx: np.ndarray, Ky: np.ndarray) -> float:
    n = Kx.shape[0]
    if Ky.shape != Kx.shape:
        raise SizeMismatch(f"Gram matrices differ in shape: {Kx.shape} vs {Ky.shape}")
    return _clamp(float(np.sum(center(Kx) * Ky)) / n**2)


def hsic_excess_from_grams(Kx: np.ndarray, Ky: np.ndarray) -> float:
    """HSIC minus its mean under uniform row permutations of one sample.

    For centered ``A``, ``B`` the permutation mean of ``sum(A * B[p][:, p])``
    is ``tr(A) tr(B) / (n - 1)``. Subtracting it removes the positive bias of
    the biased estimator, which otherwise grows with the input dimension.
    """
    n = Kx.shape[0]
    if Ky.shape != Kx.shape:
        raise SizeMismatch(f"Gram matrices differ in shape: {Kx.shape} vs {Ky.shape}")
    A, B = center(Kx), center(Ky)
    return (float(np.sum(A * B)) - np.trace(A) * np.trace(B) / (n - 1)) / n**2


def hsic(x, y, cfg: HsicConfig = HsicConfig()) -> float:
    """Biased empirical HSIC between two samples."""
    _check_sizes(x, y)
    return hsic_from_grams(gram(cfg.kernel_x, x), gram(cfg.kernel_y, y))


def normalized_hsic_from_grams(Kx: np.ndarray, Ky: np.ndarray) -> float:
    Kxc, Kyc = center(Kx), center(Ky)
    n2 = Kx.shape[0] ** 2
    cross = _clamp(float(np.sum(Kxc * Ky)) / n2)
    sx = _clamp(float(np.sum(Kxc * Kx)) / n2)
    sy = _clamp(float(np.sum(Kyc * Ky)) / n2)
    if sx <= DEGENERATE_TOL or sy <= DEGENERATE_TOL:
        return 0.0
    r2 = cross / np.sqrt(sx * sy)
    return float(np.sqrt(min(max(r2, 0.0), 1.0)))


def hsic_r(x, y, cfg: HsicConfig = HsicConfig()) -> float:
    """Kernel distance correlation ``sqrt(HSIC(X,Y) / sqrt(HSIC(X,X) HSIC(Y,Y)))``."""
    _check_sizes(x, y)
    return normalized_hsic_from_grams(gram(cfg.kernel_x, x), gram(cfg.kernel_y, y))


def hsic_index(data, inputs: Sequence, outputs, cfg: HsicConfig = HsicConfig()) -> np.ndarray:
    """Normalized HSIC index for each input column or column group."""
    Ky = gram(cfg.kernel_y, outputs)
    if len(as_matrix(data)) != Ky.shape[0]:
        raise SizeMismatch("inputs and outputs differ in sample size")
    return np.array([normalized_hsic_from_grams(gram(cfg.kernel_x, data, list(np.atleast_1d(sel))), Ky) for sel in inputs])


def hsic_pick_freeze(y, y_frozen, kernel_y: KernelSpec = None) -> float:
    """Normalized HSIC between an output sample and its pick-and-freeze copy.

    The same kernel acts on both samples; a median-heuristic bandwidth is
    resolved once on the pooled sample.
    """
    kernel_y = kernel_y or gaussian()
    _check_sizes(y, y_frozen)
    pooled = np.vstack([as_matrix(y), as_matrix(y_frozen)])
    spec = resolve_bandwidth(kernel_y, pooled)
    return normalized_hsic_from_grams(gram(spec, y), gram(spec, y_frozen))


@dataclass
class PermutationNull:
    """Permutation null distribution of a dependence statistic.

    ``p_value = (1 + #{null >= observed}) / (B + 1)``.
    """

    observed: float
    statistics: np.ndarray
    quantiles: dict
    p_value: float

    @property
    def num_permutations(self) -> int:
        return len(self.statistics)

    def quantile(self, level: float) -> float:
        if level in self.quantiles:
            return self.quantiles[level]
        return float(np.quantile(self.statistics, level))

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_value <= level


def _normalize_stat(cross, sx, sy):
    if sx <= DEGENERATE_TOL or sy <= DEGENERATE_TOL:
        return 0.0
    return float(np.sqrt(min(max(cross / np.sqrt(sx * sy), 0.0), 1.0)))


def _matrix_statistic(measure: str, x, y, cfg):
    """Return ``(Ax_centered, My, finish)`` so that the statistic under a
    row permutation ``p`` of y is ``finish(sum(Ax * My[p][:, p]) / n^2)``."""
    if measure in ("hsic", "hsic_r"):
        cfg = cfg or HsicConfig()
        Kx, Ky = gram(cfg.kernel_x, x), gram(cfg.kernel_y, y)
    elif measure in ("dcov2", "dcor"):
        alpha = getattr(cfg, "alpha", 1.0)
        Kx, Ky = pairwise_distances(x, alpha=alpha), pairwise_distances(y, alpha=alpha)
    else:
        raise InvalidData(f"unknown measure {measure!r}")
    Ax = center(Kx)
    if measure in ("hsic", "dcov2"):
        return Ax, Ky, _clamp
    n2 = Kx.shape[0] ** 2
    sx = _clamp(float(np.sum(Ax * Kx)) / n2)
    sy = _clamp(float(np.sum(center(Ky) * Ky)) / n2)
    return Ax, Ky, lambda v: _normalize_stat(_clamp(v), sx, sy)


FAST_MEASURES = ("hsic", "hsic_r", "dcov2", "dcor")


def permutation_test(
    measure: Union[str, Callable],
    x,
    y,
    B: int = 199,
    seed: int = 0,
    cfg=None,
    levels: Sequence[float] = (0.95,),
    workers: int = 1,
) -> PermutationNull:
    """Permutation test of independence between ``x`` and ``y``.

    Parameters
    ----------
    measure : str or callable
        One of ``"hsic"``, ``"hsic_r"``, ``"dcov2"``, ``"dcor"``, or any
        callable ``stat(x, y) -> float`` (recomputed from scratch on every
        permutation).
    B : int
        Number of permutations of the rows of ``y``.
    seed : int
        Permutation ``b`` uses the stream ``make_rng(seed, b)``, so results do
        not depend on ``workers``.
    cfg : HsicConfig or DcovConfig, optional
        Kernel or exponent configuration for the named measures.
    levels : sequence of float
        Null quantiles to report.
    """
    if B < 1:
        raise BadB(f"number of permutations must be at least 1, got {B}")
    _check_sizes(x, y)
    n = len(as_matrix(x))
    if callable(measure):
        y_arr = np.asarray(y.values if isinstance(y, DataMatrix) else y)

        def stat(perm):
            return float(measure(x, y_arr if perm is None else y_arr[perm]))

    else:
        Ax, My, finish = _matrix_statistic(measure, x, y, cfg)

        def stat(perm):
            M = My if perm is None else My[np.ix_(perm, perm)]
            return finish(float(np.sum(Ax * M)) / n**2)

    observed = stat(None)

    def one(b):
        return stat(make_rng(seed, b).permutation(n))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            null = np.fromiter(pool.map(one, range(B)), float, count=B)
    else:
        null = np.fromiter((one(b) for b in range(B)), float, count=B)
    tol = 1e-12 * max(abs(observed), 1e-300)
    count = int(np.sum(null >= observed - tol))
    quantiles = {float(lv): float(np.quantile(null, lv)) for lv in levels}
    return PermutationNull(observed, null, quantiles, (1 + count) / (B + 1))

"""Kernels, semi-metrics, Gram and distance matrices, and double centering.

Gram and distance matrices are plain symmetric ``numpy`` arrays. The
estimators in :mod:`depsens.dcor` and :mod:`depsens.hsic` share the
double-centering in :func:`center`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import DataMatrix, as_matrix
from .errors import BadAlpha, BadComponents, InvalidData, KindMismatch, RankDeficientWarning, ZeroBandwidth

MEDIAN = "median"
FAMILIES = ("gaussian", "laplace", "distance_induced", "categorical", "semimetric_gaussian")


@dataclass(frozen=True, eq=False)
class SemiMetricSpec:
    """PCA semi-metric: Euclidean distance between principal component scores.

    ``mean`` and ``loadings`` (shape ``(m, q)``, orthonormal rows) are set once
    fitted by :func:`fit_pca_semimetric`.
    """

    num_components: int
    kind: str = "pca"
    mean: Optional[np.ndarray] = None
    loadings: Optional[np.ndarray] = None
    explained_variance_ratio: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind != "pca":
            raise InvalidData(f"unknown semi-metric kind {self.kind!r}")
        if self.num_components < 1:
            raise BadComponents("number of principal components must be at least 1")

    @property
    def fitted(self) -> bool:
        return self.loadings is not None

    def scores(self, y) -> np.ndarray:
        if not self.fitted:
            raise InvalidData("semi-metric is not fitted")
        y = as_matrix(y)
        return (y - self.mean) @ self.loadings.T

    def distances(self, y) -> np.ndarray:
        """Pairwise semi-metric between the rows of ``y``."""
        return euclidean_distances(self.scores(y))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Declarative kernel description.

    ``bandwidth`` is a positive float or ``"median"`` (median heuristic,
    resolved on the data the Gram matrix is built from). It is ignored by the
    ``distance_induced`` and ``categorical`` families.
    """

    family: str = "gaussian"
    bandwidth: Union[float, str] = MEDIAN
    semimetric: Optional[SemiMetricSpec] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidData(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.bandwidth != MEDIAN:
            bw = float(self.bandwidth)
            if not bw > 0:
                raise ZeroBandwidth(f"explicit bandwidth must be positive, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", bw)
        if (self.semimetric is not None) != (self.family == "semimetric_gaussian"):
            raise InvalidData("a semimetric is required by, and only by, the semimetric_gaussian family")


def gaussian(bandwidth=MEDIAN) -> KernelSpec:
    return KernelSpec("gaussian", bandwidth)


def laplace(bandwidth=MEDIAN) -> KernelSpec:
    return KernelSpec("laplace", bandwidth)


def distance_induced() -> KernelSpec:
    return KernelSpec("distance_induced")


def categorical() -> KernelSpec:
    return KernelSpec("categorical")


def semimetric_gaussian(semimetric: SemiMetricSpec, bandwidth=MEDIAN) -> KernelSpec:
    return KernelSpec("semimetric_gaussian", bandwidth, semimetric)


def euclidean_distances(x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(x, "euclidean"))


def _median_of_positive(dist_condensed: np.ndarray) -> float:
    pos = dist_condensed[dist_condensed > 0]
    if pos.size == 0:
        raise ZeroBandwidth("all points coincide; median heuristic is undefined")
    return float(np.median(pos))


def median_heuristic(data, cols=None) -> float:
    """Median of the strictly positive pairwise Euclidean distances."""
    x = _columns(data, cols)
    if x.shape[0] < 2:
        raise ZeroBandwidth("median heuristic needs at least two samples")
    return _median_of_positive(pdist(x, "euclidean"))


def _columns(data, cols):
    if cols is None:
        return as_matrix(data)
    if isinstance(data, DataMatrix):
        return as_matrix(data.select(cols))
    return as_matrix(data)[:, list(np.atleast_1d(cols))]


def _is_categorical(data, cols) -> bool:
    if not isinstance(data, DataMatrix):
        return False
    sub = data if cols is None else data.select(cols)
    return sub.is_categorical


def gram(spec: KernelSpec, data, cols=None) -> np.ndarray:
    """Uncentered Gram matrix of ``spec`` on the selected columns.

    gaussian: ``exp(-|x - x'|^2 / (2 s^2))``; laplace: ``exp(-|x - x'|_1 / s)``;
    distance_induced: ``(|x| + |x'| - |x - x'|) / 2``; categorical:
    ``1/n_y`` when labels agree, else 0; semimetric_gaussian: gaussian of the
    semi-metric.

    Raw arrays are accepted for every family. The categorical family checks
    column kinds when given a DataMatrix and integer codes otherwise.
    """
    fam = spec.family
    if fam == "categorical":
        if isinstance(data, DataMatrix) and not _is_categorical(data, cols):
            raise KindMismatch("categorical kernel requires a categorical column")
        z = _columns(data, cols)
        if z.shape[1] != 1:
            raise KindMismatch("categorical kernel acts on a single column")
        z = z[:, 0]
        if np.any(z < 0) or np.any(z != np.round(z)):
            raise KindMismatch("categorical kernel requires non-negative integer codes")
        codes, inverse, counts = np.unique(z, return_inverse=True, return_counts=True)
        same = inverse[:, None] == inverse[None, :]
        return np.where(same, 1.0 / counts[inverse][:, None], 0.0)

    if fam == "semimetric_gaussian":
        dist = spec.semimetric.distances(_columns(data, cols))
        bw = spec.bandwidth
        if bw == MEDIAN:
            bw = _median_of_positive(dist[np.triu_indices_from(dist, 1)])
        return np.exp(-dist**2 / (2.0 * bw**2))

    x = _columns(data, cols)
    if fam == "distance_induced":
        norms = np.linalg.norm(x, axis=1)
        return 0.5 * (norms[:, None] + norms[None, :] - euclidean_distances(x))

    bw = spec.bandwidth
    if bw == MEDIAN:
        bw = median_heuristic(x)
    if fam == "gaussian":
        sq = squareform(pdist(x, "sqeuclidean")) if x.shape[0] > 1 else np.zeros((1, 1))
        return np.exp(-sq / (2.0 * bw**2))
    # laplace
    l1 = squareform(pdist(x, "cityblock")) if x.shape[0] > 1 else np.zeros((1, 1))
    return np.exp(-l1 / bw)


def center(G: np.ndarray) -> np.ndarray:
    """Double-center ``G``: ``H G H`` with ``H = I - 11'/n``."""
    G = np.asarray(G, dtype=float)
    row = G.mean(axis=1, keepdims=True)
    col = G.mean(axis=0, keepdims=True)
    return G - row - col + G.mean()


def pairwise_distances(data, cols=None, alpha: float = 1.0) -> np.ndarray:
    """Matrix of ``|x_i - x_j|^alpha`` with ``0 < alpha <= 2``."""
    if not 0 < alpha <= 2:
        raise BadAlpha(f"alpha must lie in (0, 2], got {alpha}")
    d = euclidean_distances(_columns(data, cols))
    return d if alpha == 1 else d**alpha


def fit_pca_semimetric(outputs, m: int) -> SemiMetricSpec:
    """Fit the mean and top-``m`` principal axes of the outputs.

    Uses the q x q covariance when q <= n, the n x n dual otherwise. Each
    loading vector is signed so that its largest-magnitude entry is positive.
    If fewer than ``m`` eigenvalues are positive, the available count is used
    and a :class:`RankDeficientWarning` is emitted.
    """
    if m < 1:
        raise BadComponents("number of principal components must be at least 1")
    y = as_matrix(outputs)
    n, q = y.shape
    if m > min(n - 1, q):
        raise BadComponents(f"m={m} exceeds min(n - 1, q) = {min(n - 1, q)}")
    mean = y.mean(axis=0)
    yc = y - mean
    if q <= n:
        evals, evecs = np.linalg.eigh(yc.T @ yc / (n - 1))
        order = np.argsort(evals)[::-1]
        evals, vecs = evals[order], evecs[:, order].T
    else:
        evals, u = np.linalg.eigh(yc @ yc.T / (n - 1))
        order = np.argsort(evals)[::-1]
        evals, u = evals[order], u[:, order]
        keep = evals > 0
        vecs = np.zeros((len(evals), q))
        vecs[keep] = (yc.T @ u[:, keep] / np.sqrt(evals[keep] * (n - 1))).T
    tol = max(evals.max(initial=0.0), 0.0) * max(n, q) * np.finfo(float).eps
    usable = int(np.sum(evals > tol))
    if usable < m:
        warnings.warn(
            f"only {usable} positive eigenvalues; using {max(usable, 1)} of {m} requested components",
            RankDeficientWarning,
            stacklevel=2,
        )
        m = max(usable, 1)
    loadings = vecs[:m].copy()
    for row in loadings:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    total = evals[evals > 0].sum()
    ratio = evals[:m] / total if total > 0 else np.zeros(m)
    return SemiMetricSpec(m, "pca", mean, loadings, ratio)



def resolve_bandwidth(spec: KernelSpec, data) -> KernelSpec:
    """Return ``spec`` with a median-heuristic bandwidth fixed on ``data``."""
    if spec.bandwidth != MEDIAN or spec.family in ("distance_induced", "categorical"):
        return spec
    if spec.family == "semimetric_gaussian":
        dist = spec.semimetric.distances(data)
        bw = _median_of_positive(dist[np.triu_indices_from(dist, 1)])
    else:
        bw = median_heuristic(data)
    return KernelSpec(spec.family, bw, spec.semimetric)

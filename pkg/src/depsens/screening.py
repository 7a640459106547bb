"""Dependence-based screening: Max-Relevance, mRMR, iterative HSIC, HSIC Lasso.

Marginal dependence ``D(X^k, Y)`` is one of

* ``"dcor"``  - distance correlation R_n,
* ``"hsic"``  - normalized HSIC with Gaussian median-heuristic kernels,
* ``"ksg_mi"`` - k-nearest-neighbour mutual information (scalar inputs).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import DataMatrix, as_matrix, make_rng
from .dcor import dcor
from .errors import BadB, BadM, InvalidData, NonConvergenceWarning
from .fdiv import ksg_mi
from .hsic import HsicConfig, hsic_excess_from_grams, hsic_from_grams, hsic_r, normalized_hsic_from_grams, permutation_test
from .kernels import KernelSpec, center, distance_induced, gaussian, gram, median_heuristic

MEASURES = ("dcor", "hsic", "ksg_mi")
SELECTION_TOL = 1e-8


@dataclass
class ScreeningResult:
    """Selected inputs in selection order.

    ``scores`` holds the per-step trajectory: the criterion value of each
    added input for forward methods, the selected set after each outer
    iteration for the iterative scheme.
    """

    selected: tuple
    scores: list = field(default_factory=list)
    selection_probabilities: Optional[np.ndarray] = None
    stop_reason: str = "max_size"
    flagged: bool = False


def dependence(x, y, measure: str) -> float:
    if measure == "dcor":
        return dcor(x, y)
    if measure == "hsic":
        return hsic_r(x, y)
    if measure == "ksg_mi":
        return ksg_mi(x, y)
    raise InvalidData(f"unknown measure {measure!r}; choose from {MEASURES}")


def relevance_scores(data, outputs, measure: str = "hsic") -> np.ndarray:
    """``D(X^k, Y)`` for every input column."""
    x = as_matrix(data)
    y = outputs if isinstance(outputs, DataMatrix) else as_matrix(outputs)
    return np.array([dependence(x[:, [k]], y, measure) for k in range(x.shape[1])])


def max_relevance_rank(data, outputs, measure: str = "hsic", m: Optional[int] = None) -> ScreeningResult:
    """Rank inputs by marginal dependence, descending; ties keep index order."""
    scores = relevance_scores(data, outputs, measure)
    order = np.argsort(-scores, kind="stable")
    m = len(order) if m is None else m
    if not 1 <= m <= len(order):
        raise BadM(f"need 1 <= m <= p, got m={m}")
    sel = tuple(int(i) for i in order[:m])
    return ScreeningResult(sel, [float(scores[i]) for i in sel], None, "max_size")


def redundancy_matrix(data, measure: str = "hsic") -> np.ndarray:
    """Symmetric matrix of ``D(X^k, X^l)``; the diagonal is the self-dependence
    (1 for dcor/hsic, 0 for ksg_mi, whose self-value is infinite)."""
    x = as_matrix(data)
    p = x.shape[1]
    R = np.zeros((p, p))
    for k in range(p):
        R[k, k] = 0.0 if measure == "ksg_mi" else 1.0
        for l in range(k + 1, p):
            R[k, l] = R[l, k] = dependence(x[:, [k]], x[:, [l]], measure)
    return R


def mrmr_objective(relevance: np.ndarray, redundancy: np.ndarray, subset) -> float:
    """``mean_k D(X^k, Y) - mean_{k,l} D(X^k, X^l)`` over the subset."""
    s = list(subset)
    return float(np.mean(relevance[s]) - np.mean(redundancy[np.ix_(s, s)]))


def mrmr_forward(data, outputs, measure: str = "hsic", m: int = 1) -> ScreeningResult:
    """Greedy minimum-redundancy maximum-relevance forward selection.

    Each step adds the candidate maximizing ``D(X^c, Y) - mean_{s in S} D(X^c, X^s)``.
    Ties go to the lowest column index.
    """
    x = as_matrix(data)
    p = x.shape[1]
    if not 1 <= m <= p:
        raise BadM(f"need 1 <= m <= p, got m={m}")
    rel = relevance_scores(x, outputs, measure)
    cache: dict = {}

    def red(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            cache[key] = dependence(x[:, [key[0]]], x[:, [key[1]]], measure)
        return cache[key]

    selected, trajectory = [], []
    for _ in range(m):
        best, best_score = None, -np.inf
        for c in range(p):
            if c in selected:
                continue
            score = rel[c] - (np.mean([red(c, s) for s in selected]) if selected else 0.0)
            if score > best_score:
                best, best_score = c, score
        selected.append(best)
        trajectory.append(float(best_score))
    return ScreeningResult(tuple(selected), trajectory, None, "max_size")


def _group_gram(x: np.ndarray, cols, group_kernel: str, bandwidths: np.ndarray) -> np.ndarray:
    sub = x[:, list(cols)]
    if group_kernel == "joint_median":
        return gram(gaussian(), sub)
    if group_kernel == "distance":
        return gram(distance_induced(), sub)
    # product of per-input gaussians, each with its marginal median bandwidth
    return gram(gaussian(1.0), sub / bandwidths[list(cols)])


def iterative_hsic_screen(
    data,
    outputs,
    threshold: str = "permutation",
    level: float = 0.05,
    B: int = 199,
    seed: int = 0,
    top_fraction: float = 0.2,
    max_size: Optional[int] = None,
    group_kernel: str = "joint_median",
    compare: str = "excess",
    kernel_y: KernelSpec = None,
    marginal_test: HsicConfig = None,
) -> ScreeningResult:
    """Iterative HSIC feature screening.

    1. Marginal screen: keep inputs whose HSIC with the output exceeds the
       threshold, either the ``1 - level`` quantile of a per-input
       permutation null (``threshold="permutation"``) or the top
       ``top_fraction`` of inputs (``threshold="top_fraction"``).
    2. For every ``k`` outside the set ``u``, add ``k`` when
       ``HSIC(Y, (X^u, X^k)) > HSIC(Y, X^u)``.
    3. Repeat 2 until ``u`` is stable or reaches ``max_size``.

    Parameters
    ----------
    marginal_test : HsicConfig, optional
        Kernels of the step-1 permutation test. Defaults to distance-induced
        kernels on both sides, i.e. a distance covariance test, which has
        more power against monotone effects than Gaussian kernels.
    group_kernel : {"joint_median", "product", "distance"}
        Kernel on ``(X^u, X^k)`` in step 2. ``"joint_median"`` is a Gaussian
        with one median-heuristic bandwidth on the stacked inputs,
        ``"product"`` multiplies per-input Gaussians with marginal median
        bandwidths, ``"distance"`` is the distance-induced kernel.
    compare : {"excess", "raw", "normalized"}
        Score used to compare groups of different sizes against one output
        Gram matrix (``kernel_y``, Gaussian by default). The biased HSIC has
        a positive null bias that grows with the group dimension, so
        ``"raw"`` and ``"normalized"`` tend to accept pure-noise inputs.
        ``"excess"`` subtracts the exact permutation-null mean (see
        :func:`~depsens.hsic.hsic_excess_from_grams`).
    """
    x = as_matrix(data)
    n, p = x.shape
    max_size = p if max_size is None else int(max_size)
    if group_kernel not in ("product", "joint_median", "distance"):
        raise InvalidData(f"unknown group kernel {group_kernel!r}")
    if compare not in ("normalized", "raw", "excess"):
        raise InvalidData(f"unknown comparison {compare!r}")
    Ky = gram(kernel_y or gaussian(), outputs)
    bandwidths = np.array([median_heuristic(x[:, [k]]) for k in range(p)])
    score = {"normalized": normalized_hsic_from_grams, "raw": hsic_from_grams, "excess": hsic_excess_from_grams}[compare]

    def group_hsic(cols):
        return score(_group_gram(x, cols, group_kernel, bandwidths), Ky)

    marginal = np.array([group_hsic([k]) for k in range(p)])
    if threshold == "permutation":
        cfg = marginal_test or HsicConfig(distance_induced(), distance_induced())
        keep = []
        for k in range(p):
            null = permutation_test("hsic", x[:, [k]], outputs, B=B, seed=make_rng(seed, k).integers(2**63), cfg=cfg)
            keep.append(null.p_value <= level)
        u = [k for k in np.argsort(-marginal, kind="stable") if keep[k]]
    elif threshold == "top_fraction":
        count = max(1, int(np.ceil(top_fraction * p)))
        u = list(np.argsort(-marginal, kind="stable")[:count])
    else:
        raise InvalidData(f"unknown threshold policy {threshold!r}")
    u = [int(k) for k in u][:max_size]
    trajectory = [tuple(u)]
    if not u:
        return ScreeningResult((), trajectory, None, "threshold", flagged=True)

    stop = "stabilized"
    while True:
        if len(u) >= max_size:
            stop = "max_size"
            break
        base = group_hsic(u)
        gains = []
        for k in range(p):
            if k in u:
                continue
            value = group_hsic(u + [k])
            if value > base:
                gains.append((value, k))
        if not gains:
            break
        gains.sort(key=lambda t: (-t[0], t[1]))
        u = u + [k for _, k in gains][: max_size - len(u)]
        trajectory.append(tuple(u))
    return ScreeningResult(tuple(u), trajectory, None, stop)


@dataclass
class HsicLassoSolution:
    alpha: np.ndarray
    lam: float
    objective: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    gap: float = 0.0

    @property
    def support(self) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(self.alpha > SELECTION_TOL))


def lasso_objective(alpha, Q, b, c0, lam) -> float:
    """``c0/2 - b'a + a'Qa/2 + lam sum(a)``."""
    alpha = np.asarray(alpha, dtype=float)
    return float(0.5 * c0 - b @ alpha + 0.5 * alpha @ Q @ alpha + lam * alpha.sum())


def solve_nonnegative_lasso(Q, b, c0: float, lam: float, tol: float = 1e-8, max_sweeps: int = 10_000) -> HsicLassoSolution:
    """Cyclic coordinate descent for ``min F(a)`` subject to ``a >= 0``.

    ``F`` is :func:`lasso_objective`. The update for coordinate ``k`` is
    ``a_k = max(0, (b_k - sum_{l != k} Q_kl a_l - lam) / Q_kk)``. Stops when
    the largest coordinate change in a sweep is at most ``tol``.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    p = b.size
    alpha = np.zeros(p)
    history = [lasso_objective(alpha, Q, b, c0, lam)]
    converged = False
    sweeps = 0
    delta = np.inf
    for sweeps in range(1, max_sweeps + 1):
        delta = 0.0
        for k in range(p):
            if Q[k, k] <= 0:
                new = 0.0
            else:
                resid = b[k] - (Q[k] @ alpha - Q[k, k] * alpha[k]) - lam
                new = max(0.0, resid / Q[k, k])
            delta = max(delta, abs(new - alpha[k]))
            alpha[k] = new
        history.append(lasso_objective(alpha, Q, b, c0, lam))
        if delta <= tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"coordinate descent stopped after {sweeps} sweeps, last change {delta:.3g}", NonConvergenceWarning, stacklevel=2)
    return HsicLassoSolution(alpha, lam, history[-1], sweeps, converged, history, float(delta))


def lasso_gradient(alpha, Q, b, lam) -> np.ndarray:
    return Q @ alpha - b + lam


def hsic_lasso_terms(data, outputs, kernel_x: KernelSpec = None, kernel_y: KernelSpec = None, workers: int = 1):
    """HSIC matrices of the Lasso expansion with unit-Frobenius centered Grams.

    Returns ``(Q, b, c0)`` with ``Q_kl = HSIC_n(X^k, X^l)``,
    ``b_k = HSIC_n(X^k, Y)`` and ``c0 = HSIC_n(Y, Y)``.
    """
    x = as_matrix(data)
    n, p = x.shape
    kernel_x = kernel_x or gaussian()

    def unit(G):
        Gc = center(G)
        norm = np.linalg.norm(Gc)
        return Gc / norm if norm > 0 else Gc

    def build(k):
        return unit(gram(kernel_x, x[:, [k]])).ravel()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            Kx = np.array(list(pool.map(build, range(p))))
    else:
        Kx = np.array([build(k) for k in range(p)])
    Ky = unit(gram(kernel_y or gaussian(), outputs)).ravel()
    Q = Kx @ Kx.T / n**2
    b = Kx @ Ky / n**2
    c0 = float(Ky @ Ky) / n**2
    return Q, b, c0


def default_lambda(b: np.ndarray, c: float = 0.1) -> float:
    return c * float(np.max(b))


def hsic_lasso(data, outputs, lam: Optional[float] = None, c: float = 0.1, kernel_x=None, kernel_y=None, tol=1e-8, max_sweeps=10_000) -> HsicLassoSolution:
    """Nonnegative HSIC Lasso.

    ``lam`` defaults to ``c * max_k HSIC_n(X^k, Y)``.
    """
    Q, b, c0 = hsic_lasso_terms(data, outputs, kernel_x, kernel_y)
    if lam is None:
        lam = default_lambda(b, c)
    if lam < 0:
        raise InvalidData(f"lambda must be non-negative, got {lam}")
    return solve_nonnegative_lasso(Q, b, c0, lam, tol, max_sweeps)


METHODS = ("hsic_lasso", "max_relevance", "mrmr", "iterative_hsic")


def select(data, outputs, method: str, seed: int = 0, **kwargs) -> tuple:
    """Run one screening method and return the selected inputs."""
    if method == "hsic_lasso":
        return hsic_lasso(data, outputs, **kwargs).support
    if method == "max_relevance":
        return max_relevance_rank(data, outputs, **kwargs).selected
    if method == "mrmr":
        return mrmr_forward(data, outputs, **kwargs).selected
    if method == "iterative_hsic":
        return iterative_hsic_screen(data, outputs, seed=seed, **kwargs).selected
    raise InvalidData(f"unknown screening method {method!r}; choose from {METHODS}")


def bootstrap_selection(data, outputs, method: str = "hsic_lasso", B: int = 50, seed: int = 0, workers: int = 1, **kwargs) -> np.ndarray:
    """Per-input selection frequency over ``B`` bootstrap resamples.

    Resample ``b`` draws rows with replacement from ``make_rng(seed, b)``.
    """
    if B < 1:
        raise BadB(f"number of bootstrap resamples must be at least 1, got {B}")
    x = as_matrix(data)
    y = outputs
    n, p = x.shape

    def one(b):
        rows = make_rng(seed, b).integers(0, n, n)
        yb = y.take(rows) if isinstance(y, DataMatrix) else as_matrix(y)[rows]
        hits = np.zeros(p)
        hits[list(select(x[rows], yb, method, seed=seed + b, **kwargs))] = 1.0
        return hits

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(one, range(B)))
    else:
        hits = [one(b) for b in range(B)]
    return np.mean(hits, axis=0)

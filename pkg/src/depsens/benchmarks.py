"""Analytical test functions, level sets and reference Sobol indices.

=================  ====  ==========================================================
name               p     function
=================  ====  ==========================================================
linkletter_eta1    10    sum_{i<=8} 0.2 / 2^(i-1) x_i  (x9, x10 inert)
loeppky_eta2       10    6x1 + 4x2 + 5.5x3 + 3x1x2 + 2.2x1x3 + 1.4x2x3 + x4
                         + 0.5x5 + 0.2x6 + 0.1x7
ishigami_eta3      3     sin x1 + 5 sin^2 x2 + 0.1 x3^4 sin x1,  x ~ U(-pi, pi)
morris_eta4        30    a sum_{i<=k} x_i + b sum_{i<j<=k} x_i x_j,
                         a = sqrt(12) - 6 sqrt(0.1(k-1)), b = sqrt(12) sqrt(0.1(k-1))
soblev_eta5        20    exp(sum b_i x_i) - prod (exp(b_i) - 1) / b_i
synthetic_map      >=3   g x g Gaussian bump driven by x1 (amplitude), x2 (centre),
                         x3 (width)
=================  ====  ==========================================================

Inputs are independent uniforms on ``[0, 1]`` unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .data import CATEGORICAL, DataMatrix, as_matrix, make_rng
from .errors import DimMismatch, InvalidData, NoReference

SOBLEV_DEFAULT_B = tuple([1.0] * 8 + [0.01] * 12)

DESCRIPTIONS = {
    "linkletter_eta1": "linear decreasing-coefficient function, 10 inputs (8 active)",
    "loeppky_eta2": "low-interaction polynomial, 10 inputs (7 active)",
    "ishigami_eta3": "Ishigami function (a=5, b=0.1), 3 inputs on [-pi, pi]",
    "morris_eta4": "Morris screening function, 30 inputs (k active)",
    "soblev_eta5": "Sobol-Levitan exponential function, 20 inputs",
    "synthetic_map": "2-D Gaussian-bump field output (g x g pixels)",
}

ALIASES = {
    "linkletter": "linkletter_eta1",
    "eta1": "linkletter_eta1",
    "loeppky": "loeppky_eta2",
    "eta2": "loeppky_eta2",
    "ishigami": "ishigami_eta3",
    "eta3": "ishigami_eta3",
    "morris": "morris_eta4",
    "eta4": "morris_eta4",
    "soblev": "soblev_eta5",
    "sobol_levitan": "soblev_eta5",
    "eta5": "soblev_eta5",
    "map": "synthetic_map",
}


@dataclass(frozen=True, eq=False)
class BenchmarkSpec:
    name: str
    params: dict = field(default_factory=dict)
    p: int = 0
    q: int = 1

    @property
    def bounds(self):
        if self.name == "ishigami_eta3":
            return np.full(self.p, -np.pi), np.full(self.p, np.pi)
        return np.zeros(self.p), np.ones(self.p)

    def __call__(self, x) -> np.ndarray:
        return _evaluate(self, as_matrix(x))


def benchmark(name: str, **params) -> BenchmarkSpec:
    """Build and validate a benchmark specification.

    Parameters per name: ``morris_eta4``: ``k`` (1..10, default 5);
    ``soblev_eta5``: ``b`` (length-20 vector, default eight 1.0 then twelve
    0.01); ``synthetic_map``: ``grid`` (default 16) and ``p`` (default 5).
    """
    name = ALIASES.get(name, name)
    if name not in DESCRIPTIONS:
        raise InvalidData(f"unknown benchmark {name!r}; choose from {sorted(DESCRIPTIONS)}")
    allowed = {"morris_eta4": {"k"}, "soblev_eta5": {"b"}, "synthetic_map": {"grid", "p"}}.get(name, set())
    extra = set(params) - allowed
    if extra:
        raise InvalidData(f"benchmark {name!r} takes no parameter(s) {sorted(extra)}")
    if name == "linkletter_eta1" or name == "loeppky_eta2":
        return BenchmarkSpec(name, {}, 10, 1)
    if name == "ishigami_eta3":
        return BenchmarkSpec(name, {}, 3, 1)
    if name == "morris_eta4":
        k = params.get("k", 5)
        if isinstance(k, bool) or int(k) != k or not 1 <= k <= 10:
            raise InvalidData(f"morris_eta4 needs an integer k in [1, 10], got {k!r}")
        return BenchmarkSpec(name, {"k": int(k)}, 30, 1)
    if name == "soblev_eta5":
        b = tuple(float(v) for v in params.get("b", SOBLEV_DEFAULT_B))
        if len(b) != 20:
            raise InvalidData(f"soblev_eta5 needs a b-vector of length 20, got {len(b)}")
        return BenchmarkSpec(name, {"b": b}, 20, 1)
    grid = params.get("grid", 16)
    p = params.get("p", 5)
    if int(grid) != grid or grid < 1:
        raise InvalidData(f"synthetic_map grid must be a positive integer, got {grid!r}")
    if int(p) != p or p < 3:
        raise InvalidData(f"synthetic_map needs p >= 3, got {p!r}")
    return BenchmarkSpec(name, {"grid": int(grid), "p": int(p)}, int(p), int(grid) ** 2)


def linkletter(x) -> np.ndarray:
    x = as_matrix(x)
    coef = 0.2 / 2.0 ** np.arange(8)
    return x[:, :8] @ coef


def loeppky(x) -> np.ndarray:
    x = as_matrix(x)
    x1, x2, x3, x4, x5, x6, x7 = (x[:, i] for i in range(7))
    return (
        6 * x1 + 4 * x2 + 5.5 * x3 + 3 * x1 * x2 + 2.2 * x1 * x3 + 1.4 * x2 * x3
        + x4 + 0.5 * x5 + 0.2 * x6 + 0.1 * x7
    )


def ishigami(x, a: float = 5.0, b: float = 0.1) -> np.ndarray:
    x = as_matrix(x)
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])


def morris_coefficients(k: int) -> tuple[float, float]:
    s = math.sqrt(0.1 * (k - 1))
    return math.sqrt(12) - 6 * s, math.sqrt(12) * s


def morris(x, k: int = 5) -> np.ndarray:
    x = as_matrix(x)
    alpha, beta = morris_coefficients(k)
    active = x[:, :k]
    s = active.sum(axis=1)
    pairs = 0.5 * (s**2 - np.sum(active**2, axis=1))
    return alpha * s + beta * pairs


def _soblev_factor(b: np.ndarray) -> np.ndarray:
    small = np.abs(b) < 1e-12
    safe = np.where(small, 1.0, b)
    return np.where(small, 1.0, np.expm1(safe) / safe)


def soblev(x, b=SOBLEV_DEFAULT_B) -> np.ndarray:
    x = as_matrix(x)
    b = np.asarray(b, dtype=float)
    return np.exp(x @ b) - np.prod(_soblev_factor(b))


def bump_value(x, u: float, v: float) -> np.ndarray:
    """Field value at pixel centre ``(u, v)`` for each input row."""
    x = as_matrix(x)
    amp = 1.0 + 2.0 * x[:, 0]
    cx = 0.2 + 0.6 * x[:, 1]
    cy = 0.8 - 0.6 * x[:, 1]
    width = 0.08 + 0.2 * x[:, 2]
    return amp * np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / (2.0 * width**2))


def synthetic_map(x, grid: int = 16) -> np.ndarray:
    """Row-major ``grid x grid`` field per input row, shape ``(n, grid**2)``."""
    centres = (np.arange(grid) + 0.5) / grid
    cols = [bump_value(x, u, v) for v in centres for u in centres]
    return np.column_stack(cols)


def _evaluate(spec: BenchmarkSpec, x: np.ndarray) -> np.ndarray:
    if x.shape[1] != spec.p:
        raise DimMismatch(f"{spec.name} expects {spec.p} inputs, got {x.shape[1]}")
    name = spec.name
    if name == "linkletter_eta1":
        return linkletter(x)
    if name == "loeppky_eta2":
        return loeppky(x)
    if name == "ishigami_eta3":
        return ishigami(x)
    if name == "morris_eta4":
        return morris(x, spec.params["k"])
    if name == "soblev_eta5":
        return soblev(x, spec.params["b"])
    return synthetic_map(x, spec.params["grid"])


def eval_benchmark(spec: BenchmarkSpec, x) -> DataMatrix:
    """Evaluate the benchmark row-wise; returns an ``(n, q)`` DataMatrix."""
    y = as_matrix(_evaluate(spec, as_matrix(x)))
    names = ("y",) if spec.q == 1 else tuple(f"y{j + 1}" for j in range(spec.q))
    return DataMatrix(y, names)


def level_set_transform(y, t: float) -> DataMatrix:
    """Categorical indicator ``1{y > t}`` (strict inequality)."""
    y = np.asarray(y, dtype=float).ravel()
    return DataMatrix((y > t).astype(float), ("z",), (CATEGORICAL,))


@dataclass(frozen=True, eq=False)
class ReferenceIndices:
    """Reference first-order and total Sobol indices.

    ``tag`` is ``"paper_formula"`` or ``"oracle_monte_carlo"``.
    """

    name: str
    first_order: np.ndarray
    total: np.ndarray
    tag: str
    metadata: dict


def _linkletter_formula() -> np.ndarray:
    i = np.arange(1, 11)
    s = 0.75 * 0.25 ** (i - 1) / (1 - 0.25**10)
    s[8:] = 0.0
    return s


def conditional_variance_oracle(func, lows, highs, nodes: int = 200, inner: int = 5000, seed: int = 0):
    """Brute-force first-order and total Sobol indices of ``func``.

    Each conditioned input is integrated with ``nodes``-point Gauss-Legendre
    quadrature while the remaining inputs are sampled by plain Monte Carlo
    (``inner`` draws), i.e. ``nodes * inner`` model runs per index. The
    first-order variance is corrected for the inner sampling noise. Totals
    swap the roles: a quarter of the nodes for the conditioned input and four
    times as many outer draws of the others, again ``nodes * inner`` runs. The
    outer draws form a Latin hypercube, which tames heavy-tailed conditional
    variances such as the ``x3^4`` term of Ishigami.
    """
    lows, highs = np.asarray(lows, float), np.asarray(highs, float)
    p = lows.size
    t, w = np.polynomial.legendre.leggauss(nodes)
    w = w / 2.0
    tn, wn = np.polynomial.legendre.leggauss(max(nodes // 4, 1))
    wn = wn / 2.0
    outer = inner * (nodes // max(nodes // 4, 1))
    first, total = np.zeros(p), np.zeros(p)
    for k in range(p):
        xk = lows[k] + (t + 1) / 2 * (highs[k] - lows[k])
        # first order: E over nodes of (E[Y | X_k])
        rng = make_rng(seed, 2 * k)
        means, sq, var_in = np.empty(nodes), np.empty(nodes), np.empty(nodes)
        for j in range(nodes):
            x = lows + rng.random((inner, p)) * (highs - lows)
            x[:, k] = xk[j]
            y = func(x)
            means[j], sq[j], var_in[j] = y.mean(), np.mean(y**2), y.var(ddof=1)
        mu = w @ means
        var_y = w @ sq - mu**2
        v1 = w @ (means**2 - var_in / inner) - mu**2
        first[k] = v1 / var_y
        # total: E over the other inputs of Var(Y | X_~k), inner variance by quadrature
        lhs = qmc.LatinHypercube(d=p, seed=make_rng(seed, 2 * k + 1)).random(outer)
        xk_t = lows[k] + (tn + 1) / 2 * (highs[k] - lows[k])
        vt = 0.0
        for start in range(0, outer, 1000):
            block = lows + lhs[start:start + 1000] * (highs - lows)
            x = np.repeat(block, len(tn), axis=0)
            x[:, k] = np.tile(xk_t, len(block))
            y = func(x).reshape(len(block), len(tn))
            m = y @ wn
            vt += np.sum(y**2 @ wn - m**2)
        total[k] = vt / outer / var_y
    return first, total


@lru_cache(maxsize=None)
def _oracle(name: str, params_key: tuple, nodes: int, inner: int, seed: int):
    spec = benchmark(name, **dict(params_key))
    lows, highs = spec.bounds
    return conditional_variance_oracle(spec, lows, highs, nodes, inner, seed)


def analytical_reference(name: str, nodes: int = 200, inner: int = 5000, seed: int = 20140101, **params) -> ReferenceIndices:
    """Reference Sobol indices for a scalar-output benchmark.

    ``linkletter_eta1`` returns the closed-form values (inputs 9 and 10 are
    inert and get 0). Other benchmarks use
    :func:`conditional_variance_oracle` with ``nodes * inner`` (default 10^6)
    runs per index and a fixed seed. ``soblev_eta5`` has a reference only for
    the default b-vector; ``synthetic_map`` has none.
    """
    spec = benchmark(name, **params)
    meta = {"benchmark": spec.name, "params": {k: list(v) if isinstance(v, tuple) else v for k, v in spec.params.items()}}
    if spec.name == "linkletter_eta1":
        s = _linkletter_formula()
        return ReferenceIndices(spec.name, s, s.copy(), "paper_formula", meta)
    if spec.name == "synthetic_map":
        raise NoReference("synthetic_map has a functional output; no scalar reference")
    if spec.name == "soblev_eta5" and spec.params["b"] != SOBLEV_DEFAULT_B:
        raise NoReference("soblev_eta5 reference exists only for the default b-vector")
    key = tuple(sorted((k, v) for k, v in spec.params.items()))
    first, total = _oracle(spec.name, key, nodes, inner, seed)
    meta.update({"runs_per_index": nodes * inner, "nodes": nodes, "inner": inner, "seed": seed})
    return ReferenceIndices(spec.name, first.copy(), total.copy(), "oracle_monte_carlo", meta)


def list_benchmarks() -> dict[str, str]:
    return dict(DESCRIPTIONS)

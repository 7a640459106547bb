"""Screening 30 Morris inputs and 20 Sobol-Levitan inputs with few runs.

Run with ``python demos/screening_walkthrough.py``. Compares Max-Relevance,
mRMR, HSIC Lasso with bootstrap selection probabilities, and the iterative
HSIC scheme. Active inputs are x1..x5 (Morris) and x1..x8 (Sobol-Levitan).
"""

import numpy as np

from depsens.benchmarks import benchmark, eval_benchmark
from depsens.data import sample_uniform
from depsens.screening import bootstrap_selection, hsic_lasso, iterative_hsic_screen, max_relevance_rank, mrmr_forward


def names(idx):
    return ", ".join(f"x{k + 1}" for k in sorted(idx))


morris = benchmark("morris", k=5)
x = sample_uniform(*morris.bounds, 50, seed=11)
y = eval_benchmark(morris, x)
print("Morris function, 30 inputs, n=50")
print("  max-relevance (dCor) top 5:", names(max_relevance_rank(x, y, "dcor", m=5).selected))
print("  max-relevance (HSIC) top 5:", names(max_relevance_rank(x, y, "hsic", m=5).selected))
print("  mRMR (HSIC), 5 steps      :", names(mrmr_forward(x, y, "hsic", m=5).selected))
sol = hsic_lasso(x, y)
print(f"  HSIC Lasso support        : {names(sol.support)} (lambda={sol.lam:.2e}, {sol.iterations} sweeps)")
prob = bootstrap_selection(x, y, "hsic_lasso", B=50, seed=11)
order = np.argsort(-prob, kind="stable")[:8]
print("  bootstrap P(selected)     :", ", ".join(f"x{k + 1}={prob[k]:.2f}" for k in order))

soblev = benchmark("soblev")
for n in (100, 50):
    hits = np.zeros(soblev.p)
    for r in range(10):
        xs = sample_uniform(*soblev.bounds, n, seed=100 + r)
        res = iterative_hsic_screen(xs, eval_benchmark(soblev, xs), seed=r)
        hits[list(res.selected)] += 1
    print(f"\nSobol-Levitan, 20 inputs, n={n}: iterative HSIC selection frequency over 10 samples")
    print("  actives  :", hits[:8] / 10)
    print("  inactives:", hits[8:] / 10)

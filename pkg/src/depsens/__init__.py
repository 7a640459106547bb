"""Dependence-measure sensitivity analysis and screening.

Sensitivity indices built from dependence measures between each input of a
model and its output: Csiszar f-divergences, mutual information, distance
correlation and the Hilbert-Schmidt independence criterion, alongside
pick-and-freeze Sobol indices and dependence-based screening.
"""

__version__ = "0.1.0"

from .benchmarks import (
    BenchmarkSpec,
    ReferenceIndices,
    analytical_reference,
    benchmark,
    eval_benchmark,
    level_set_transform,
    list_benchmarks,
)
from .data import CATEGORICAL, CONTINUOUS, ColumnSelector, DataMatrix, load_csv, make_rng, sample_uniform, write_csv
from .dcor import DcovConfig, dcor, dcor_index, dcor_pick_freeze, dcov2
from .errors import ConfigError, DepsensError, EstimationError
from .fdiv import F_CHOICES, RatioEstimate, fdiv_index, fdiv_indices, kde_ratio, ksg_mi, smi_index
from .hsic import HsicConfig, PermutationNull, hsic, hsic_index, hsic_pick_freeze, hsic_r, permutation_test
from .kernels import (
    KernelSpec,
    SemiMetricSpec,
    categorical,
    center,
    distance_induced,
    fit_pca_semimetric,
    gaussian,
    gram,
    laplace,
    median_heuristic,
    pairwise_distances,
    semimetric_gaussian,
)
from .screening import (
    HsicLassoSolution,
    ScreeningResult,
    bootstrap_selection,
    hsic_lasso,
    iterative_hsic_screen,
    max_relevance_rank,
    mrmr_forward,
)
from .sobol import PickFreezeDesign, build_pick_freeze, first_order_pf, total_effect_pf

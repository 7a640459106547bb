"""Config-driven experiments: validation, the replicate loop and report files.

A config is a YAML mapping::

    benchmark: ishigami          # or  csv: {inputs: x.csv, outputs: y.csv}
    params: {}                   # benchmark parameters (k, b, grid, p)
    level_set: 10.0              # optional, output becomes 1{y > t}
    n: 200
    replicates: 100
    seed: 0
    threads: 1
    indices:
      - dcor
      - dcor: {alpha: 0.5}
      - hsic: {kernel_x: gaussian, kernel_y: gaussian}
      - fdiv: hellinger
      - sobol_first_pf
    screening:
      iterative_hsic: {max_size: 10}
    permutation: {B: 199, level: 0.05}
    output_dir: results/ishigami

Every problem found during validation is reported with the line it comes
from. Replicate ``r`` draws its design from the seed stream ``(seed, 0, r)``,
so replicates can run in any order or on any number of threads.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Optional

import numpy as np
import yaml

from . import __version__
from .benchmarks import benchmark as make_benchmark
from .benchmarks import eval_benchmark, level_set_transform
from .data import CATEGORICAL, DataMatrix, load_csv, make_rng, sample_uniform
from .dcor import DcovConfig, dcor_from_centered, dcor_pick_freeze, distance_matrix
from .errors import ConfigError, DepsensError, EstimationError
from .fdiv import F_CHOICES, fdiv_index, ksg_mi
from .hsic import HsicConfig, hsic_pick_freeze, normalized_hsic_from_grams, permutation_test
from .kernels import MEDIAN, categorical, center, distance_induced, fit_pca_semimetric, gaussian, gram, laplace, semimetric_gaussian
from .screening import MEASURES, bootstrap_selection, hsic_lasso, iterative_hsic_screen, max_relevance_rank, mrmr_forward
from .sobol import build_pick_freeze, first_order_pf, total_effect_pf

TOP_KEYS = ("benchmark", "params", "level_set", "csv", "n", "replicates", "seed", "threads",
            "indices", "screening", "permutation", "output_dir")

INDEX_DEFAULTS: dict[str, dict] = {
    "sobol_first_pf": {},
    "sobol_total_pf": {},
    "fdiv": {"choice": "kl_neg_log"},
    "mi_ksg": {"k": 4},
    "dcor": {"alpha": 1.0},
    "dcor_pf": {"alpha": 1.0},
    "hsic": {"kernel_x": "gaussian", "kernel_y": "gaussian", "bandwidth_x": MEDIAN, "bandwidth_y": MEDIAN},
    "hsic_pf": {"kernel": "gaussian", "bandwidth": MEDIAN},
}

INDEX_DESCRIPTIONS = {
    "sobol_first_pf": "first-order Sobol index, pick-and-freeze (benchmark source only)",
    "sobol_total_pf": "total-effect Sobol index, pick-and-freeze (benchmark source only)",
    "fdiv": "f-divergence index from a KDE density ratio; choice: " + ", ".join(F_CHOICES),
    "mi_ksg": "k-nearest-neighbour mutual information (nats); option k",
    "dcor": "distance correlation R_n(X^k, Y); option alpha in (0, 2)",
    "dcor_pf": "distance correlation between Y and its pick-and-freeze copy (benchmark source only)",
    "hsic": "normalized HSIC; options kernel_x, kernel_y, bandwidth_x, bandwidth_y, components",
    "hsic_pf": "normalized HSIC between Y and its pick-and-freeze copy (benchmark source only)",
}

# value given directly instead of an option mapping, e.g. ``fdiv: hellinger``
SHORTHAND = {"fdiv": "choice", "mi_ksg": "k", "dcor": "alpha", "dcor_pf": "alpha", "hsic_pf": "kernel"}
PICK_FREEZE = ("sobol_first_pf", "sobol_total_pf", "dcor_pf", "hsic_pf")
PERMUTABLE = ("dcor", "hsic")
INPUT_KERNELS = ("gaussian", "laplace", "distance_induced")
OUTPUT_KERNELS = INPUT_KERNELS + ("categorical", "pca_gaussian")
DEFAULT_COMPONENTS = 3

SCREENING_DEFAULTS: dict[str, dict] = {
    "max_relevance": {"measure": "hsic", "m": None},
    "mrmr": {"measure": "hsic", "m": None},
    "iterative_hsic": {"threshold": "permutation", "top_fraction": 0.2, "max_size": None},
    "hsic_lasso": {"lambda": None, "c": 0.1, "bootstrap": 0},
}

RESULTS_SCHEMA = "results.schema.json"


@dataclass(frozen=True)
class IndexSpec:
    name: str
    options: dict
    label: str


@dataclass(frozen=True)
class ScreeningSpec:
    method: str
    options: dict


@dataclass(frozen=True)
class PermutationSpec:
    enabled: bool = False
    B: int = 199
    level: float = 0.05


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Fully resolved experiment configuration."""

    source: str
    n: int
    replicates: int = 1
    seed: int = 0
    threads: int = 1
    indices: tuple = ()
    screening: Optional[ScreeningSpec] = None
    permutation: PermutationSpec = PermutationSpec()
    output_dir: str = "results"
    benchmark: Optional[str] = None
    params: dict = field(default_factory=dict)
    level_set: Optional[float] = None
    csv: Optional[dict] = None
    inputs: Optional[DataMatrix] = field(default=None, repr=False)
    outputs: Optional[DataMatrix] = field(default=None, repr=False)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self, runtime: bool = True) -> dict:
        """Resolved config in the input grammar. ``runtime=False`` drops the
        fields that cannot change numeric results (threads, output_dir)."""
        d: dict[str, Any] = {}
        if self.source == "benchmark":
            d["benchmark"] = self.benchmark
            d["params"] = _plain(self.params)
            d["level_set"] = self.level_set
        else:
            d["csv"] = dict(self.csv)
        d["n"] = self.n
        d["replicates"] = self.replicates
        d["seed"] = self.seed
        d["indices"] = [{ix.name: _plain(ix.options)} for ix in self.indices]
        d["screening"] = {self.screening.method: _plain(self.screening.options)} if self.screening else None
        d["permutation"] = {"enabled": self.permutation.enabled, "B": self.permutation.B, "level": self.permutation.level}
        if runtime:
            d["threads"] = self.threads
            d["output_dir"] = self.output_dir
        return d


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------- validation


def _line_map(node, path=(), out=None, dupes=None):
    out = {} if out is None else out
    dupes = [] if dupes is None else dupes
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for key_node, value_node in node.value:
            key = key_node.value
            if key in seen:
                dupes.append((path + (key,), key_node.start_mark.line + 1))
            seen.add(key)
            _line_map(value_node, path + (key,), out, dupes)
            out[path + (key,)] = key_node.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_map(item, path + (i,), out, dupes)
    return out, dupes


def _dotted(path) -> str:
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s or "<root>"


class _Problems:
    def __init__(self, lines: dict):
        self.lines = lines
        self.items: list[str] = []

    def add(self, path, message: str) -> None:
        probe = tuple(path)
        while probe and probe not in self.lines:
            probe = probe[:-1]
        line = self.lines.get(probe, 1)
        self.items.append(f"line {line}: {_dotted(path)}: {message}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int_field(raw, key, default, minimum, problems):
    v = raw.get(key, default)
    if v is None and default is None:
        return None
    if not _is_int(v) or v < minimum:
        problems.add((key,), f"expected an integer >= {minimum}, got {v!r}")
        return default
    return v


def load_config_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ConfigError([f"cannot read config {path}: {e.strerror or e}"]) from None


def validate_config(source, base_dir: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a config file (path) or an already-parsed mapping.

    Raises :class:`ConfigError` carrying every problem found, each prefixed
    with its line number. Relative CSV paths are resolved against the config
    file's directory.
    """
    if isinstance(source, dict):
        raw, lines = source, {}
        base_dir = base_dir or os.getcwd()
    else:
        path = os.fspath(source)
        text = load_config_text(path)
        base_dir = base_dir or os.path.dirname(os.path.abspath(path))
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            raw = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else 1
            raise ConfigError([f"line {line}: not valid YAML: {getattr(e, 'problem', None) or e}"]) from None
        if node is None:
            raise ConfigError(["line 1: config is empty"])
        lines, dupes = _line_map(node)
        if dupes:
            raise ConfigError([f"line {ln}: {_dotted(p)}: duplicate key" for p, ln in dupes])
    if not isinstance(raw, dict):
        raise ConfigError(["line 1: config must be a mapping of keys to values"])
    problems = _Problems(lines)
    for key in raw:
        if key not in TOP_KEYS:
            problems.add((key,), f"unknown key; valid keys are {', '.join(TOP_KEYS)}")

    source_kind, spec, q, p, inputs, outputs, csv_cfg = _validate_source(raw, base_dir, problems)
    categorical_output = raw.get("level_set") is not None or bool(csv_cfg and csv_cfg.get("categorical_output"))

    replicates = _int_field(raw, "replicates", 1, 1, problems)
    seed = _int_field(raw, "seed", 0, 0, problems)
    threads = _int_field(raw, "threads", 1, 1, problems)
    if source_kind == "csv":
        n_default = inputs.n if inputs is not None else 2
        n = _int_field(raw, "n", n_default, 2, problems)
        if inputs is not None and n != inputs.n:
            problems.add(("n",), f"n={n} does not match the {inputs.n} rows of the csv sample")
        if replicates is not None and replicates != 1:
            problems.add(("replicates",), "a csv source holds one fixed sample; replicates must be 1")
    else:
        if "n" not in raw:
            problems.add((), "missing required key 'n' (sample size)")
        n = _int_field(raw, "n", 2, 2, problems)

    indices = _validate_indices(raw, source_kind, q, n, categorical_output, problems)
    screening = _validate_screening(raw, p, q, problems)
    permutation = _validate_permutation(raw, problems)
    if not indices and screening is None:
        problems.add(("indices",), "nothing to compute: give at least one index or a screening method")
    output_dir = raw.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        problems.add(("output_dir",), f"expected a directory path, got {output_dir!r}")
        output_dir = "results"
    if problems.items:
        raise ConfigError(problems.items)
    return ExperimentConfig(
        source=source_kind,
        n=n,
        replicates=replicates,
        seed=seed,
        threads=threads,
        indices=tuple(indices),
        screening=screening,
        permutation=permutation,
        output_dir=output_dir,
        benchmark=spec.name if spec is not None else None,
        params=dict(spec.params) if spec is not None else {},
        level_set=float(raw["level_set"]) if raw.get("level_set") is not None else None,
        csv=csv_cfg,
        inputs=inputs,
        outputs=outputs,
    )


def _validate_source(raw, base_dir, problems):
    has_b, has_c = raw.get("benchmark") is not None, raw.get("csv") is not None
    spec = inputs = outputs = csv_cfg = None
    q = p = 1
    if has_b == has_c:
        problems.add((), "give exactly one source: 'benchmark' or 'csv'")
        return ("benchmark" if has_b else "csv"), None, q, p, None, None, None
    if has_b:
        name, params = raw["benchmark"], raw.get("params") or {}
        if not isinstance(name, str):
            problems.add(("benchmark",), f"expected a benchmark name, got {name!r}")
            return "benchmark", None, q, p, None, None, None
        if not isinstance(params, dict):
            problems.add(("params",), "expected a mapping of benchmark parameters")
            params = {}
        try:
            spec = make_benchmark(name, **params)
        except DepsensError as e:
            problems.add(("benchmark",), str(e))
            return "benchmark", None, q, p, None, None, None
        except (TypeError, ValueError) as e:
            problems.add(("params",), f"invalid benchmark parameter: {e}")
            return "benchmark", None, q, p, None, None, None
        q, p = spec.q, spec.p
        t = raw.get("level_set")
        if t is not None:
            if not _is_number(t):
                problems.add(("level_set",), f"expected a numeric threshold, got {t!r}")
            elif q != 1:
                problems.add(("level_set",), "level sets need a scalar output")
            q = 1
        return "benchmark", spec, q, p, None, None, None

    c = raw["csv"]
    if "params" in raw or raw.get("level_set") is not None:
        problems.add(("csv",), "'params' and 'level_set' apply only to a benchmark source")
    if not isinstance(c, dict):
        problems.add(("csv",), "expected a mapping with keys 'inputs' and 'outputs'")
        return "csv", None, q, p, None, None, None
    for key in c:
        if key not in ("inputs", "outputs", "header", "categorical_output"):
            problems.add(("csv", key), "unknown key; valid keys are inputs, outputs, header, categorical_output")
    header = c.get("header", True)
    cat = c.get("categorical_output", False)
    if not isinstance(header, bool):
        problems.add(("csv", "header"), "expected true or false")
        header = True
    if not isinstance(cat, bool):
        problems.add(("csv", "categorical_output"), "expected true or false")
        cat = False
    loaded = {}
    for key in ("inputs", "outputs"):
        rel = c.get(key)
        if not isinstance(rel, str):
            problems.add(("csv",), f"missing file path '{key}'")
            continue
        full = rel if os.path.isabs(rel) else os.path.normpath(os.path.join(base_dir, rel))
        try:
            loaded[key] = (full, load_csv(full, has_header=header))
        except DepsensError as e:
            problems.add(("csv", key), str(e))
    csv_cfg = {"inputs": loaded.get("inputs", (c.get("inputs"),))[0], "outputs": loaded.get("outputs", (c.get("outputs"),))[0],
               "header": header, "categorical_output": cat}
    if len(loaded) == 2:
        (fx, inputs), (fy, outputs) = loaded["inputs"], loaded["outputs"]
        if inputs.n != outputs.n:
            problems.add(("csv",), f"row counts differ: {fx} has {inputs.n} rows, {fy} has {outputs.n}")
            inputs = outputs = None
        elif cat:
            try:
                outputs = DataMatrix(outputs.values, outputs.column_names, (CATEGORICAL,) * outputs.d)
            except DepsensError as e:
                problems.add(("csv", "categorical_output"), str(e))
        if outputs is not None:
            p, q = inputs.d, outputs.d
            if cat and q != 1:
                problems.add(("csv", "categorical_output"), "a categorical output must be a single column")
    return "csv", None, q, p, inputs, outputs, csv_cfg


def _index_label(name: str, options: dict) -> str:
    if name == "fdiv":
        return f"fdiv_{options['choice']}"
    defaults = INDEX_DEFAULTS[name]
    extra = [f"{k}-{v}" for k, v in options.items() if defaults.get(k, object()) != v]
    return "_".join([name] + extra)


def _check_bandwidth(v, path, problems):
    if v == MEDIAN:
        return v
    if not _is_number(v) or not v > 0:
        problems.add(path, f"bandwidth must be 'median' or a positive number, got {v!r}")
        return MEDIAN
    return float(v)


def _check_kernel(v, allowed, path, problems, categorical_output):
    if v not in allowed:
        problems.add(path, f"unknown kernel {v!r}; choose from {', '.join(allowed)}")
        return False
    if v == "categorical" and not categorical_output:
        problems.add(path, "categorical kernel needs a categorical output (level_set or csv categorical_output)")
        return False
    return True


def _validate_indices(raw, source_kind, q, n, categorical_output, problems):
    entries = raw.get("indices", [])
    if entries is None:
        entries = []
    if not isinstance(entries, list):
        problems.add(("indices",), "expected a list of index names or {name: options} mappings")
        return []
    out, labels = [], {}
    for i, entry in enumerate(entries):
        path = ("indices", i)
        if isinstance(entry, str):
            name, given = entry, {}
        elif isinstance(entry, dict) and len(entry) == 1:
            name, given = next(iter(entry.items()))
            if given is None:
                given = {}
            elif not isinstance(given, dict):
                if name in SHORTHAND:
                    given = {SHORTHAND[name]: given}
                else:
                    problems.add(path + (name,), "expected a mapping of options")
                    continue
        else:
            problems.add(path, "expected an index name or a single-key {name: options} mapping")
            continue
        if name not in INDEX_DEFAULTS:
            problems.add(path, f"unknown index {name!r}; valid names are {', '.join(INDEX_DEFAULTS)}")
            continue
        opath = path + (name,)
        if name in PICK_FREEZE and source_kind == "csv":
            problems.add(path, f"{name}: pick-and-freeze requires benchmark source")
            continue
        options = dict(INDEX_DEFAULTS[name])
        allowed = set(options) | ({"components"} if name in ("hsic", "hsic_pf") else set())
        for key in given:
            if key not in allowed:
                problems.add(opath + (key,), f"unknown option; valid options are {', '.join(sorted(allowed))}")
        options.update({k: v for k, v in given.items() if k in allowed})
        ok = _validate_index_options(name, options, opath, q, n, categorical_output, problems)
        if not ok:
            continue
        label = _index_label(name, options)
        if label in labels:
            problems.add(path, f"duplicate index {label!r} (also entry {labels[label]})")
            continue
        labels[label] = i
        out.append(IndexSpec(name, options, label))
    return out


def _validate_index_options(name, o, path, q, n, categorical_output, problems) -> bool:
    before = len(problems.items)
    if name == "fdiv":
        if o["choice"] not in F_CHOICES:
            problems.add(path + ("choice",), f"unknown f-divergence {o['choice']!r}; choose from {', '.join(F_CHOICES)}")
        if q != 1:
            problems.add(path, "fdiv needs a scalar output")
    elif name == "mi_ksg":
        if not _is_int(o["k"]) or not 1 <= o["k"] < n:
            problems.add(path + ("k",), f"k must be an integer with 1 <= k < n, got {o['k']!r}")
        if 1 + q > 3:
            problems.add(path, "mi_ksg supports at most 3 dimensions in total (input plus output)")
    elif name in ("dcor", "dcor_pf"):
        a = o["alpha"]
        if not _is_number(a) or not 0 < a < 2:
            problems.add(path + ("alpha",), f"alpha must lie in (0, 2), got {a!r}")
        else:
            o["alpha"] = float(a)
    elif name == "hsic":
        _check_kernel(o["kernel_x"], INPUT_KERNELS, path + ("kernel_x",), problems, categorical_output)
        _check_kernel(o["kernel_y"], OUTPUT_KERNELS, path + ("kernel_y",), problems, categorical_output)
        o["bandwidth_x"] = _check_bandwidth(o["bandwidth_x"], path + ("bandwidth_x",), problems)
        o["bandwidth_y"] = _check_bandwidth(o["bandwidth_y"], path + ("bandwidth_y",), problems)
        _check_components(o, o["kernel_y"], path, q, n, problems)
    elif name == "hsic_pf":
        _check_kernel(o["kernel"], OUTPUT_KERNELS, path + ("kernel",), problems, categorical_output)
        o["bandwidth"] = _check_bandwidth(o["bandwidth"], path + ("bandwidth",), problems)
        _check_components(o, o["kernel"], path, q, n, problems)
    return len(problems.items) == before


def _check_components(o, kernel, path, q, n, problems):
    if kernel != "pca_gaussian":
        if "components" in o:
            problems.add(path + ("components",), "components applies only to the pca_gaussian kernel")
        return
    m = o.setdefault("components", min(DEFAULT_COMPONENTS, q))
    if not _is_int(m) or not 1 <= m <= min(q, n - 1):
        problems.add(path + ("components",), f"components must be an integer in [1, {min(q, n - 1)}], got {m!r}")


def _validate_screening(raw, p, q, problems):
    s = raw.get("screening")
    if s is None:
        return None
    if isinstance(s, str):
        method, given = s, {}
    elif isinstance(s, dict) and len(s) == 1:
        method, given = next(iter(s.items()))
        given = given or {}
    else:
        problems.add(("screening",), "expected a method name or a single-key {method: options} mapping")
        return None
    if method not in SCREENING_DEFAULTS:
        problems.add(("screening",), f"unknown screening method {method!r}; choose from {', '.join(SCREENING_DEFAULTS)}")
        return None
    if not isinstance(given, dict):
        problems.add(("screening", method), "expected a mapping of options")
        return None
    path = ("screening", method)
    options = dict(SCREENING_DEFAULTS[method])
    for key in given:
        if key not in options:
            problems.add(path + (key,), f"unknown option; valid options are {', '.join(options)}")
    options.update({k: v for k, v in given.items() if k in options})
    if method in ("max_relevance", "mrmr"):
        if options["measure"] not in MEASURES:
            problems.add(path + ("measure",), f"unknown measure {options['measure']!r}; choose from {', '.join(MEASURES)}")
        elif options["measure"] == "ksg_mi" and 1 + q > 3:
            problems.add(path + ("measure",), "ksg_mi supports at most 3 dimensions in total")
        m = options["m"]
        if m is None and method == "mrmr":
            problems.add(path, "mrmr needs the number of inputs to select, m")
        elif m is not None and (not _is_int(m) or not 1 <= m <= p):
            problems.add(path + ("m",), f"m must be an integer in [1, {p}], got {m!r}")
    elif method == "iterative_hsic":
        if options["threshold"] not in ("permutation", "top_fraction"):
            problems.add(path + ("threshold",), "threshold must be 'permutation' or 'top_fraction'")
        tf = options["top_fraction"]
        if not _is_number(tf) or not 0 < tf <= 1:
            problems.add(path + ("top_fraction",), f"top_fraction must lie in (0, 1], got {tf!r}")
        ms = options["max_size"]
        if ms is not None and (not _is_int(ms) or ms < 1):
            problems.add(path + ("max_size",), f"max_size must be a positive integer, got {ms!r}")
    else:
        lam, c, b = options["lambda"], options["c"], options["bootstrap"]
        if lam is not None and (not _is_number(lam) or lam < 0):
            problems.add(path + ("lambda",), f"lambda must be a non-negative number, got {lam!r}")
        if not _is_number(c) or not c > 0:
            problems.add(path + ("c",), f"c must be a positive number, got {c!r}")
        if not _is_int(b) or b < 0:
            problems.add(path + ("bootstrap",), f"bootstrap must be a non-negative integer, got {b!r}")
    return ScreeningSpec(method, options)


def _validate_permutation(raw, problems) -> PermutationSpec:
    v = raw.get("permutation")
    if v is None:
        return PermutationSpec()
    if not isinstance(v, dict):
        problems.add(("permutation",), "expected a mapping with keys B and level")
        return PermutationSpec()
    for key in v:
        if key not in ("enabled", "B", "level"):
            problems.add(("permutation", key), "unknown key; valid keys are enabled, B, level")
    B, level, enabled = v.get("B", 199), v.get("level", 0.05), v.get("enabled", True)
    if not _is_int(B) or B < 1:
        problems.add(("permutation", "B"), f"B must be a positive integer, got {B!r}")
        B = 199
    if not _is_number(level) or not 0 < level < 1:
        problems.add(("permutation", "level"), f"level must lie in (0, 1), got {level!r}")
        level = 0.05
    if not isinstance(enabled, bool):
        problems.add(("permutation", "enabled"), "expected true or false")
        enabled = True
    return PermutationSpec(enabled, B, float(level))


# ---------------------------------------------------------------- computation


def derived_seed(seed: int, *keys: int) -> int:
    """Integer seed for the stream ``(seed, *keys)``."""
    return int(make_rng(seed, *keys).integers(2**63))


def _kernel(name: str, bandwidth, components=None, y=None):
    if name == "gaussian":
        return gaussian(bandwidth)
    if name == "laplace":
        return laplace(bandwidth)
    if name == "distance_induced":
        return distance_induced()
    if name == "categorical":
        return categorical()
    return semimetric_gaussian(fit_pca_semimetric(y, components), bandwidth)


class _Replicate:
    """Samples of one replicate, with outputs evaluated on demand."""

    def __init__(self, cfg: ExperimentConfig, r: int):
        self.cfg, self.r = cfg, r
        self.design = None
        if cfg.source == "csv":
            self.x, self.y = cfg.inputs, cfg.outputs
            return
        self.spec = make_benchmark(cfg.benchmark, **cfg.params)
        lows, highs = self.spec.bounds
        seed = derived_seed(cfg.seed, 0, r)
        names = tuple(f"x{k + 1}" for k in range(self.spec.p))
        if any(ix.name in PICK_FREEZE for ix in cfg.indices):
            total = any(ix.name == "sobol_total_pf" for ix in cfg.indices)
            self.design = build_pick_freeze(lows, highs, cfg.n, seed, complement=total)
            self.x = self.design.x_base
        else:
            self.x = sample_uniform(lows, highs, cfg.n, seed, names)
        self.y = self._evaluate(self.x)
        self._frozen: dict = {}

    def _evaluate(self, x):
        y = eval_benchmark(self.spec, x)
        if self.cfg.level_set is not None:
            y = level_set_transform(y, self.cfg.level_set)
        return y

    def frozen(self, k: int):
        key = ("f", k)
        if key not in self._frozen:
            self._frozen[key] = self._evaluate(self.design.x_frozen[k])
        return self._frozen[key]

    def complement(self, k: int):
        key = ("c", k)
        if key not in self._frozen:
            self._frozen[key] = self._evaluate(self.design.x_complement[k])
        return self._frozen[key]


def _per_input(label, names, r, fn):
    out = np.empty(len(names))
    for k, name in enumerate(names):
        try:
            v = fn(k)
        except (DepsensError, ArithmeticError, np.linalg.LinAlgError) as e:
            raise EstimationError(label, name, r, str(e)) from e
        if not np.isfinite(v):
            raise EstimationError(label, name, r, f"non-finite value {v}")
        out[k] = v
    return out


def _index_values(ix: IndexSpec, rep: _Replicate, cfg: ExperimentConfig, i: int):
    """Values for every input, plus (null quantiles, p-values) or None."""
    x, y, r, o = np.asarray(rep.x), rep.y, rep.r, ix.options
    names = _input_names(cfg)
    p = x.shape[1]
    null = None
    try:
        if ix.name == "dcor":
            dc = DcovConfig(alpha=o["alpha"])
            Bc = center(distance_matrix(np.asarray(y), dc.alpha))
            vals = _per_input(ix.label, names, r, lambda k: dcor_from_centered(center(distance_matrix(x[:, [k]], dc.alpha)), Bc))
            stat, test_cfg = "dcor", dc
        elif ix.name == "hsic":
            ky = _kernel(o["kernel_y"], o["bandwidth_y"], o.get("components"), y)
            kx = _kernel(o["kernel_x"], o["bandwidth_x"])
            Ky = gram(ky, y)
            vals = _per_input(ix.label, names, r, lambda k: normalized_hsic_from_grams(gram(kx, x[:, [k]]), Ky))
            stat, test_cfg = "hsic_r", HsicConfig(kx, ky)
        elif ix.name == "fdiv":
            vals = _per_input(ix.label, names, r, lambda k: fdiv_index(x[:, k], np.asarray(y)[:, 0], o["choice"]))
        elif ix.name == "mi_ksg":
            vals = _per_input(ix.label, names, r, lambda k: ksg_mi(x[:, [k]], y, o["k"], seed=derived_seed(cfg.seed, 2, r, i, k)))
        elif ix.name == "sobol_first_pf":
            vals = _per_input(ix.label, names, r, lambda k: first_order_pf(y, rep.frozen(k)))
        elif ix.name == "sobol_total_pf":
            vals = _per_input(ix.label, names, r, lambda k: total_effect_pf(y, rep.complement(k)))
        elif ix.name == "dcor_pf":
            vals = _per_input(ix.label, names, r, lambda k: dcor_pick_freeze(y, rep.frozen(k), o["alpha"]))
        else:  # hsic_pf
            ky = _kernel(o["kernel"], o["bandwidth"], o.get("components"), y)
            vals = _per_input(ix.label, names, r, lambda k: hsic_pick_freeze(y, rep.frozen(k), ky))
    except EstimationError:
        raise
    except (DepsensError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise EstimationError(ix.label, None, r, str(e)) from e

    if cfg.permutation.enabled and ix.name in PERMUTABLE:
        level = 1.0 - cfg.permutation.level
        quant, pvals = np.empty(p), np.empty(p)
        for k in range(p):
            res = permutation_test(stat, x[:, [k]], y, B=cfg.permutation.B, seed=derived_seed(cfg.seed, 1, r, i, k),
                                   cfg=test_cfg, levels=(level,))
            quant[k], pvals[k] = res.quantile(level), res.p_value
        null = (quant, pvals)
    return vals, null


def _screen(cfg: ExperimentConfig, rep: _Replicate) -> dict:
    s, o, r = cfg.screening, cfg.screening.options, rep.r
    x, y = rep.x, rep.y
    probs = None
    try:
        if s.method == "max_relevance":
            res = max_relevance_rank(x, y, o["measure"], o["m"])
            selected, stop, flagged = res.selected, res.stop_reason, res.flagged
        elif s.method == "mrmr":
            res = mrmr_forward(x, y, o["measure"], o["m"])
            selected, stop, flagged = res.selected, res.stop_reason, res.flagged
        elif s.method == "iterative_hsic":
            res = iterative_hsic_screen(x, y, threshold=o["threshold"], level=cfg.permutation.level, B=cfg.permutation.B,
                                        seed=derived_seed(cfg.seed, 3, r), top_fraction=o["top_fraction"], max_size=o["max_size"])
            selected, stop, flagged = res.selected, res.stop_reason, res.flagged
        else:
            sol = hsic_lasso(x, y, lam=o["lambda"], c=o["c"])
            selected, stop, flagged = sol.support, "converged" if sol.converged else "max_sweeps", not sol.converged
            if o["bootstrap"] > 0:
                probs = bootstrap_selection(x, y, "hsic_lasso", B=o["bootstrap"], seed=derived_seed(cfg.seed, 4, r),
                                            lam=o["lambda"], c=o["c"])
    except (DepsensError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise EstimationError(f"screening:{s.method}", None, r, str(e)) from e
    names = _input_names(cfg)
    return {
        "replicate": r,
        "selected": [names[k] for k in selected],
        "selected_indices": [int(k) for k in selected],
        "stop_reason": stop,
        "flagged": bool(flagged),
        "selection_probabilities": None if probs is None else [float(v) for v in probs],
    }


def _input_names(cfg: ExperimentConfig) -> list:
    if cfg.source == "csv":
        return list(cfg.inputs.column_names)
    return [f"x{k + 1}" for k in range(make_benchmark(cfg.benchmark, **cfg.params).p)]


def _run_replicate(cfg: ExperimentConfig, r: int) -> dict:
    rep = _Replicate(cfg, r)
    out = {"indices": [_index_values(ix, rep, cfg, i) for i, ix in enumerate(cfg.indices)]}
    out["screening"] = _screen(cfg, rep) if cfg.screening else None
    return out


def summarize(values) -> dict:
    """Replicate statistics and Tukey box-plot whiskers (1.5 IQR, clipped to data)."""
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo = v[v >= q1 - 1.5 * iqr].min()
    hi = v[v <= q3 + 1.5 * iqr].max()
    return {
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "min": float(v.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(v.max()),
        "whisker_low": float(lo),
        "whisker_high": float(hi),
    }


def _config_hash(echo: dict) -> str:
    return hashlib.sha256(json.dumps(echo, sort_keys=True).encode()).hexdigest()


def compute_results(cfg: ExperimentConfig) -> dict:
    """Run every replicate and assemble the results document."""
    start = time.perf_counter()
    if cfg.threads > 1 and cfg.replicates > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            reps = list(pool.map(lambda r: _run_replicate(cfg, r), range(cfg.replicates)))
    else:
        reps = [_run_replicate(cfg, r) for r in range(cfg.replicates)]
    names = _input_names(cfg)
    echo = cfg.to_dict(runtime=False)
    indices = []
    for i, ix in enumerate(cfg.indices):
        vals = np.array([rep["indices"][i][0] for rep in reps])
        nulls = [rep["indices"][i][1] for rep in reps]
        rows = []
        for k, name in enumerate(names):
            row = {"input": name, **summarize(vals[:, k]), "values": [float(v) for v in vals[:, k]]}
            if nulls[0] is not None:
                q = np.array([nl[0][k] for nl in nulls])
                pv = np.array([nl[1][k] for nl in nulls])
                row["null_quantile"] = [float(v) for v in q]
                row["p_values"] = [float(v) for v in pv]
                row["rejection_rate"] = float(np.mean(pv <= cfg.permutation.level))
            else:
                row["null_quantile"] = row["p_values"] = row["rejection_rate"] = None
            rows.append(row)
        indices.append({
            "label": ix.label,
            "index": ix.name,
            "options": _plain(ix.options),
            "null_level": 1.0 - cfg.permutation.level if nulls[0] is not None else None,
            "inputs": rows,
        })
    screening = None
    if cfg.screening:
        per_rep = [rep["screening"] for rep in reps]
        freq = np.zeros(len(names))
        for s in per_rep:
            freq[s["selected_indices"]] += 1
        screening = {
            "method": cfg.screening.method,
            "options": _plain(cfg.screening.options),
            "replicates": per_rep,
            "selection_frequency": [float(v) for v in freq / len(per_rep)],
        }
    return {
        "schema_version": "1.0",
        "metadata": {
            "package_version": __version__,
            "seed": cfg.seed,
            "n": cfg.n,
            "replicates": cfg.replicates,
            "config_hash": _config_hash(echo),
            "wall_time_seconds": time.perf_counter() - start,
        },
        "config": echo,
        "inputs": names,
        "indices": indices,
        "screening": screening,
    }


def results_schema() -> dict:
    return json.loads(resources.files("depsens").joinpath(RESULTS_SCHEMA).read_text(encoding="utf-8"))


def validate_results(doc: dict) -> None:
    """Check a results document against the published JSON schema."""
    import jsonschema

    jsonschema.validate(doc, results_schema())


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def _write_rows(path, header, rows) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


STAT_COLUMNS = ("mean", "std", "min", "q1", "median", "q3", "max")
BOX_COLUMNS = ("whisker_low", "q1", "median", "q3", "whisker_high")


def write_report(doc: dict, cfg: ExperimentConfig, out_dir: str) -> None:
    """Write results.json, tables/*.csv, plotdata/*.csv and resolved-config.yaml."""
    os.makedirs(os.path.join(out_dir, "tables"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "plotdata"), exist_ok=True)
    with open(os.path.join(out_dir, "results.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "resolved-config.yaml"), "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
    for entry in doc["indices"]:
        name = _safe_name(entry["label"])
        has_null = entry["null_level"] is not None
        header = ["input", *STAT_COLUMNS] + (["null_quantile_mean", "rejection_rate"] if has_null else [])
        rows = []
        for row in entry["inputs"]:
            extra = [float(np.mean(row["null_quantile"])), row["rejection_rate"]] if has_null else []
            rows.append([row["input"], *(row[c] for c in STAT_COLUMNS), *extra])
        _write_rows(os.path.join(out_dir, "tables", f"{name}.csv"), header, rows)
        box = [[row["input"], *(row[c] for c in BOX_COLUMNS)] for row in entry["inputs"]]
        _write_rows(os.path.join(out_dir, "plotdata", f"{name}_box.csv"), ["input", *BOX_COLUMNS], box)
        long = [[row["input"], r, v] for row in entry["inputs"] for r, v in enumerate(row["values"])]
        _write_rows(os.path.join(out_dir, "plotdata", f"{name}_values.csv"), ["input", "replicate", "value"], long)
    if doc["screening"]:
        s = doc["screening"]
        rows = [[name, s["selection_frequency"][k]] for k, name in enumerate(doc["inputs"])]
        _write_rows(os.path.join(out_dir, "tables", "screening.csv"), ["input", "selection_frequency"], rows)


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> dict:
    """Compute, schema-check and write all report files; returns the document."""
    doc = compute_results(cfg)
    validate_results(doc)
    write_report(doc, cfg, out_dir or cfg.output_dir)
    return doc

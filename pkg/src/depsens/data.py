"""Sample storage, CSV exchange and seeded input designs.

All randomness in the package flows through :func:`make_rng`, which builds a
Philox (counter-based) generator from a master seed plus a tuple of integer
keys. Two streams with different keys are statistically independent, and a
stream only depends on its own keys, so replicates, permutations and
bootstrap draws give the same numbers whatever order or thread they run in.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidBounds, InvalidData, MissingFile, NonNumericCell, RaggedRows

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, *keys)``.

    Parameters
    ----------
    seed : int
        Master seed, any unsigned 64-bit value.
    *keys : int
        Path of the sub-stream, e.g. ``(replicate, input_index)``.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ColumnSelector:
    """Ordered subset of column positions."""

    indices: tuple[int, ...]

    def __init__(self, indices: int | Iterable[int]):
        if np.isscalar(indices):
            indices = (int(indices),)
        object.__setattr__(self, "indices", tuple(int(i) for i in indices))
        if len(set(self.indices)) != len(self.indices):
            raise InvalidData(f"duplicate column indices in {self.indices}")

    def check(self, d: int) -> None:
        for i in self.indices:
            if not 0 <= i < d:
                raise InvalidData(f"column index {i} out of range for {d} columns")

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An immutable n x d sample with column names and kinds.

    ``np.asarray(dm)`` gives the underlying (read-only) float array.
    """

    values: np.ndarray
    column_names: tuple[str, ...] = field(default=())
    column_kinds: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InvalidData(f"expected a non-empty 2-D array, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        d = v.shape[1]
        names = tuple(self.column_names) or tuple(f"x{i + 1}" for i in range(d))
        kinds = tuple(self.column_kinds) or (CONTINUOUS,) * d
        if len(names) != d or len(kinds) != d:
            raise InvalidData("column_names/column_kinds length does not match column count")
        for j, kind in enumerate(kinds):
            col = v[:, j]
            if kind == CONTINUOUS:
                if not np.all(np.isfinite(col)):
                    raise InvalidData(f"column {names[j]!r} has non-finite entries")
            elif kind == CATEGORICAL:
                if np.any(col < 0) or np.any(col != np.round(col)):
                    raise InvalidData(f"categorical column {names[j]!r} must hold non-negative integer codes")
            else:
                raise InvalidData(f"unknown column kind {kind!r}")
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "column_kinds", kinds)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __len__(self):
        return self.n

    def select(self, cols: int | Sequence[int] | ColumnSelector) -> "DataMatrix":
        sel = cols if isinstance(cols, ColumnSelector) else ColumnSelector(cols)
        sel.check(self.d)
        idx = list(sel.indices)
        return DataMatrix(
            self.values[:, idx],
            tuple(self.column_names[i] for i in idx),
            tuple(self.column_kinds[i] for i in idx),
        )

    def take(self, rows) -> "DataMatrix":
        """Row subset (used for bootstrap resampling)."""
        return DataMatrix(self.values[np.asarray(rows)], self.column_names, self.column_kinds)

    @cached_property
    def level_counts(self) -> dict[int, dict[int, int]]:
        """Per categorical column: ``{code: count}``."""
        out = {}
        for j, kind in enumerate(self.column_kinds):
            if kind == CATEGORICAL:
                codes, counts = np.unique(self.values[:, j].astype(np.int64), return_counts=True)
                out[j] = dict(zip(codes.tolist(), counts.tolist()))
        return out

    @property
    def is_categorical(self) -> bool:
        return all(k == CATEGORICAL for k in self.column_kinds)


def as_matrix(x) -> np.ndarray:
    """Coerce a vector, array or DataMatrix into a 2-D float array (n, d)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    elif a.ndim != 2:
        a = a.reshape(a.shape[0], -1)
    return a


def load_csv(path, has_header: bool = True) -> DataMatrix:
    """Read a numeric comma-separated file.

    No quoting is supported. Without a header, columns are named ``x1..xd``.
    Row numbers in error messages count data rows from 1 and column numbers
    from 1.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    names = None
    if has_header and lines:
        names = tuple(c.strip() for c in lines[0].split(","))
        lines = lines[1:]
    if not lines:
        raise InvalidData(f"{path}: no data rows")
    width = len(names) if names is not None else len(lines[0].split(","))
    rows = []
    for r, line in enumerate(lines, start=1):
        cells = line.split(",")
        if len(cells) != width:
            raise RaggedRows(path, r, width, len(cells))
        row = []
        for c, cell in enumerate(cells, start=1):
            try:
                row.append(float(cell))
            except ValueError:
                raise NonNumericCell(path, r, c, cell.strip()) from None
        rows.append(row)
    return DataMatrix(np.array(rows, dtype=float), names or ())


def write_csv(data: DataMatrix, path, header: bool = True) -> None:
    """Write ``data`` so that :func:`load_csv` reads back identical values."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(data.column_names) + "\n")
        for row in data.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def sample_uniform(lows, highs, n: int, seed: int, names=None) -> DataMatrix:
    """Draw ``n`` rows of independent uniforms on the box ``[lows, highs)``."""
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    if lows.shape != highs.shape or lows.ndim != 1:
        raise InvalidBounds("lows and highs must be vectors of equal length")
    if not np.all(lows < highs):
        raise InvalidBounds(f"need lows < highs, got {lows} and {highs}")
    if n < 1:
        raise InvalidBounds(f"n must be at least 1, got {n}")
    u = make_rng(seed).random((int(n), lows.size))
    return DataMatrix(lows + u * (highs - lows), names or ())

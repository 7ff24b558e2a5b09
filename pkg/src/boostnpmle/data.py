"""Empirical objects: sorted unique knots, calibrated frequencies, trapezoid weights."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateSupportError, InvalidInputError


@dataclass(frozen=True)
class RawSamples:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise InvalidInputError("no sample values")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise InvalidInputError(f"non-finite sample value at index {int(bad[0])}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class Dataset:
    """Distinct sample points in ascending order with their frequencies.

    ``counts[i]`` is the number of raw samples equal to ``knots[i]`` and
    ``freqs[i] == counts[i] / N``.
    """

    knots: np.ndarray
    counts: np.ndarray
    N: int
    freqs: np.ndarray = field(init=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if knots.shape != counts.shape or knots.ndim != 1:
            raise InvalidInputError("knots and counts must be 1-d arrays of equal length")
        if knots.size < 2:
            raise DegenerateSupportError(
                f"need at least 2 distinct sample values, got {knots.size}"
            )
        if not np.all(np.diff(knots) > 0):
            raise InvalidInputError("knots must be strictly increasing")
        if np.any(counts < 1) or int(counts.sum()) != self.N:
            raise InvalidInputError("counts must be positive and sum to N")
        freqs = counts / float(self.N)
        for arr in (knots, counts, freqs):
            arr.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "freqs", freqs)

    @property
    def n(self) -> int:
        return int(self.knots.size)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def expand(self) -> np.ndarray:
        """Reconstruct the sorted raw sample (knots repeated by their counts)."""
        return np.repeat(self.knots, self.counts)


def build_dataset(raw: RawSamples | np.ndarray | list) -> Dataset:
    if not isinstance(raw, RawSamples):
        raw = RawSamples(raw)
    # exact float equality: ties are counted only when bit-identical
    knots, counts = np.unique(raw.values, return_counts=True)
    if knots.size < 2:
        raise DegenerateSupportError(
            f"need at least 2 distinct sample values, got {knots.size}"
        )
    return Dataset(knots=knots, counts=counts, N=raw.N)


def trapezoid_weights(ds: Dataset) -> np.ndarray:
    """Composite trapezoid coefficients on the (possibly uneven) knot grid.

    ``sum(a) == x_n - x_1`` and ``sum(a * h(x))`` is the trapezoid integral
    of ``h`` over the support.
    """
    x = ds.knots
    if x.size < 2:
        raise DegenerateSupportError("trapezoid weights need at least 2 knots")
    h = np.diff(x)
    a = np.empty_like(x)
    a[0] = h[0] / 2
    a[-1] = h[-1] / 2
    a[1:-1] = (h[:-1] + h[1:]) / 2
    a.setflags(write=False)
    return a


def read_samples_csv(path, column=0, header=False) -> RawSamples:
    """Read one numeric column from a CSV file.

    ``column`` is an index, or a name when ``header`` is true.
    """
    path = Path(path)
    values = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        col = column
        if header:
            names = next(reader, None)
            if names is None:
                raise InvalidInputError(f"{path}: empty file")
            names = [s.strip() for s in names]
            if isinstance(column, str) and not column.isdigit():
                if column not in names:
                    raise InvalidInputError(f"{path}: no column named {column!r}")
                col = names.index(column)
        col = int(col)
        for row_index, row in enumerate(reader):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values.append(float(row[col]))
            except (ValueError, IndexError):
                raise InvalidInputError(
                    f"{path}: row {row_index} is not numeric in column {col}: {row!r}"
                ) from None
    if not values:
        raise InvalidInputError(f"{path}: no values")
    try:
        return RawSamples(np.array(values))
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None

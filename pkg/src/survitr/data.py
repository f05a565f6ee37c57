"""Core record types, dataset container, CSV ingestion and validation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataError",
    "ParseError",
    "EmptyArmError",
    "Observation",
    "WeightConfig",
    "Dataset",
    "load_dataset",
    "save_dataset",
    "split_by_arm",
    "validate",
    "ValidationReport",
]


class DataError(ValueError):
    """Invalid data passed to the library."""


class ParseError(DataError):
    """Malformed input file; message names the offending line."""


class EmptyArmError(DataError):
    """A treatment arm required downstream contains no observations."""


@dataclass(frozen=True)
class Observation:
    """One subject's record: observed times, event indicators, covariates, arm."""

    y1: float
    y2: float
    delta1: int
    delta2: int
    x: np.ndarray
    a: int


@dataclass(frozen=True)
class WeightConfig:
    """User-specified weight pair steering the estimating equation.

    (0, 0) is the plain IPCW least-squares baseline, (1, 1) trusts the
    auxiliary predictor, and (1, -1) / (-1, 1) debias it.
    """

    c1: float
    c2: float

    def __post_init__(self):
        if not (np.isfinite(self.c1) and np.isfinite(self.c2)):
            raise DataError("weight config entries must be finite")


class Dataset:
    """Immutable container of right-censored bivariate records.

    Stored column-wise as numpy arrays for vectorized fitting; rows can be
    viewed as :class:`Observation` via indexing.
    """

    def __init__(self, y1, y2, delta1, delta2, x, a, K=None):
        self.y1 = np.asarray(y1, dtype=float)
        self.y2 = np.asarray(y2, dtype=float)
        self.delta1 = np.asarray(delta1, dtype=int)
        self.delta2 = np.asarray(delta2, dtype=int)
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.a = np.asarray(a, dtype=int)
        n = len(self.y1)
        if n < 1:
            raise DataError("dataset must contain at least one observation")
        if not all(len(arr) == n for arr in (self.y2, self.delta1, self.delta2, self.a)):
            raise DataError("column length mismatch")
        if self.x.shape[0] != n:
            raise DataError("covariate matrix row count mismatch")
        if np.any(self.y1 <= 0) or np.any(self.y2 <= 0):
            raise DataError("observed times must be positive")
        for d in (self.delta1, self.delta2):
            if not np.isin(d, (0, 1)).all():
                raise DataError("event indicators must be 0 or 1")
        if np.any(self.a < 0):
            raise DataError("arm indices must be non-negative")
        inferred_K = int(self.a.max())
        if K is None:
            K = inferred_K
        elif inferred_K > K:
            raise DataError(f"arm index {inferred_K} exceeds declared K={K}")
        self.K = int(K)
        self.p = self.x.shape[1]
        for arr in (self.y1, self.y2, self.delta1, self.delta2, self.x, self.a):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.y1)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Observation:
        return Observation(
            y1=float(self.y1[i]),
            y2=float(self.y2[i]),
            delta1=int(self.delta1[i]),
            delta2=int(self.delta2[i]),
            x=self.x[i],
            a=int(self.a[i]),
        )

    @classmethod
    def from_observations(cls, observations, K=None) -> "Dataset":
        obs = list(observations)
        if not obs:
            raise DataError("dataset must contain at least one observation")
        return cls(
            y1=[o.y1 for o in obs],
            y2=[o.y2 for o in obs],
            delta1=[o.delta1 for o in obs],
            delta2=[o.delta2 for o in obs],
            x=np.vstack([o.x for o in obs]),
            a=[o.a for o in obs],
            K=K,
        )

    def y(self, j: int) -> np.ndarray:
        """Observed times for outcome j in {1, 2}."""
        return self.y1 if j == 1 else self.y2

    def delta(self, j: int) -> np.ndarray:
        """Event indicators for outcome j in {1, 2}."""
        return self.delta1 if j == 1 else self.delta2


CSV_COLUMNS = ("y1", "y2", "d1", "d2", "a")


def load_dataset(path, K=None) -> Dataset:
    """Parse a CSV file with header ``y1,y2,d1,d2,a,x1..xp`` into a Dataset."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in CSV_COLUMNS:
            if col not in header:
                raise ParseError(f"{path}: missing column '{col}'")
        xcols = [h for h in header if h.startswith("x")]
        p = len(xcols)
        if p == 0:
            raise ParseError(f"{path}: no covariate columns x1..xp found")
        expected = list(CSV_COLUMNS) + [f"x{k}" for k in range(1, p + 1)]
        if header != expected:
            raise ParseError(
                f"{path}: header must be {','.join(expected)}, got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: line {lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows)
    y1, y2, d1, d2, a = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4]
    if np.any((d1 != 0) & (d1 != 1)) or np.any((d2 != 0) & (d2 != 1)):
        raise DataError(f"{path}: event indicators must be 0 or 1")
    if np.any(a != np.round(a)):
        raise DataError(f"{path}: arm indices must be integers")
    return Dataset(y1, y2, d1, d2, arr[:, 5:], a.astype(int), K=K)


def save_dataset(d: Dataset, path) -> None:
    """Write a Dataset in the CSV interchange format at full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(CSV_COLUMNS) + [f"x{k}" for k in range(1, d.p + 1)])
        for i in range(d.n):
            writer.writerow(
                [repr(float(d.y1[i])), repr(float(d.y2[i])), d.delta1[i], d.delta2[i], d.a[i]]
                + [repr(float(v)) for v in d.x[i]]
            )


def split_by_arm(d: Dataset, a: int) -> Dataset:
    """Subset of observations assigned to arm ``a``, original order preserved."""
    if not 0 <= a <= d.K:
        raise DataError(f"arm {a} outside 0..{d.K}")
    mask = d.a == a
    if not mask.any():
        raise EmptyArmError(f"arm {a} has no observations")
    return Dataset(
        d.y1[mask], d.y2[mask], d.delta1[mask], d.delta2[mask], d.x[mask], d.a[mask], K=d.K
    )


@dataclass(frozen=True)
class ValidationReport:
    n: int
    arm_sizes: dict
    censoring_rates: dict  # (arm, outcome) -> fraction censored
    covariate_ranges: list  # per covariate (min, max)
    flags: tuple


def validate(d: Dataset | None) -> ValidationReport:
    """Report-only summary: arm sizes, censoring rates, covariate ranges."""
    if d is None or (hasattr(d, "n") and d.n == 0):
        return ValidationReport(0, {}, {}, [], ("n=0",))
    arm_sizes = {a: int((d.a == a).sum()) for a in range(d.K + 1)}
    rates = {}
    for a in range(d.K + 1):
        mask = d.a == a
        for j in (1, 2):
            rates[(a, j)] = float(1.0 - d.delta(j)[mask].mean()) if mask.any() else float("nan")
    ranges = [(float(d.x[:, k].min()), float(d.x[:, k].max())) for k in range(d.p)]
    flags = tuple(f"arm {a} empty" for a, sz in arm_sizes.items() if sz == 0)
    return ValidationReport(d.n, arm_sizes, rates, ranges, flags)

"""Random, even, disjoint partitioning of a dataset, reproducible from a seed."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .privacy import RngStream
from .tabular import Dataset


@dataclass(frozen=True)
class PartitionPlan:
    """Assignment of every row to one of M subsets.

    Subset sizes differ by at most one; the remainder rows go to the
    lowest-indexed subsets.  The assignment is a pure function of
    (n_rows, M, seed), so serialized plans store only those three values.
    """

    n_rows: int
    M: int
    seed: int
    assignment: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=np.intp).copy()
        if arr.shape != (self.n_rows,):
            raise ConfigError("assignment length must equal n_rows")
        arr.setflags(write=False)
        object.__setattr__(self, "assignment", arr)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.M)

    def rows_of(self, l: int) -> np.ndarray:
        """Row indices of subset l, in original row order."""
        if not 0 <= l < self.M:
            raise ConfigError(f"subset index {l} outside 0..{self.M - 1}")
        return np.flatnonzero(self.assignment == l)

    def to_record(self) -> str:
        return json.dumps({"n_rows": self.n_rows, "M": self.M, "seed": self.seed})

    @classmethod
    def from_record(cls, record: str) -> "PartitionPlan":
        rec = json.loads(record)
        return make_partition(rec["n_rows"], rec["M"], rec["seed"])


def make_partition(N: int, M: int, seed: int) -> PartitionPlan:
    """Cut a uniformly random permutation of N rows into M blocks.

    The first N mod M blocks receive one extra row.  Deterministic for a
    given (N, M, seed).
    """
    if M < 1:
        raise ConfigError(f"M must be at least 1, got {M}")
    if M > N:
        raise ConfigError(f"M ({M}) may not exceed the number of rows N ({N})")
    perm = RngStream(seed).child("partition").generator.permutation(N)
    assignment = np.empty(N, dtype=np.intp)
    base, extra = divmod(N, M)
    start = 0
    for l in range(M):
        size = base + (1 if l < extra else 0)
        assignment[perm[start : start + size]] = l
        start += size
    return PartitionPlan(n_rows=N, M=M, seed=seed, assignment=assignment)


def subset_view(dataset: Dataset, plan: PartitionPlan, l: int) -> Dataset:
    """Rows of subset l as a Dataset, original order preserved."""
    if plan.n_rows != dataset.n_rows:
        raise ConfigError(
            f"plan covers {plan.n_rows} rows but dataset has {dataset.n_rows}"
        )
    return dataset.subset(plan.rows_of(l))

"""Rigidity certification, greedy column partitions and query-set bucketing.

A matrix is (k, h, c)-rigid when every k-row submatrix keeps rank at least
``k' = ceil(c k)`` after deleting any set of fewer than h columns.  Deleting
more columns can only lower rank, so it suffices to check column sets of
size exactly ``min(h - 1, n)``.  "(k, h)-rigid" means c = 1.

Row and column indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .algebra import Alphabet, FieldMatrix, mat_rank


class RigidityError(ValueError):
    pass


class BudgetExceeded(RigidityError):
    pass


class RigidityViolation(RigidityError):
    pass


DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class RigidityParams:
    k: int
    h: int
    c: Fraction = Fraction(1)

    def __post_init__(self):
        c = Fraction(self.c).limit_denominator(10**6) if isinstance(self.c, float) else Fraction(self.c)
        object.__setattr__(self, "c", c)
        if self.k < 1 or self.h < 1:
            raise RigidityError("k and h must be at least 1")
        if not 0 < c <= 1:
            raise RigidityError("c must lie in (0, 1]")

    @property
    def k_prime(self) -> int:
        return math.ceil(self.c * self.k)

    def check_shape(self, m: int, n: int) -> None:
        if self.k > m:
            raise RigidityError(f"k = {self.k} exceeds the {m} rows")
        if self.h > n:
            raise RigidityError(f"h = {self.h} exceeds the {n} columns")


@dataclass(frozen=True)
class RigidityResult:
    rigid: bool
    rows: tuple[int, ...] | None = None  # violating U
    removed: tuple[int, ...] | None = None  # violating W
    rank: int | None = None

    def __bool__(self) -> bool:
        return self.rigid


def check_count(A: FieldMatrix, params: RigidityParams) -> int:
    return math.comb(A.rows, params.k) * math.comb(A.cols, min(params.h - 1, A.cols))


def is_rigid(A: FieldMatrix, params: RigidityParams, budget: int = DEFAULT_BUDGET) -> RigidityResult:
    params.check_shape(A.rows, A.cols)
    if check_count(A, params) > budget:
        raise BudgetExceeded(f"{check_count(A, params)} submatrices exceed budget {budget}")
    kp = params.k_prime
    n = A.cols
    for W in itertools.combinations(range(n), min(params.h - 1, n)):
        keep = [j for j in range(n) if j not in W]
        if len(keep) < kp:
            return RigidityResult(False, tuple(range(params.k)), W, 0)
        sub = A.submatrix(range(A.rows), keep)
        for U in itertools.combinations(range(A.rows), params.k):
            r = mat_rank(sub.submatrix(U, range(len(keep))))
            if r < kp:
                return RigidityResult(False, U, W, r)
    return RigidityResult(True)


@dataclass(frozen=True)
class ColumnPartition:
    pairs: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    h: int
    k_prime: int

    @property
    def column_sets(self) -> list[tuple[int, ...]]:
        return [V for _, V in self.pairs]

    def union(self) -> set[int]:
        return set().union(*self.column_sets) if self.pairs else set()

    def __len__(self) -> int:
        return len(self.pairs)


def full_rank_square(A: FieldMatrix, rows: Sequence[int], cols: Sequence[int], size: int):
    """Greedy pick of ``size`` columns then ``size`` rows spanning a nonsingular
    submatrix.  Columns are taken in index order when they raise the rank;
    rows likewise.  Returns None when the rank is too small."""
    rows = list(rows)
    chosen_c: list[int] = []
    for c in cols:
        if len(chosen_c) == size:
            break
        if mat_rank(A.submatrix(rows, chosen_c + [c])) > len(chosen_c):
            chosen_c.append(c)
    if len(chosen_c) < size:
        return None
    chosen_r: list[int] = []
    for r in rows:
        if len(chosen_r) == size:
            break
        if mat_rank(A.submatrix(chosen_r + [r], chosen_c)) > len(chosen_r):
            chosen_r.append(r)
    return tuple(chosen_r), tuple(chosen_c)


def partition_columns(A: FieldMatrix, U: Sequence[int], params: RigidityParams) -> ColumnPartition:
    """Disjoint k'-column sets, each with a nonsingular k' x k' block in rows U,
    collected until their union has at least h columns."""
    params.check_shape(A.rows, A.cols)
    U = tuple(sorted(U))
    if len(U) != params.k or len(set(U)) != len(U):
        raise RigidityError(f"row set must have exactly k = {params.k} distinct rows")
    kp = params.k_prime
    used: list[int] = []
    pairs = []
    while len(used) < params.h:
        rest = [j for j in range(A.cols) if j not in used]
        found = full_rank_square(A, U, rest, kp)
        if found is None:
            raise RigidityViolation(
                f"rows {U} have rank < {kp} after removing columns {sorted(used)}")
        pairs.append(found)
        used.extend(found[1])
    return ColumnPartition(tuple(pairs), params.h, kp)


def verify_partition(A: FieldMatrix, part: ColumnPartition, U: Sequence[int] | None = None,
                     c_is_one: bool = False) -> list[str]:
    """Independent check of the partition invariants; returns failures."""
    bad = []
    kp = part.k_prime
    if len(part) != math.ceil(part.h / kp):
        bad.append(f"expected {math.ceil(part.h / kp)} sets, got {len(part)}")
    seen: set[int] = set()
    for idx, (R, V) in enumerate(part.pairs):
        if len(R) != kp or len(V) != kp:
            bad.append(f"pair {idx} has sizes {len(R)}, {len(V)}")
        if seen & set(V):
            bad.append(f"pair {idx} overlaps earlier column sets")
        seen |= set(V)
        if mat_rank(A.submatrix(R, V)) != kp:
            bad.append(f"pair {idx} is not full rank")
        if U is not None and not set(R) <= set(U):
            bad.append(f"pair {idx} uses rows outside U")
        if c_is_one and U is not None and tuple(sorted(R)) != tuple(sorted(U)):
            bad.append(f"pair {idx} rows differ from U although c = 1")
    if len(seen) < part.h:
        bad.append(f"union has {len(seen)} < h = {part.h} columns")
    return bad


@dataclass(frozen=True)
class BucketIndex:
    j: int
    lam: tuple[int, ...]  # positions within sorted V_j that are removed
    residual: tuple[int, ...]  # V_j with those positions removed


def bucket_for_query_set(I, part: ColumnPartition, alpha) -> BucketIndex:
    """Find ``j`` and ``lam`` with ``I`` disjoint from ``V_j`` minus ``lam``.

    ``j`` is the first set meeting ``I`` in at most ``floor(alpha k')``
    columns; ``lam`` lists the positions of those columns inside ``V_j``,
    padded with the lowest free positions.
    """
    I = set(I)
    alpha = Fraction(alpha).limit_denominator(10**6) if isinstance(alpha, float) else Fraction(alpha)
    if len(I) > math.floor(alpha * part.h):
        raise RigidityError(f"|I| = {len(I)} exceeds floor(alpha h) = {math.floor(alpha * part.h)}")
    k2 = math.floor(alpha * part.k_prime)
    for j, V in enumerate(part.column_sets):
        V = tuple(sorted(V))
        hit = [pos for pos, col in enumerate(V) if col in I]
        if len(hit) > k2:
            continue
        pad = [pos for pos in range(len(V)) if pos not in hit][:k2 - len(hit)]
        lam = tuple(sorted(hit + pad))
        residual = tuple(col for pos, col in enumerate(V) if pos not in lam)
        return BucketIndex(j, lam, residual)
    raise RigidityError("no bucket found; partition invariants violated")


# -- sampling ------------------------------------------------------------------

def toeplitz_from_diagonals(diag: Sequence[int], n: int, p: int) -> FieldMatrix:
    """``A[i][j] = diag[i - j + n - 1]``."""
    diag = np.asarray(diag)
    i = np.arange(n).reshape(-1, 1)
    j = np.arange(n).reshape(1, -1)
    return FieldMatrix(diag[i - j + n - 1], p)


def sample_matrix(sampler: str, n: int, alphabet: Alphabet, rng: np.random.Generator) -> FieldMatrix:
    vals = np.array(alphabet.values)
    if sampler == "uniform":
        return FieldMatrix(vals[rng.integers(0, alphabet.d, size=(n, n))], alphabet.p)
    if sampler == "toeplitz":
        return toeplitz_from_diagonals(vals[rng.integers(0, alphabet.d, size=2 * n - 1)], n, alphabet.p)
    raise RigidityError(f"unknown sampler {sampler!r}")


@dataclass(frozen=True)
class RigidFraction:
    fraction: float
    ci_low: float
    ci_high: float
    rigid: int
    trials: int


def estimate_rigid_fraction(sampler: str, n: int, params: RigidityParams, alphabet: Alphabet,
                            trials: int, seed: int = 0, budget: int = DEFAULT_BUDGET,
                            confidence: float = 0.95) -> RigidFraction:
    """Monte-Carlo fraction of rigid n x n matrices with a Clopper-Pearson interval."""
    if trials < 1:
        raise RigidityError("trials must be positive")
    count = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        count += bool(is_rigid(sample_matrix(sampler, n, alphabet, rng), params, budget))
    ci = binomtest(count, trials).proportion_ci(confidence_level=confidence, method="exact")
    return RigidFraction(count / trials, float(ci.low), float(ci.high), count, trials)


def exhaustive_rigid_fraction(sampler: str, n: int, params: RigidityParams, alphabet: Alphabet,
                              budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact fraction over every matrix the sampler can produce."""
    free = n * n if sampler == "uniform" else 2 * n - 1
    if alphabet.d**free > budget:
        raise BudgetExceeded(f"{alphabet.d ** free} matrices exceed budget {budget}")
    count = 0
    for vals in itertools.product(alphabet.values, repeat=free):
        if sampler == "uniform":
            A = FieldMatrix(np.array(vals).reshape(n, n), alphabet.p)
        else:
            A = toeplitz_from_diagonals(vals, n, alphabet.p)
        count += bool(is_rigid(A, params, budget))
    return Fraction(count, alphabet.d**free)


def is_toeplitz(A: FieldMatrix) -> bool:
    d = A.data
    return all(d[i, j] == d[i - 1, j - 1] for i in range(1, A.rows) for j in range(1, A.cols))

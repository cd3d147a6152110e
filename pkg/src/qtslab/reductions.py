"""Constructive reductions between matrix problems, each verified exactly.

Every ``embed_*`` function builds the larger object, derives the power,
inverse or product that carries the target, and compares the designated
block against an independently computed reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import (
    BoolMatrix, DimensionError, FieldMatrix, block_matrix, convolve, kron, mat_inverse,
    mat_mul, mat_pow, vec_rows,
)
from .rigidity import DEFAULT_BUDGET, RigidityParams, is_rigid


class ReductionError(ValueError):
    pass


class BlockOverflowError(ReductionError):
    pass


@dataclass(frozen=True)
class EmbeddingResult:
    constructed: dict  # name -> matrix (or vector) built by the reduction
    derived: FieldMatrix  # object computed from the construction
    rows: slice  # block of ``derived`` that carries the target
    cols: slice
    extracted: FieldMatrix
    target: FieldMatrix
    verified: bool


def _square_inputs(*ms: FieldMatrix) -> int:
    n = ms[0].rows
    for M in ms:
        if M.shape != (n, n):
            raise DimensionError(f"expected {n}x{n} inputs, got {M.shape}")
        if M.p != ms[0].p:
            raise DimensionError("inputs must share a field")
    return n


def _finish(constructed, derived, rows, cols, target) -> EmbeddingResult:
    got = FieldMatrix(derived.data[rows, cols], derived.p)
    return EmbeddingResult(constructed, derived, rows, cols, got, target, got == target)


def triple_product_via_kron(A: FieldMatrix, B: FieldMatrix, C: FieldMatrix) -> EmbeddingResult:
    """``vec_rows(ABC) = (A kron C^T) vec_rows(B)``."""
    n = _square_inputs(A, B, C)
    K = kron(A, C.T)
    derived = mat_mul(K, vec_rows(B))
    target = vec_rows(mat_mul(mat_mul(A, B), C))
    return _finish({"kron": K, "vec_B": vec_rows(B)}, derived, slice(0, n * n), slice(0, 1), target)


def embed_cube(A: FieldMatrix, B: FieldMatrix, C: FieldMatrix) -> EmbeddingResult:
    """4n x 4n matrix with A, B, C on the superdiagonal; ABC is the
    top-right block of its cube."""
    n = _square_inputs(A, B, C)
    M = block_matrix([[None, A, None, None],
                      [None, None, B, None],
                      [None, None, None, C],
                      [None, None, None, None]], n, A.p)
    target = mat_mul(mat_mul(A, B), C)
    return _finish({"M": M}, mat_pow(M, 3), slice(0, n), slice(3 * n, 4 * n), target)


def embed_inverse(A: FieldMatrix, B: FieldMatrix, C: FieldMatrix) -> EmbeddingResult:
    """Unit upper triangular ``I - N`` with -A, -B, -C above the diagonal;
    its inverse ``I + N + N^2 + N^3`` has ABC in the top-right block."""
    n = _square_inputs(A, B, C)
    I = FieldMatrix.identity(n, A.p)
    M = block_matrix([[I, -A, None, None],
                      [None, I, -B, None],
                      [None, None, I, -C],
                      [None, None, None, I]], n, A.p)
    target = mat_mul(mat_mul(A, B), C)
    return _finish({"M": M}, mat_inverse(M), slice(0, n), slice(3 * n, 4 * n), target)


def embed_square(A: FieldMatrix, B: FieldMatrix) -> EmbeddingResult:
    """3n x 3n upper triangular matrix whose square has AB top-right."""
    n = _square_inputs(A, B)
    M = block_matrix([[None, A, None],
                      [None, None, B],
                      [None, None, None]], n, A.p)
    return _finish({"M": M}, mat_pow(M, 2), slice(0, n), slice(2 * n, 3 * n), mat_mul(A, B))


def embed_convolution(u: Sequence[int], v: Sequence[int], p: int) -> EmbeddingResult:
    """Convolution as a Toeplitz matrix-vector product."""
    from .algebra import make_conv_matrix
    U = make_conv_matrix(u, p)
    n = len(u)
    derived = mat_mul(U, FieldMatrix(np.asarray(v).reshape(-1, 1), p))
    target = FieldMatrix(np.array(convolve(u, v, p)).reshape(-1, 1), p)
    return _finish({"U": U}, derived, slice(0, n), slice(0, 1), target)


# -- binary multiplication ---------------------------------------------------------

def block_width(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def encode_doubled(u: Sequence[int], b: int) -> int:
    """Integer whose b-bit block t (from the low end) holds ``u[t mod n]``
    for t in 0..2n-1, i.e. the bit string ``0^(b-1) u_n ... 0^(b-1) u_1``
    written twice."""
    n = len(u)
    return sum(int(u[t % n]) << (b * t) for t in range(2 * n))


def linear_convolution(u: Sequence[int], v: Sequence[int]) -> list[int]:
    n = len(u)
    out = [0] * (2 * n - 1)
    for a in range(n):
        for c in range(n):
            out[a + c] += int(u[a]) * int(v[c])
    return out


def cyclic_from_linear(lin: Sequence[int], n: int) -> list[int]:
    """Fold so that position o collects lin[q] for q == o - 1 (mod n), matching
    the Toeplitz convention of ``make_conv_matrix``."""
    out = [0] * n
    for q, val in enumerate(lin):
        out[(q + 1) % n] += val
    return out


@dataclass(frozen=True)
class BinaryMultEmbedding:
    n: int
    width: int
    u_enc: int
    v_enc: int
    product: int
    linear: tuple[int, ...]  # linear convolution read from the product's blocks
    cyclic: tuple[int, ...]  # folded with the Toeplitz convention


def pre_carry_blocks(u: Sequence[int], v: Sequence[int]) -> list[int]:
    """Block coefficients of the product of the two doubled encodings before
    any carry: ``e_r = l_r + 2 l_{r-n} + l_{r-2n}``."""
    n = len(u)
    lin = linear_convolution(u, v)
    get = lambda q: lin[q] if 0 <= q < len(lin) else 0
    return [get(r) + 2 * get(r - n) + get(r - 2 * n) for r in range(4 * n - 1)]


def embed_binary_mult(u: Sequence[int], v: Sequence[int]) -> BinaryMultEmbedding:
    """Encode bit vectors as integers whose product exposes the convolution.

    Blocks 0..n-1 of the product hold ``l_0..l_{n-1}`` and blocks
    3n-1..4n-2 hold ``l_{n-1}..l_{2n-2}`` of the linear convolution ``l``.
    Reading blocks directly is only valid when no block coefficient reaches
    ``2^b``; such instances are refused with :class:`BlockOverflowError`.
    """
    n = len(u)
    if len(v) != n:
        raise DimensionError(f"length mismatch: {len(u)} vs {len(v)}")
    if n < 4:
        raise ReductionError("binary multiplication encoding needs n >= 4")
    if any(b not in (0, 1) for b in itertools.chain(u, v)):
        raise ReductionError("inputs must be bit vectors")
    b = block_width(n)
    worst = max(pre_carry_blocks(u, v))
    if worst >= 1 << b:
        raise BlockOverflowError(f"block coefficient {worst} does not fit in {b} bits")
    ue, ve = encode_doubled(u, b), encode_doubled(v, b)
    prod = ue * ve
    mask = (1 << b) - 1
    block = lambda r: (prod >> (b * r)) & mask
    lin = [block(r) for r in range(n)] + [block(3 * n - 1 + q) for q in range(1, n)]
    return BinaryMultEmbedding(n, b, ue, ve, prod, tuple(lin), tuple(cyclic_from_linear(lin, n)))


# -- rigidity of tensor products ---------------------------------------------------

def tensor_rigidity_verify(A: FieldMatrix, B: FieldMatrix, gamma, budget: int = DEFAULT_BUDGET):
    """Check that ``A kron B`` is ``(g^2 n^2, g^2 n^2, g^2)``-rigid when A and B
    are ``(g n, g n)``-rigid.  Returns None if the precondition fails."""
    gamma = Fraction(gamma)
    n = _square_inputs(A, B)
    s = math.ceil(gamma * n)
    if s < 1:
        raise ReductionError("gamma * n must be at least 1")
    inner = RigidityParams(s, s)
    if not (is_rigid(A, inner, budget) and is_rigid(B, inner, budget)):
        return None
    t = math.ceil(gamma**2 * n**2)
    return bool(is_rigid(kron(A, B), RigidityParams(t, t, gamma**2), budget))


# -- Boolean constructions ---------------------------------------------------------

@dataclass(frozen=True)
class GoodRowCertificate:
    n: int
    k: int
    threshold: int  # unique ones a row needs to be good
    exhaustive: bool
    sets_checked: int
    sets_passing: int  # sets with at least ceil(k/2) good rows
    min_good_rows: int
    worst_set: tuple[int, ...] | None = None

    @property
    def passed(self) -> bool:
        return self.sets_passing == self.sets_checked

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "threshold": self.threshold,
                "exhaustive": self.exhaustive, "sets_checked": self.sets_checked,
                "sets_passing": self.sets_passing, "min_good_rows": self.min_good_rows,
                "worst_set": None if self.worst_set is None else list(self.worst_set)}


def good_rows(A: BoolMatrix, I: Sequence[int], threshold: int) -> list[int]:
    """Rows of ``A_I`` with at least ``threshold`` ones alone in their column."""
    sub = A.data[list(I)].astype(np.int64)
    lonely = sub.sum(axis=0) == 1
    counts = (sub * lonely).sum(axis=1)
    return [r for r, c in zip(I, counts) if c >= threshold]


def certify_good_rows(A: BoolMatrix, k: int, seed: int = 0, budget: int = 5000,
                      samples: int = 500) -> GoodRowCertificate:
    n = A.rows
    threshold = math.ceil(Fraction(A.cols, 6 * k))
    need = math.ceil(k / 2)
    exhaustive = math.comb(n, k) <= budget
    if exhaustive:
        sets = itertools.combinations(range(n), k)
    else:
        rng = np.random.default_rng([seed, 1])
        sets = (tuple(sorted(rng.choice(n, size=k, replace=False).tolist())) for _ in range(samples))
    checked = passing = 0
    worst, worst_set = k + 1, None
    for I in sets:
        g = len(good_rows(A, I, threshold))
        checked += 1
        passing += g >= need
        if g < worst:
            worst, worst_set = g, tuple(I)
    return GoodRowCertificate(n, k, threshold, exhaustive, checked, passing, worst, worst_set)


def ksdw_matrix(n: int, k: int, seed: int = 0, budget: int = 5000, samples: int = 500,
                certify: bool = True, stream: int = 0):
    """Random n x n Boolean matrix with exactly n/(2k) ones per row, plus a
    good-row certificate over row sets of size k."""
    if k < 1 or n % (2 * k):
        raise ReductionError(f"2k = {2 * k} must divide n = {n}")
    weight = n // (2 * k)
    rng = np.random.default_rng([seed, 0, stream])
    data = np.zeros((n, n), dtype=bool)
    for r in range(n):
        data[r, rng.choice(n, size=weight, replace=False)] = True
    A = BoolMatrix(data)
    cert = certify_good_rows(A, k, seed, budget, samples) if certify else None
    return A, cert


def stacked_block_sizes(n: int) -> list[tuple[float, int]]:
    """``(S_i, k_i)`` for each stacked block.

    ``S_i = 2^i log2 n`` for ``0 <= i <= log2 n - 2 log2 log2 n`` (at least
    ``i = 0``); ``k_i`` is the smallest power of two ``>= S_i``, which keeps
    ``2 k_i`` a divisor of n.  Blocks with ``k_i > n/2`` are dropped.
    """
    if n < 4 or n & (n - 1):
        raise ReductionError("n must be a power of two, at least 4")
    lg = math.log2(n)
    top = max(0, math.floor(lg - 2 * math.log2(lg)))
    out = []
    for i in range(top + 1):
        S = 2**i * lg
        k = 1 << math.ceil(math.log2(S))
        if 2 * k <= n:
            out.append((S, k))
    return out


def stacked_hard_matrix(n: int, seed: int = 0) -> BoolMatrix:
    blocks = []
    for i, (_, k) in enumerate(stacked_block_sizes(n)):
        A, _ = ksdw_matrix(n, k, seed=seed, certify=False, stream=i)
        blocks.append(A.data)
    return BoolMatrix(np.vstack(blocks))


def half_norm(A: BoolMatrix) -> float:
    return float(np.sqrt(A.data.sum(axis=1)).sum())

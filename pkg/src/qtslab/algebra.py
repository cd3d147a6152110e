"""Exact linear algebra over prime fields Z_p, plus Boolean matrices.

Everything here is integer arithmetic on small numpy arrays; no floating
point is involved.  Matrices are immutable once constructed.

Index conventions are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class AlgebraError(ValueError):
    pass


class DimensionError(AlgebraError):
    pass


class FieldMismatchError(AlgebraError):
    pass


class SingularMatrixError(AlgebraError):
    pass


class NoRootOfUnityError(AlgebraError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    return all(p % f for f in range(3, math.isqrt(p) + 1, 2))


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise AlgebraError(f"modulus {self.p} is not prime")

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, -1, self.p)

    def primitive_root_of_unity(self, n: int) -> int:
        """Smallest element of multiplicative order exactly ``n``."""
        if n < 1 or (self.p - 1) % n:
            raise NoRootOfUnityError(f"Z_{self.p} has no primitive {n}-th root of unity")
        prime_factors = _prime_factors(n)
        for w in range(1, self.p):
            if pow(w, n, self.p) != 1:
                continue
            if all(pow(w, n // q, self.p) != 1 for q in prime_factors):
                return w
        raise NoRootOfUnityError(f"Z_{self.p} has no primitive {n}-th root of unity")


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class Alphabet:
    """Input alphabet D, a subset of Z_p.

    ``index`` is the enumeration of D by sorted order; the quantum simulator
    stores register values as these indices.
    """

    values: tuple[int, ...]
    p: int

    def __post_init__(self):
        vals = tuple(sorted(set(int(v) for v in self.values)))
        if len(vals) != len(self.values):
            raise AlgebraError("alphabet elements must be distinct")
        if len(vals) < 2:
            raise AlgebraError("alphabet needs at least two elements")
        if vals[0] < 0 or vals[-1] >= self.p:
            raise AlgebraError(f"alphabet elements must lie in [0, {self.p})")
        object.__setattr__(self, "values", vals)

    @classmethod
    def full(cls, p: int) -> "Alphabet":
        return cls(tuple(range(p)), p)

    @property
    def d(self) -> int:
        return len(self.values)

    def index(self, value: int) -> int:
        return self.values.index(value)

    def value(self, index: int) -> int:
        return self.values[index]


def _check_modulus(p: int) -> None:
    if not is_prime(p):
        raise AlgebraError(f"modulus {p} is not prime")


def _needs_bigint(p: int, inner: int) -> bool:
    return (p - 1) ** 2 * max(inner, 1) >= 2**62


class FieldMatrix:
    """Dense m x n matrix over Z_p, entries stored reduced in [0, p)."""

    __slots__ = ("_data", "p")

    def __init__(self, data, p: int):
        _check_modulus(p)
        # reduce as Python ints first so oversized products cannot overflow int64
        if isinstance(data, np.ndarray) and data.dtype.kind in "iu" and p < 2**31:
            arr = data.astype(np.int64)
        else:
            arr = np.array(data, dtype=object)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise DimensionError("matrix data must be two-dimensional")
        arr = arr % p
        if p < 2**31:
            arr = arr.astype(np.int64)
        arr.setflags(write=False)
        self._data = arr
        self.p = p

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), p)

    @classmethod
    def identity(cls, n: int, p: int) -> "FieldMatrix":
        return cls(np.eye(n, dtype=np.int64), p)

    @classmethod
    def random(cls, rows: int, cols: int, p: int, rng: np.random.Generator,
               alphabet: Alphabet | None = None) -> "FieldMatrix":
        if alphabet is None:
            return cls(rng.integers(0, p, size=(rows, cols)), p)
        vals = np.array(alphabet.values)
        return cls(vals[rng.integers(0, alphabet.d, size=(rows, cols))], p)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self._data.T, self.p)

    def __getitem__(self, idx):
        return self._data[idx]

    def tolist(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self._data]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "FieldMatrix":
        return FieldMatrix(self._data[np.ix_(list(rows), list(cols))].reshape(len(rows), len(cols)), self.p)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "FieldMatrix":
        return FieldMatrix(self._data[r0:r1, c0:c1], self.p)

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return mat_mul(self, other)

    def __neg__(self) -> "FieldMatrix":
        return FieldMatrix(-self._data, self.p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self):
        return hash((self.p, self.shape, tuple(int(v) for v in self._data.flat)))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.tolist()}, p={self.p})"


def _same_field(A: FieldMatrix, B: FieldMatrix) -> None:
    if A.p != B.p:
        raise FieldMismatchError(f"field mismatch: Z_{A.p} vs Z_{B.p}")


def mat_mul(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    _same_field(A, B)
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if _needs_bigint(A.p, A.cols):
        prod = A.data.astype(object) @ B.data.astype(object)
    else:
        prod = A.data.astype(np.int64) @ B.data.astype(np.int64)
    return FieldMatrix(prod, A.p)


def mat_vec(A: FieldMatrix, x: Sequence[int]) -> tuple[int, ...]:
    x = np.asarray(x, dtype=np.int64).reshape(-1, 1)
    if x.shape[0] != A.cols:
        raise DimensionError(f"vector of length {x.shape[0]} vs matrix with {A.cols} columns")
    y = mat_mul(A, FieldMatrix(x, A.p))
    return tuple(int(v) for v in y.data[:, 0])


def mat_pow(A: FieldMatrix, e: int) -> FieldMatrix:
    if A.rows != A.cols:
        raise DimensionError("matrix power needs a square matrix")
    out = FieldMatrix.identity(A.rows, A.p)
    for _ in range(e):
        out = mat_mul(out, A)
    return out


def _row_reduce(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod p; returns (R, pivot columns)."""
    R = [[int(v) % p for v in row] for row in M]
    m = len(R)
    n = len(R[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if R[i][c]), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        inv = pow(R[r][c], -1, p)
        R[r] = [(v * inv) % p for v in R[r]]
        for i in range(m):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [(a - f * b) % p for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    return np.array(R, dtype=np.int64).reshape(m, n), pivots


def mat_rank(A: FieldMatrix) -> int:
    if A.rows == 0 or A.cols == 0:
        return 0
    return len(_row_reduce(A.data, A.p)[1])


def mat_inverse(A: FieldMatrix) -> FieldMatrix:
    if A.rows != A.cols:
        raise DimensionError(f"cannot invert non-square {A.shape} matrix")
    n = A.rows
    aug = np.hstack([A.data.astype(np.int64), np.eye(n, dtype=np.int64)])
    R, pivots = _row_reduce(aug, A.p)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return FieldMatrix(R[:, n:], A.p)


def kron(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    _same_field(A, B)
    return FieldMatrix(np.kron(A.data.astype(np.int64), B.data.astype(np.int64)), A.p)


def block_matrix(blocks: Sequence[Sequence[FieldMatrix | None]], n: int, p: int) -> FieldMatrix:
    """Assemble a square grid of n x n blocks; ``None`` means a zero block."""
    out = np.zeros((n * len(blocks), n * len(blocks[0])), dtype=np.int64)
    for bi, row in enumerate(blocks):
        for bj, blk in enumerate(row):
            if blk is None:
                continue
            if blk.p != p:
                raise FieldMismatchError(f"block over Z_{blk.p} in a Z_{p} matrix")
            if blk.shape != (n, n):
                raise DimensionError(f"block has shape {blk.shape}, expected {(n, n)}")
            out[bi * n:(bi + 1) * n, bj * n:(bj + 1) * n] = blk.data
    return FieldMatrix(out, p)


def make_conv_matrix(u: Sequence[int], p: int) -> FieldMatrix:
    """Toeplitz matrix U whose product with v is the convolution u * v.

    Row 0 is (u_n, u_{n-1}, ..., u_1) in 1-based naming, and each later row
    is the previous one shifted right by one with wrap-around, so that
    ``U[r][c] = u[(r - c - 1) mod n]`` in 0-based indexing.  The result is
    circulant: ``(U v)[o] = sum over a + b == o - 1 (mod n) of u[a] * v[b]``.
    """
    n = len(u)
    if n % 2:
        raise DimensionError("convolution matrix is defined for even n only")
    u = np.asarray(u, dtype=np.int64)
    r = np.arange(n).reshape(-1, 1)
    c = np.arange(n).reshape(1, -1)
    return FieldMatrix(u[(r - c - 1) % n], p)


def convolve(u: Sequence[int], v: Sequence[int], p: int) -> tuple[int, ...]:
    """Cyclic convolution with the index convention of :func:`make_conv_matrix`.

    This wraps around modulo n; it is not the textbook linear convolution.
    """
    n = len(u)
    if len(v) != n:
        raise DimensionError(f"length mismatch: {len(u)} vs {len(v)}")
    out = [0] * n
    for a in range(n):
        for b in range(n):
            out[(a + b + 1) % n] += int(u[a]) * int(v[b])
    return tuple(x % p for x in out)


def make_dft_matrix(n: int, field: PrimeField) -> FieldMatrix:
    """W[i][j] = w**(i*j) for the smallest primitive n-th root of unity w."""
    w = field.primitive_root_of_unity(n)
    return FieldMatrix([[pow(w, i * j, field.p) for j in range(n)] for i in range(n)], field.p)


class BoolMatrix:
    """Dense 0/1 matrix."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data)
        if arr.ndim != 2:
            raise DimensionError("matrix data must be two-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise AlgebraError("Boolean matrix entries must be 0 or 1")
        arr = arr.astype(bool)
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BoolMatrix":
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def identity(cls, n: int) -> "BoolMatrix":
        return cls(np.eye(n, dtype=bool))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def __getitem__(self, idx):
        return self._data[idx]

    def row_weights(self) -> list[int]:
        return [int(v) for v in self._data.sum(axis=1)]

    def tolist(self) -> list[list[int]]:
        return self._data.astype(int).tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoolMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"BoolMatrix({self.tolist()})"


def bool_mat_mul(A: BoolMatrix, B: BoolMatrix) -> BoolMatrix:
    """(OR, AND) matrix product."""
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return BoolMatrix(A.data.astype(np.int64) @ B.data.astype(np.int64) > 0)


def bool_mat_vec(A: BoolMatrix, x: Sequence[int]) -> tuple[int, ...]:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (A.cols,):
        raise DimensionError(f"vector of length {x.size} vs matrix with {A.cols} columns")
    return tuple(int(v > 0) for v in A.data.astype(np.int64) @ x)


# -- text format -------------------------------------------------------------
#
# line 1: "rows cols modulus", then rows*cols integers row-major.  Boolean
# matrices use modulus 2.

def format_matrix(M: FieldMatrix | BoolMatrix) -> str:
    p = M.p if isinstance(M, FieldMatrix) else 2
    lines = [f"{M.rows} {M.cols} {p}"]
    lines += [" ".join(str(v) for v in row) for row in M.tolist()]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str, boolean: bool = False) -> FieldMatrix | BoolMatrix:
    tokens = text.split()
    if len(tokens) < 3:
        raise AlgebraError("matrix text needs a 'rows cols modulus' header")
    rows, cols, p = (int(t) for t in tokens[:3])
    body = [int(t) for t in tokens[3:]]
    if len(body) != rows * cols:
        raise AlgebraError(f"expected {rows * cols} entries, found {len(body)}")
    data = np.array(body, dtype=np.int64).reshape(rows, cols)
    if boolean:
        if p != 2:
            raise AlgebraError("Boolean matrices use modulus 2")
        return BoolMatrix(data)
    if body and (min(body) < 0 or max(body) >= p):
        raise AlgebraError(f"entries must lie in [0, {p})")
    return FieldMatrix(data, p)


def read_matrix(path, boolean: bool = False) -> FieldMatrix | BoolMatrix:
    with open(path) as fh:
        return parse_matrix(fh.read(), boolean=boolean)


def write_matrix(path, M: FieldMatrix | BoolMatrix) -> None:
    with open(path, "w") as fh:
        fh.write(format_matrix(M))


def vec_rows(M: FieldMatrix) -> FieldMatrix:
    """Stack the rows of M (as columns) into one column vector."""
    return FieldMatrix(M.data.reshape(-1, 1), M.p)


def all_vectors(values: Iterable[int], n: int):
    """Every length-n tuple over ``values``, in lexicographic order."""
    import itertools
    return itertools.product(tuple(values), repeat=n)

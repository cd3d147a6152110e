"""Grid-set colorings and their use in Boolean matrix multiplication.

A coloring of a set ``E`` of grid points assigns a color to each point so
that each color class either has pairwise distinct rows or pairwise distinct
columns ("row-distinct" / "col-distinct"), and no point ``(i, j)`` of ``E``
sees a cross ``(i, j'), (i', j)`` (``i' != i``, ``j' != j``) inside a single
color class.  Such a coloring lets ``|E|`` disjoint ORs be planted in the
outputs of ``A . B``.

Grid indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import BoolMatrix, DimensionError, bool_mat_mul
from .qsim import grover_exact_schedule, grover_or_circuit, grover_outcome_distribution

Point = tuple[int, int]

ROW = "row-distinct"
COL = "col-distinct"


class ColoringError(ValueError):
    pass


class BudgetExceeded(ColoringError):
    pass


@dataclass(frozen=True)
class GridSet:
    points: frozenset[Point]
    n: int

    def __init__(self, points: Iterable[Point], n: int | None = None):
        pts = frozenset((int(i), int(j)) for i, j in points)
        if n is None:
            n = 1 + max((max(p) for p in pts), default=-1)
        if any(not (0 <= i < n and 0 <= j < n) for i, j in pts):
            raise ColoringError(f"points must lie in [0, {n}) x [0, {n})")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "n", n)

    @property
    def k(self) -> int:
        return len(self.points)

    def sorted(self) -> list[Point]:
        return sorted(self.points)

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return p in self.points


def default_orientation(points: Iterable[Point]) -> str:
    pts = list(points)
    return ROW if len({i for i, _ in pts}) == len(pts) else COL


@dataclass(frozen=True)
class Coloring:
    assignment: dict  # point -> color in 0..L-1
    orientations: dict = field(default_factory=dict)  # color -> ROW | COL

    @classmethod
    def from_assignment(cls, assignment: dict, orientations: dict | None = None) -> "Coloring":
        """Relabel colors densely in order of first appearance (sorted points)
        and fill in missing orientations."""
        relabel: dict = {}
        for p in sorted(assignment):
            relabel.setdefault(assignment[p], len(relabel))
        new = {p: relabel[c] for p, c in assignment.items()}
        given = orientations or {}
        ori = {}
        for old, c in relabel.items():
            ori[c] = given.get(old) or default_orientation(p for p, cc in new.items() if cc == c)
        return cls(new, ori)

    @property
    def num_colors(self) -> int:
        return len(set(self.assignment.values()))

    def classes(self) -> dict[int, list[Point]]:
        out = defaultdict(list)
        for p, c in sorted(self.assignment.items()):
            out[c].append(p)
        return dict(sorted(out.items()))

    def orientation(self, color: int) -> str:
        return self.orientations.get(color) or default_orientation(self.classes()[color])


@dataclass(frozen=True)
class ColoringCheck:
    valid: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.valid


def verify_coloring(E: GridSet | Iterable[Point], coloring: Coloring) -> ColoringCheck:
    pts = set(E.points if isinstance(E, GridSet) else E)
    chi = coloring.assignment
    missing = sorted(pts - set(chi))
    if missing:
        raise ColoringError(f"coloring is not total: {missing[0]} has no color")
    if set(chi) - pts:
        return ColoringCheck(False, ("extra", sorted(set(chi) - pts)[0]))
    for c, members in coloring.classes().items():
        rows_ok = len({i for i, _ in members}) == len(members)
        cols_ok = len({j for _, j in members}) == len(members)
        tag = coloring.orientations.get(c)
        if tag == ROW and not rows_ok or tag == COL and not cols_ok or not (rows_ok or cols_ok):
            return ColoringCheck(False, ("distinct", c, tuple(members)))
    by_row: dict = defaultdict(set)
    by_col: dict = defaultdict(set)
    for (i, j), c in chi.items():
        by_row[i, c].add(j)
        by_col[j, c].add(i)
    colors = sorted(set(chi.values()))
    for i, j in sorted(pts):
        for c in colors:
            js = by_row[i, c] - {j}
            is_ = by_col[j, c] - {i}
            if js and is_:
                return ColoringCheck(False, ("cross", (i, j), c, (i, min(js)), (min(is_), j)))
    return ColoringCheck(True)


# -- reduction to pairwise-intersecting rows and columns -------------------------

@dataclass(frozen=True)
class Reduction:
    reduced: GridSet
    origin: dict  # reduced point -> original point (a bijection)

    def lift(self, coloring: Coloring) -> Coloring:
        return Coloring({self.origin[p]: c for p, c in coloring.assignment.items()},
                        dict(coloring.orientations))


def _lines(points: set[Point], axis: int) -> dict[int, set[int]]:
    out: dict = defaultdict(set)
    for p in points:
        out[p[axis]].add(p[1 - axis])
    return out


def _merge_once(points: set[Point], origin: dict, axis: int) -> bool:
    lines = _lines(points, axis)
    keys = sorted(lines)
    for a, b in itertools.combinations(keys, 2):
        if lines[a].isdisjoint(lines[b]):
            for other in lines[b]:
                old = (b, other) if axis == 0 else (other, b)
                new = (a, other) if axis == 0 else (other, a)
                points.discard(old)
                points.add(new)
                origin[new] = origin.pop(old)
            return True
    return False


def intersect_reduce(E: GridSet | Iterable[Point]) -> Reduction:
    """Merge non-intersecting rows (then columns) until every pair of rows
    and every pair of columns shares a point.  The lowest pair is merged
    first, the higher index folding into the lower."""
    E = E if isinstance(E, GridSet) else GridSet(E)
    points = set(E.points)
    origin = {p: p for p in points}
    while _merge_once(points, origin, 0) or _merge_once(points, origin, 1):
        pass
    return Reduction(GridSet(points, E.n), origin)


# -- constructive coloring -----------------------------------------------------

def color_bound(k: int) -> int:
    """``ceil(sqrt(3/2) k^(2/3))``."""
    if k == 0:
        return 0
    return math.ceil(math.sqrt(1.5) * k ** (2 / 3) - 1e-12)


def l_coloring(E: GridSet | Iterable[Point]) -> Coloring:
    """Coloring with at most ``color_bound(|E|)`` colors.

    After reducing to pairwise-intersecting rows and columns: a full row or
    column holding at least ``(3/2) k^(1/3)`` points becomes its own class
    and the rest is colored recursively; otherwise, if the rows (or columns)
    are few enough, each becomes a class.
    """
    E = E if isinstance(E, GridSet) else GridSet(E)
    assignment = _color(set(E.points), E.n)
    return Coloring.from_assignment(assignment)


def _color(points: set[Point], n: int) -> dict:
    if not points:
        return {}
    red = intersect_reduce(GridSet(points, n))
    pts = set(red.reduced.points)
    k = len(pts)
    rows, cols = _lines(pts, 0), _lines(pts, 1)
    ranked = sorted([(-len(v), 0, i) for i, v in rows.items()] +
                    [(-len(v), 1, j) for j, v in cols.items()])
    big, axis, line = ranked[0]
    limit = math.sqrt(1.5) * k ** (2 / 3)
    if -big >= 1.5 * k ** (1 / 3) or (len(rows) > limit and len(cols) > limit):
        members = {p for p in pts if p[axis] == line}
        rest = _color(pts - members, n)
        out = {p: c + 1 for p, c in rest.items()}
        out.update({p: 0 for p in members})
    elif len(rows) <= limit:
        order = {i: c for c, i in enumerate(sorted(rows))}
        out = {p: order[p[0]] for p in pts}
    else:
        order = {j: c for c, j in enumerate(sorted(cols))}
        out = {p: order[p[1]] for p in pts}
    return {red.origin[p]: c for p, c in out.items()}


def min_colors_bruteforce(E: GridSet | Iterable[Point], max_k: int = 9) -> int:
    """Exact chromatic number under the coloring rules, by backtracking with
    colors introduced in canonical order."""
    pts = sorted(E.points if isinstance(E, GridSet) else set(E))
    k = len(pts)
    if k > max_k:
        raise BudgetExceeded(f"k = {k} exceeds brute-force limit {max_k}")
    if k == 0:
        return 0
    pset = set(pts)

    def ok(assign: dict, p: Point, c: int) -> bool:
        members = [q for q, cc in assign.items() if cc == c] + [p]
        if len({i for i, _ in members}) < len(members) and len({j for _, j in members}) < len(members):
            return False
        for i, j in pset:
            js = {q[1] for q in members if q[0] == i and q[1] != j}
            is_ = {q[0] for q in members if q[1] == j and q[0] != i}
            if js and is_:
                return False
        return True

    def search(t: int, assign: dict, used: int, L: int) -> bool:
        if t == k:
            return True
        p = pts[t]
        for c in range(min(used + 1, L)):
            if ok(assign, p, c):
                assign[p] = c
                if search(t + 1, assign, max(used, c + 1), L):
                    return True
                del assign[p]
        return False

    for L in range(1, k + 1):
        if search(0, {}, 0, L):
            return L
    return k


def triangle_set(L: int) -> GridSet:
    """``{(i, j) : 0 <= i <= j < L}``, with ``L(L+1)/2`` points."""
    return GridSet([(i, j) for i in range(L) for j in range(i, L)], L)


# -- embedding disjoint ORs into A . B ----------------------------------------------

@dataclass(frozen=True)
class OrEmbedding:
    n: int
    points: tuple[Point, ...]
    blocks: tuple[tuple[int, ...], ...]
    a_fixed: np.ndarray  # 0/1 values; meaningless where a_free
    b_fixed: np.ndarray
    a_free: np.ndarray  # bool masks of unset bits
    b_free: np.ndarray
    groups: dict  # output point -> tuple of free bits ("A"|"B", row, col)

    @property
    def free_bits(self) -> list[tuple[str, int, int]]:
        a = [("A", int(r), int(c)) for r, c in zip(*np.nonzero(self.a_free))]
        b = [("B", int(r), int(c)) for r, c in zip(*np.nonzero(self.b_free))]
        return a + b


def contiguous_blocks(n: int, L: int) -> list[tuple[int, ...]]:
    size = n // L
    blocks = [tuple(range(b * size, (b + 1) * size)) for b in range(L)]
    blocks[-1] = tuple(range((L - 1) * size, n))
    return blocks


def or_embedding(E: GridSet | Iterable[Point], coloring: Coloring, n: int) -> OrEmbedding:
    E = E if isinstance(E, GridSet) else GridSet(E, n)
    check = verify_coloring(E, coloring)
    if not check:
        raise ColoringError(f"invalid coloring: {check.witness}")
    classes = coloring.classes()
    L = len(classes)
    if L == 0:
        raise ColoringError("empty point set")
    if 2 * L > n:
        raise ColoringError(f"{L} colors exceed n/2 = {n / 2}")
    blocks = contiguous_blocks(n, L)
    a_fix = np.zeros((n, n), dtype=np.uint8)
    b_fix = np.zeros((n, n), dtype=np.uint8)
    a_free = np.zeros((n, n), dtype=bool)
    b_free = np.zeros((n, n), dtype=bool)
    groups = {}
    for idx, (c, members) in enumerate(classes.items()):
        blk = list(blocks[idx])
        if coloring.orientation(c) == COL:
            for i, j in members:
                a_fix[i, blk] = 1
                b_free[blk, j] = True
                groups[i, j] = tuple(("B", b, j) for b in blk)
        else:
            for i, j in members:
                b_fix[blk, j] = 1
                a_free[i, blk] = True
                groups[i, j] = tuple(("A", i, b) for b in blk)
    return OrEmbedding(n, tuple(E.sorted()), tuple(blocks), a_fix, b_fix, a_free, b_free, groups)


def evaluate_embedding(emb: OrEmbedding, bits: dict) -> tuple[BoolMatrix, BoolMatrix, dict]:
    """Fill free bits from ``bits`` (missing ones default to 0) and return
    ``(A, B, outputs at E)``."""
    A = np.where(emb.a_free, 0, emb.a_fixed).astype(np.uint8)
    B = np.where(emb.b_free, 0, emb.b_fixed).astype(np.uint8)
    for (m, r, c), v in bits.items():
        target = A if m == "A" else B
        free = emb.a_free if m == "A" else emb.b_free
        if not free[r, c]:
            raise ColoringError(f"bit {(m, r, c)} is not free")
        target[r, c] = v
    Am, Bm = BoolMatrix(A), BoolMatrix(B)
    C = bool_mat_mul(Am, Bm)
    return Am, Bm, {p: int(C[p]) for p in emb.points}


@dataclass(frozen=True)
class EmbeddingCheck:
    passed: bool
    method: str  # "joint" or "per-output"
    assignments: int  # assignments enumerated in total
    witness: tuple | None = None


def _output_terms(emb: OrEmbedding, p: Point):
    """Terms of ``OR_b A[i,b] & B[b,j]`` as pairs of (fixed value | free bit)."""
    i, j = p
    terms = []
    for b in range(emb.n):
        a = ("A", i, b) if emb.a_free[i, b] else int(emb.a_fixed[i, b])
        bb = ("B", b, j) if emb.b_free[b, j] else int(emb.b_fixed[b, j])
        if a != 0 and bb != 0:
            terms.append((a, bb))
    return terms


def _check_outputs(emb: OrEmbedding, outputs: Sequence[Point], bit_ids: list) -> tuple | None:
    F = len(bit_ids)
    col = {bit: t for t, bit in enumerate(bit_ids)}
    vals = ((np.arange(2**F, dtype=np.int64)[:, None] >> np.arange(F)) & 1).astype(bool)
    ones = np.ones(2**F, dtype=bool)
    for p in outputs:
        got = np.zeros(2**F, dtype=bool)
        for a, b in _output_terms(emb, p):
            va = vals[:, col[a]] if isinstance(a, tuple) else ones
            vb = vals[:, col[b]] if isinstance(b, tuple) else ones
            got |= va & vb
        want = np.zeros(2**F, dtype=bool)
        for bit in emb.groups[p]:
            want |= vals[:, col[bit]]
        bad = np.flatnonzero(got != want)
        if bad.size:
            row = vals[bad[0]]
            return (p, {bit: int(row[t]) for t, bit in enumerate(bit_ids)})
    return None


def verify_or_embedding(emb: OrEmbedding, budget: int = 20) -> EmbeddingCheck:
    """Check that every output at E equals the OR of its own free block for
    every setting of the free bits.

    When the free bits fit in ``budget`` they are enumerated jointly.
    Otherwise each output is checked over every setting of the free bits in
    its row of A and column of B, which are the only bits it depends on; the
    two checks are logically equivalent.
    """
    seen: set = set()
    size = emb.n // len(emb.blocks)
    for p, grp in emb.groups.items():
        if seen & set(grp):
            return EmbeddingCheck(False, "structure", 0, ("overlap", p))
        if len(grp) < size:
            return EmbeddingCheck(False, "structure", 0, ("small", p))
        seen |= set(grp)
    if seen != set(emb.free_bits):
        return EmbeddingCheck(False, "structure", 0, ("stray free bits",))
    bits = emb.free_bits
    if len(bits) <= budget:
        w = _check_outputs(emb, list(emb.points), bits)
        return EmbeddingCheck(w is None, "joint", 2 ** len(bits), w)
    total = 0
    for p in emb.points:
        i, j = p
        rel = [b for b in bits if (b[0] == "A" and b[1] == i) or (b[0] == "B" and b[2] == j)]
        if len(rel) > budget:
            raise BudgetExceeded(f"output {p} depends on {len(rel)} free bits > {budget}")
        total += 2 ** len(rel)
        w = _check_outputs(emb, [p], rel)
        if w is not None:
            return EmbeddingCheck(False, "per-output", total, w)
    return EmbeddingCheck(True, "per-output", total)


# -- Grover-based upper bounds --------------------------------------------------------

@dataclass
class BmmResult:
    product: BoolMatrix
    queries: int
    errors: int  # sampled entries disagreeing with the exact product
    error_probability: np.ndarray  # per entry
    iterations: np.ndarray


def _snap(pr: float, tol: float = 1e-12) -> float:
    return 0.0 if pr < tol else 1.0 if pr > 1 - tol else pr


def grover_bmm(A: BoolMatrix, B: BoolMatrix, iterations_per_entry="exact", seed: int = 0) -> BmmResult:
    """Boolean product, each entry by a simulated Grover OR search.

    Entry ``(i, j)`` searches the indicator ``A[i, l] & B[l, j]``; one
    indicator query costs one query to A and one to B.  With ``"exact"`` the
    iteration count and starting phase come from the true number of
    witnesses, which makes every entry deterministic.
    """
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    n = A.cols
    truth = bool_mat_mul(A, B)
    rng = np.random.default_rng(seed)
    circuits: dict = {}
    out = np.zeros((A.rows, B.cols), dtype=bool)
    err = np.zeros((A.rows, B.cols))
    its = np.zeros((A.rows, B.cols), dtype=np.int64)
    queries = 0
    for i in range(A.rows):
        for j in range(B.cols):
            x = (A.data[i] & B.data[:, j]).astype(int).tolist()
            if iterations_per_entry == "exact":
                it, beta = grover_exact_schedule(n, sum(x))
            else:
                it, beta = int(iterations_per_entry), math.pi / 2
            if (it, beta) not in circuits:
                circuits[it, beta] = grover_or_circuit(n, it, beta=beta)
            dist = grover_outcome_distribution(circuits[it, beta], x)
            p_one = _snap(sum(pr for w, pr in dist.items() if w % 2))
            out[i, j] = rng.random() < p_one
            err[i, j] = 1 - p_one if truth[i, j] else p_one
            its[i, j] = it
            queries += 2 * (it + 1)
    product = BoolMatrix(out)
    errors = int((product.data != truth.data).sum())
    return BmmResult(product, queries, errors, err, its)


@dataclass
class SparseMvResult:
    output: tuple[int, ...]
    support: tuple[int, ...]  # recorded ones of x
    search_queries: int
    output_phase_queries: int
    attempts: list  # (round, iterations, verified index or None)
    undetected: tuple[int, ...]
    stop_miss_probability: float  # chance the final round misses a remaining one


def sparse_mv(A: BoolMatrix, x: Sequence[int], weight_budget: int, seed: int = 0) -> SparseMvResult:
    """Find every 1 of a sparse ``x`` by repeated Grover search, then form
    ``A . x`` from the recorded support without further queries.

    Each round searches the not-yet-found positions, trying iteration counts
    ``0 .. ceil(pi/4 sqrt(N))``; every attempt ends with a check query, so a
    reported index is always a true 1.  The search stops after a round where
    no attempt succeeds.
    """
    x = [int(v) for v in x]
    n = len(x)
    if A.cols != n:
        raise DimensionError(f"vector of length {n} vs matrix with {A.cols} columns")
    if sum(x) > weight_budget:
        raise BudgetExceeded(f"|x| = {sum(x)} exceeds weight budget {weight_budget}")
    rng = np.random.default_rng(seed)
    found: list[int] = []
    attempts = []
    queries = 0
    miss = 0.0
    rnd = 0
    while len(found) < n:
        cand = [j for j in range(n) if j not in found]
        remaining = sum(x[j] for j in cand)
        hit = None
        miss = 1.0
        for it in range(math.ceil(math.pi / 4 * math.sqrt(len(cand))) + 1):
            dist = grover_outcome_distribution(grover_or_circuit(n, it, candidates=cand), x)
            queries += it + 1
            ws = sorted(dist)
            probs = np.array([dist[w] for w in ws])
            w = ws[rng.choice(len(ws), p=probs / probs.sum())]
            miss *= _snap(sum(pr for ww, pr in dist.items() if ww % 2 == 0))
            if w % 2:
                hit = w // 2 - 1
                attempts.append((rnd, it, hit))
                break
            attempts.append((rnd, it, None))
        if hit is None:
            miss = miss if remaining else 0.0
            break
        found.append(hit)
        rnd += 1
    else:
        miss = 0.0
    support = tuple(sorted(found))
    y = tuple(int(A.data[r, list(support)].any()) if support else 0 for r in range(A.rows))
    undetected = tuple(j for j in range(n) if x[j] and j not in found)
    return SparseMvResult(y, support, queries, 0, attempts, undetected, miss)


# -- text formats ---------------------------------------------------------------

def format_gridset(E: GridSet) -> str:
    lines = [f"{E.n} {E.k}"] + [f"{i} {j}" for i, j in E.sorted()]
    return "\n".join(lines) + "\n"


def parse_gridset(text: str) -> GridSet:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ColoringError("grid file needs an 'n k' header")
    n, k = (int(v) for v in rows[0])
    pts = [(int(a), int(b)) for a, b in rows[1:]]
    if len(pts) != k or len(set(pts)) != k:
        raise ColoringError(f"expected {k} distinct points, found {len(set(pts))}")
    return GridSet(pts, n)


def format_coloring(coloring: Coloring) -> str:
    return "".join(f"{i} {j} {c}\n" for (i, j), c in sorted(coloring.assignment.items()))


def parse_coloring(text: str) -> Coloring:
    assign = {}
    for ln in text.strip().splitlines():
        if ln.strip():
            i, j, c = (int(v) for v in ln.split())
            assign[i, j] = c
    return Coloring.from_assignment(assign)

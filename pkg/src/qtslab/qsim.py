"""Sparse simulation of quantum query circuits.

A basis label is ``|i, p, w, x_1..x_n>``: ``i`` in ``0..n`` selects the
queried register (``0`` means no query), ``p`` in ``0..d-1`` is the phase
register, ``w`` the work register, and each ``x_j`` lies in ``D`` or is the
unqueried marker ``BOT``.

States are stored as a mapping from the x-tuple (alphabet indices, ``BOT``
for the marker) to a dense complex vector over the ``(i, p, w)`` space.  The
flat index of ``(i, p, w)`` is ``(i * d + p) * W + w``.

Two oracles are provided.  The phase oracle multiplies a label by
``omega_d ** (p * nu(x_i))``.  The recording oracle is the composite
``S O S`` where ``S`` applies the single-register unitary ``S_1`` to every
input register; inside that composite the phase oracle acts trivially on
registers holding ``BOT``.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np
from scipy.stats import unitary_group

from .algebra import Alphabet, FieldMatrix, mat_vec

BOT = -1
PRUNE = 1e-13
DEFAULT_CAP = 2**22


class QsimError(ValueError):
    pass


class CapExceeded(QsimError):
    pass


class NotUnitaryError(QsimError):
    pass


class BotQueryError(QsimError):
    pass


@dataclass(frozen=True)
class RegisterLayout:
    n: int
    alphabet: Alphabet
    work_dim: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.n < 0:
            raise QsimError("number of input registers must be non-negative")
        if self.work_dim < 1:
            raise QsimError("work dimension must be at least 1")
        if self.total_dim > self.cap:
            raise CapExceeded(
                f"simulated dimension {self.total_dim} exceeds cap {self.cap}")

    @property
    def d(self) -> int:
        return self.alphabet.d

    @property
    def ipw_dim(self) -> int:
        return (self.n + 1) * self.d * self.work_dim

    @property
    def total_dim(self) -> int:
        return self.ipw_dim * (self.d + 1) ** self.n

    def flat(self, i: int, p: int, w: int) -> int:
        return (i * self.d + p) * self.work_dim + w

    def unflat(self, idx: int) -> tuple[int, int, int]:
        ip, w = divmod(idx, self.work_dim)
        i, p = divmod(ip, self.d)
        return i, p, w

    def to_dict(self) -> dict:
        return {"n": self.n, "alphabet": list(self.alphabet.values), "modulus": self.alphabet.p,
                "work_dim": self.work_dim, "cap": self.cap}

    @classmethod
    def from_dict(cls, data: dict) -> "RegisterLayout":
        return cls(data["n"], Alphabet(tuple(data["alphabet"]), data["modulus"]),
                   data["work_dim"], data.get("cap", DEFAULT_CAP))


class BasisLabel(NamedTuple):
    i: int
    p: int
    w: int
    x: tuple[int, ...]


class SparseState:
    """Immutable sparse state.  ``data`` maps x-tuples to (i,p,w) vectors."""

    __slots__ = ("layout", "_data")

    def __init__(self, layout: RegisterLayout, data: dict[tuple[int, ...], np.ndarray],
                 prune: float = PRUNE):
        clean = {}
        for x, vec in data.items():
            vec = np.asarray(vec, dtype=complex)
            if prune > 0:
                vec = np.where(np.abs(vec) < prune, 0, vec)
            if np.any(vec):
                vec.setflags(write=False)
                clean[tuple(x)] = vec
        self.layout = layout
        self._data = clean

    @property
    def data(self) -> dict[tuple[int, ...], np.ndarray]:
        return self._data

    def items(self) -> Iterator[tuple[BasisLabel, complex]]:
        for x, vec in sorted(self._data.items()):
            for idx in np.flatnonzero(vec):
                i, p, w = self.layout.unflat(int(idx))
                yield BasisLabel(i, p, w, x), complex(vec[idx])

    def amplitude(self, label: BasisLabel) -> complex:
        vec = self._data.get(tuple(label.x))
        if vec is None:
            return 0j
        return complex(vec[self.layout.flat(label.i, label.p, label.w)])

    def norm(self) -> float:
        return math.sqrt(sum(float(np.vdot(v, v).real) for v in self._data.values()))

    def distance(self, other: "SparseState") -> float:
        keys = set(self._data) | set(other._data)
        zero = np.zeros(self.layout.ipw_dim, dtype=complex)
        total = 0.0
        for x in keys:
            diff = self._data.get(x, zero) - other._data.get(x, zero)
            total += float(np.vdot(diff, diff).real)
        return math.sqrt(total)

    def __len__(self) -> int:
        return sum(int(np.count_nonzero(v)) for v in self._data.values())


def initial_state(layout: RegisterLayout, mode: str = "recording",
                  x: Sequence[int] | None = None) -> SparseState:
    """Starting state of a run.

    ``recording``: ``|0,0,0>|BOT..BOT>``.  ``standard``: ``|0,0,0>`` times the
    uniform superposition over ``D^n``, or the single basis input ``x``
    (alphabet values) when given.
    """
    e0 = np.zeros(layout.ipw_dim, dtype=complex)
    e0[0] = 1.0
    n, d = layout.n, layout.d
    if mode == "recording":
        return SparseState(layout, {(BOT,) * n: e0})
    if mode != "standard":
        raise QsimError(f"unknown mode {mode!r}")
    if x is not None:
        if len(x) != n:
            raise QsimError(f"input has length {len(x)}, expected {n}")
        return SparseState(layout, {tuple(layout.alphabet.index(v) for v in x): e0})
    if layout.ipw_dim * d**n > layout.cap:
        raise CapExceeded("purified standard state exceeds the dimension cap")
    amp = d ** (-n / 2)
    return SparseState(layout, {xs: e0 * amp for xs in np.ndindex(*(d,) * n)})


def check_unitary(U: np.ndarray, tol: float = 1e-10) -> None:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise NotUnitaryError(f"unitary must be square, got shape {U.shape}")
    err = np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() if U.size else 0.0
    if err > tol:
        raise NotUnitaryError(f"matrix deviates from unitary by {err:.3g}")


def apply_unitary(state: SparseState, U: np.ndarray) -> SparseState:
    if U.shape != (state.layout.ipw_dim,) * 2:
        raise QsimError(f"unitary has shape {U.shape}, expected ({state.layout.ipw_dim},)*2")
    return SparseState(state.layout, {x: U @ v for x, v in state.data.items()})


def _phase_tables(layout: RegisterLayout) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(layout.ipw_dim)
    ip = idx // layout.work_dim
    return ip // layout.d, ip % layout.d


def apply_phase_oracle(state: SparseState, allow_bot: bool = False) -> SparseState:
    """Multiply each label by ``omega_d ** (p * nu(x_i))``.

    Labels with ``i = 0`` or ``p = 0`` are untouched.  A label querying a
    ``BOT`` register with ``p != 0`` is an error unless ``allow_bot``, in
    which case that label is left unchanged.
    """
    layout = state.layout
    d = layout.d
    I, P = _phase_tables(layout)
    roots = np.exp(2j * np.pi * np.arange(d) / d)
    out = {}
    for x, vec in state.data.items():
        xi = np.array((0,) + tuple(x))[I]
        is_bot = (I > 0) & (xi == BOT)
        active = (I > 0) & (P > 0)
        if np.any(is_bot & active & (vec != 0)) and not allow_bot:
            raise BotQueryError("phase oracle queried an unrecorded register")
        expo = np.where(active & ~is_bot, (P * np.where(is_bot, 0, xi)) % d, 0)
        out[x] = vec * roots[expo]
    return SparseState(layout, out, prune=0)


def s1_matrix(d: int) -> np.ndarray:
    """``S_1`` on basis ``(y_0..y_{d-1}, BOT)``: swaps BOT with the uniform vector.

    ``S_1 = I - |u><u| - |B><B| + |u><B| + |B><u|``.  It is real symmetric
    and squares to the identity; vectors orthogonal to both ``u`` and ``B``
    are fixed.
    """
    u = np.zeros(d + 1)
    u[:d] = 1 / math.sqrt(d)
    b = np.zeros(d + 1)
    b[d] = 1.0
    return np.eye(d + 1) - np.outer(u, u) - np.outer(b, b) + np.outer(u, b) + np.outer(b, u)


def apply_s(state: SparseState, prune: float = PRUNE) -> SparseState:
    layout = state.layout
    S1 = s1_matrix(layout.d)
    labels = list(range(layout.d)) + [BOT]
    data = dict(state.data)
    for j in range(layout.n):
        acc: dict[tuple[int, ...], np.ndarray] = defaultdict(
            lambda: np.zeros(layout.ipw_dim, dtype=complex))
        for x, vec in data.items():
            col = S1[:, x[j]]
            for row, y in enumerate(labels):
                c = col[row]
                if abs(c) > 1e-15:
                    acc[x[:j] + (y,) + x[j + 1:]] += c * vec
        data = SparseState(layout, acc, prune=prune).data
    return SparseState(layout, data, prune=0)


def apply_recording_oracle(state: SparseState) -> SparseState:
    return apply_s(apply_phase_oracle(apply_s(state), allow_bot=True))


# -- problems and circuits -----------------------------------------------------

class MatVecProblem:
    """f(x) = A x over Z_p."""

    def __init__(self, A: FieldMatrix):
        self.A = A

    def evaluate(self, x: Sequence[int]) -> tuple[int, ...]:
        return mat_vec(self.A, x)

    def to_dict(self) -> dict:
        return {"kind": "matvec", "modulus": self.A.p, "matrix": self.A.tolist()}


class OrProblem:
    """Single output: OR of the inputs at ``positions`` (all by default)."""

    def __init__(self, n: int, positions: Sequence[int] | None = None):
        self.n = n
        self.positions = tuple(range(n)) if positions is None else tuple(positions)

    def evaluate(self, x: Sequence[int]) -> tuple[int, ...]:
        return (int(any(x[j] for j in self.positions)),)

    def to_dict(self) -> dict:
        return {"kind": "or", "n": self.n, "positions": list(self.positions)}


def problem_from_dict(data: dict):
    if data["kind"] == "matvec":
        return MatVecProblem(FieldMatrix(data["matrix"], data["modulus"]))
    if data["kind"] == "or":
        return OrProblem(data["n"], data["positions"])
    raise QsimError(f"unknown problem kind {data['kind']!r}")


@dataclass
class QueryCircuit:
    """``U_T O U_{T-1} ... U_1 O U_0`` with an output map on the work register.

    ``output_map[w]`` is the ordered list of ``(output index, claimed value)``
    pairs read off when the work register is measured as ``w``.
    """

    layout: RegisterLayout
    unitaries: list[np.ndarray]
    output_map: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    problem: object = None

    def __post_init__(self):
        if not self.unitaries:
            raise QsimError("a circuit needs at least the initial unitary")
        dim = self.layout.ipw_dim
        self.unitaries = [np.asarray(U, dtype=complex) for U in self.unitaries]
        for U in self.unitaries:
            if U.shape != (dim, dim):
                raise QsimError(f"unitary has shape {U.shape}, expected ({dim}, {dim})")
            check_unitary(U)

    @property
    def T(self) -> int:
        return len(self.unitaries) - 1

    def claims(self, w: int) -> list[tuple[int, int]]:
        return list(self.output_map.get(w, []))

    def to_json(self) -> str:
        return json.dumps({
            "layout": self.layout.to_dict(),
            "unitaries": [[np.real(U).tolist(), np.imag(U).tolist()] for U in self.unitaries],
            "oracle_calls": list(range(1, self.T + 1)),
            "q": {str(w): [list(c) for c in cl] for w, cl in sorted(self.output_map.items())},
            "problem": None if self.problem is None else self.problem.to_dict(),
        })

    @classmethod
    def from_json(cls, text: str) -> "QueryCircuit":
        data = json.loads(text)
        layout = RegisterLayout.from_dict(data["layout"])
        us = [np.array(re) + 1j * np.array(im) for re, im in data["unitaries"]]
        q = {int(w): [tuple(c) for c in cl] for w, cl in data["q"].items()}
        prob = None if data["problem"] is None else problem_from_dict(data["problem"])
        return cls(layout, us, q, prob)


def iter_states(circuit: QueryCircuit, mode: str = "recording",
                x: Sequence[int] | None = None) -> Iterator[SparseState]:
    """Yield the state after ``U_0`` and after each later ``U_t``."""
    oracle: Callable[[SparseState], SparseState]
    oracle = apply_recording_oracle if mode == "recording" else apply_phase_oracle
    state = apply_unitary(initial_state(circuit.layout, mode, x), circuit.unitaries[0])
    yield state
    for U in circuit.unitaries[1:]:
        state = apply_unitary(oracle(state), U)
        yield state


def run_circuit(circuit: QueryCircuit, mode: str = "recording",
                x: Sequence[int] | None = None) -> SparseState:
    state = None
    for state in iter_states(circuit, mode, x):
        pass
    return state


def max_nonbot_support(state: SparseState) -> int:
    return max((sum(v != BOT for v in x) for x in state.data), default=0)


def check_recording_equivalence(circuit: QueryCircuit) -> float:
    """``|| psi_T - S phi_T ||`` for the circuit's two runs."""
    psi = run_circuit(circuit, "standard")
    phi = run_circuit(circuit, "recording")
    return psi.distance(apply_s(phi))


@dataclass
class EquivalenceTrace:
    residual: float
    support: list[int]  # max non-BOT count after each U_t, t = 0..T


def trace_recording(circuit: QueryCircuit) -> EquivalenceTrace:
    support = [max_nonbot_support(s) for s in iter_states(circuit, "recording")]
    return EquivalenceTrace(check_recording_equivalence(circuit), support)


@dataclass
class SuccessReport:
    probability: float
    short_claims: list[int]  # w values with fewer than k claims
    bot_weight: float  # squared weight on labels containing BOT (projected out)


def success_report(state: SparseState, circuit: QueryCircuit, k: int) -> SuccessReport:
    """Weight of labels whose first ``k`` claims of ``q(w)`` agree with ``f(x)``."""
    layout = state.layout
    W = layout.work_dim
    short = sorted(w for w in range(W) if len(circuit.claims(w)) < k)
    w_of = np.arange(layout.ipw_dim) % W
    prob = 0.0
    bot = 0.0
    for x, vec in state.data.items():
        weight = np.abs(vec) ** 2
        if BOT in x:
            bot += float(weight.sum())
            continue
        if k == 0:
            prob += float(weight.sum())
            continue
        fx = circuit.problem.evaluate([layout.alphabet.value(v) for v in x])
        ok_w = np.array([
            len(cl := circuit.claims(w)) >= k and all(fx[r] == val % layout.alphabet.p
                                                     for r, val in cl[:k])
            for w in range(W)])
        prob += float(weight[ok_w[w_of]].sum())
    return SuccessReport(prob, short, bot)


def success_probability(state: SparseState, circuit: QueryCircuit, k: int) -> float:
    return success_report(state, circuit, k).probability


def claim_distribution(state: SparseState) -> dict[tuple[tuple[int, ...], int], float]:
    """Probability of each (input, measured w) pair."""
    W = state.layout.work_dim
    out: dict = {}
    for x, vec in state.data.items():
        probs = (np.abs(vec) ** 2).reshape(-1, W).sum(axis=0)
        for w in np.flatnonzero(probs):
            out[(x, int(w))] = float(probs[w])
    return out


# -- circuit builders -------------------------------------------------------------

def random_circuit(layout: RegisterLayout, T: int, rng: np.random.Generator,
                   problem=None, output_map=None) -> QueryCircuit:
    us = [unitary_group.rvs(layout.ipw_dim, random_state=rng) if layout.ipw_dim > 1
          else np.exp(2j * np.pi * rng.random()) * np.eye(1) for _ in range(T + 1)]
    return QueryCircuit(layout, us, output_map or {}, problem)


def basis_permutation(dim: int, mapping: dict[int, int]) -> np.ndarray:
    """Permutation matrix sending ``|a>`` to ``|mapping[a]>``; other basis
    states are fixed.  ``mapping`` must be a bijection on its domain."""
    perm = list(range(dim))
    for a, b in mapping.items():
        perm[a] = b
    if sorted(perm) != list(range(dim)):
        raise QsimError("mapping is not a permutation")
    P = np.zeros((dim, dim))
    P[perm, np.arange(dim)] = 1
    return P


def guess_circuit(layout: RegisterLayout, claims: list[tuple[int, int]], problem) -> QueryCircuit:
    """Zero-query circuit that writes fixed claims into work value 1."""
    if layout.work_dim < 2:
        raise QsimError("guess circuit needs work dimension at least 2")
    U0 = basis_permutation(layout.ipw_dim, {0: 1, 1: 0})
    return QueryCircuit(layout, [U0], {1: list(claims)}, problem)


def householder(dim: int, src: int, target: np.ndarray) -> np.ndarray:
    """Real reflection mapping basis vector ``src`` to unit vector ``target``."""
    e = np.zeros(dim)
    e[src] = 1.0
    v = e - target
    if np.allclose(v, 0):
        return np.eye(dim)
    return np.eye(dim) - 2 * np.outer(v, v) / (v @ v)


def grover_exact_iterations(n_candidates: int, n_marked: int) -> int:
    """Nearest plain Grover count ``round(pi/(4 theta) - 1/2)``; exact only
    when that expression is an integer."""
    if n_marked == 0 or n_candidates == 0:
        return 0
    theta = math.asin(math.sqrt(n_marked / n_candidates))
    return max(0, int(round(math.pi / (4 * theta) - 0.5)))


def grover_exact_schedule(n_candidates: int, n_marked: int) -> tuple[int, float]:
    """``(J, beta)`` making amplitude amplification exact for a known count.

    ``J = ceil(pi/(4 theta) - 1/2)`` and the phase bit starts in
    ``cos(beta)|0> + sin(beta)|1>``, which lowers the good-state angle to
    ``pi/(2(2J+1))`` so that J iterations reach it exactly.
    """
    if n_marked == 0 or n_candidates == 0:
        return 0, math.pi / 2
    if n_marked > n_candidates:
        raise QsimError("more marked items than candidates")
    theta = math.asin(math.sqrt(n_marked / n_candidates))
    J = max(0, math.ceil(math.pi / (4 * theta) - 0.5 - 1e-12))
    ratio = math.sin(math.pi / (2 * (2 * J + 1))) / math.sin(theta)
    return J, math.asin(min(1.0, ratio))


def grover_or_layout(n_bits: int, cap: int = DEFAULT_CAP) -> RegisterLayout:
    return RegisterLayout(n_bits, Alphabet((0, 1), 2), 2 * (n_bits + 1) + 1, cap)


def grover_or_circuit(n_bits: int, iterations: int, layout: RegisterLayout | None = None,
                      candidates: Sequence[int] | None = None,
                      beta: float = math.pi / 2) -> QueryCircuit:
    """Grover search for a 1 among ``candidates`` followed by a check query.

    The search space is ``|i, p>`` with i uniform over the candidates and p in
    ``cos(beta)|0> + sin(beta)|1>``; a query with p = 1 on a marked i is the
    good state.  Uses ``iterations + 1`` oracle calls.  Before the last query
    the p = 1 branch is rotated so that the query writes ``x_i`` into p, and
    the p = 0 branch is parked in a reject work value (claim 0).  ``(i, p)`` is
    then copied into the work register as ``w = 2 i + p``, whose claim is
    ``OR = p``.  An all-zero input is therefore never misreported.
    """
    if layout is None:
        layout = grover_or_layout(n_bits)
    reject = 2 * (n_bits + 1)
    if layout.n != n_bits or layout.alphabet.values != (0, 1):
        raise QsimError("Grover OR needs n_bits binary registers")
    if layout.work_dim < reject + 1:
        raise QsimError(f"Grover OR needs work dimension {reject + 1}")
    cand = tuple(range(n_bits)) if candidates is None else tuple(sorted(candidates))
    if not cand:
        raise QsimError("no candidates to search")
    dim = layout.ipw_dim
    fl = layout.flat
    s = np.zeros(dim)
    for j in cand:
        s[fl(j + 1, 0, 0)] = math.cos(beta)
        s[fl(j + 1, 1, 0)] = math.sin(beta)
    s[np.abs(s) < 1e-15] = 0.0
    s /= np.linalg.norm(s)
    U0 = householder(dim, 0, s)

    diffusion = np.eye(dim)
    sub = [fl(j + 1, p, 0) for j in cand for p in range(2)]
    diffusion[np.ix_(sub, sub)] = 2 * np.outer(s[sub], s[sub]) - np.eye(len(sub))

    # p = 1 at w = 0 is rotated for the check query; p = 0 moves to ``reject``
    r = 1 / math.sqrt(2)
    V = np.eye(dim)
    Hd = np.eye(dim)
    for i in range(n_bits + 1):
        a, b, c = fl(i, 0, 0), fl(i, 1, 0), fl(i, 0, reject)
        V[np.ix_([a, b, c], [a, b, c])] = [[0, r, r], [0, r, -r], [1, 0, 0]]
        Hd[np.ix_([a, b], [a, b])] = [[r, r], [r, -r]]

    copy = {}
    for i in range(n_bits + 1):
        for p in range(2):
            w = 2 * i + p
            if w:
                copy[fl(i, p, 0)] = fl(i, p, w)
                copy[fl(i, p, w)] = fl(i, p, 0)
    C = basis_permutation(dim, copy)

    us = [U0]
    for _ in range(iterations):
        us.append(diffusion)
    us[-1] = V @ us[-1]
    us.append(C @ Hd)
    q = {w: [(0, w % 2)] for w in range(reject)}
    q[reject] = [(0, 0)]
    for w in range(reject + 1, layout.work_dim):
        q[w] = [(0, 0)]
    return QueryCircuit(layout, us, q, OrProblem(n_bits, cand))


def grover_outcome_distribution(circuit: QueryCircuit, x: Sequence[int]) -> dict[int, float]:
    """Distribution of the measured work value for a fixed binary input."""
    state = run_circuit(circuit, "standard", x)
    out: dict[int, float] = defaultdict(float)
    for (_, w), pr in claim_distribution(state).items():
        out[w] += pr
    return dict(out)

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import recording_closed_form as closed_form
from qtslab.algebra import Alphabet, FieldMatrix
from qtslab.qsim import (
    BOT, BasisLabel, BotQueryError, CapExceeded, MatVecProblem, NotUnitaryError, QsimError,
    QueryCircuit, RegisterLayout, SparseState, apply_phase_oracle, apply_recording_oracle,
    apply_s, check_recording_equivalence, grover_exact_iterations, grover_exact_schedule,
    grover_or_circuit, grover_outcome_distribution, guess_circuit, initial_state,
    max_nonbot_support, random_circuit, run_circuit, s1_matrix, success_report, trace_recording,
)


def layout(n=1, d=2, W=1, p=None):
    p = p or (d if d > 2 else 2)
    return RegisterLayout(n, Alphabet(tuple(range(d)), p), W)


def basis_state(lay, i, p, w, x):
    vec = np.zeros(lay.ipw_dim, dtype=complex)
    vec[lay.flat(i, p, w)] = 1
    return SparseState(lay, {tuple(x): vec})


# -- layout -------------------------------------------------------------------------

def test_layout_dimensions_and_cap():
    lay = layout(n=2, d=3, W=4)
    assert lay.ipw_dim == 3 * 3 * 4
    assert lay.total_dim == 36 * 16
    for idx in range(lay.ipw_dim):
        assert lay.flat(*lay.unflat(idx)) == idx
    with pytest.raises(CapExceeded):
        RegisterLayout(20, Alphabet((0, 1), 2), 8)
    with pytest.raises(QsimError):
        RegisterLayout(1, Alphabet((0, 1), 2), 0)


def test_initial_states():
    lay = layout(n=2, d=2)
    rec = initial_state(lay)
    assert list(rec.data) == [(BOT, BOT)]
    std = initial_state(lay, "standard")
    assert len(std.data) == 4 and math.isclose(std.norm(), 1.0)
    fixed = initial_state(lay, "standard", [1, 0])
    assert list(fixed.data) == [(1, 0)]
    with pytest.raises(QsimError):
        initial_state(lay, "standard", [1])


# -- S and the phase oracle -----------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_s1_is_real_symmetric_involution(d):
    S = s1_matrix(d)
    assert np.allclose(S, S.T) and np.isrealobj(S)
    assert np.allclose(S @ S, np.eye(d + 1))
    u = np.r_[np.ones(d) / math.sqrt(d), 0]
    assert np.allclose(S @ np.r_[np.zeros(d), 1], u)
    if d >= 2:
        perp = np.r_[1, -1, np.zeros(d - 1)] / math.sqrt(2)
        assert np.allclose(S @ perp, perp)


def test_s_is_involution_on_states():
    rng = np.random.default_rng(1)
    lay = layout(n=2, d=3, W=2)
    data = {x: rng.normal(size=lay.ipw_dim) + 1j * rng.normal(size=lay.ipw_dim)
            for x in [(0, BOT), (2, 1), (BOT, BOT)]}
    st0 = SparseState(lay, data)
    assert apply_s(apply_s(st0)).distance(st0) < 1e-12


def test_phase_oracle_values():
    lay = layout(n=2, d=3)
    st0 = basis_state(lay, 2, 2, 0, (0, 1))
    out = apply_phase_oracle(st0)
    amp = out.amplitude(BasisLabel(2, 2, 0, (0, 1)))
    assert np.isclose(amp, np.exp(2j * np.pi * 2 / 3))
    # i = 0 and p = 0 are fixed
    for i, p in [(0, 2), (1, 0)]:
        s = basis_state(lay, i, p, 0, (1, 1))
        assert np.isclose(apply_phase_oracle(s).amplitude(BasisLabel(i, p, 0, (1, 1))), 1)


def test_phase_oracle_rejects_bot_query():
    lay = layout(n=1, d=2)
    with pytest.raises(BotQueryError):
        apply_phase_oracle(basis_state(lay, 1, 1, 0, (BOT,)))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_recording_oracle_closed_form(d):
    lay = layout(n=1, d=d, p=5 if d == 4 else None)
    for p in range(1, d):
        for x in list(range(d)) + [BOT]:
            out = apply_recording_oracle(basis_state(lay, 1, p, 0, (x,)))
            got = np.array([out.amplitude(BasisLabel(1, p, 0, (y,)))
                            for y in list(range(d)) + [BOT]])
            assert np.abs(got - closed_form(d, p, x)).max() < 1e-12


def test_recording_oracle_closed_form_frozen_d2():
    # d = 2, p = 1: BOT -> (|0> - |1>)/sqrt2, 0 -> |BOT>/sqrt2 + ..., frozen by hand
    assert np.allclose(closed_form(2, 1, BOT), [1 / math.sqrt(2), -1 / math.sqrt(2), 0])
    assert np.allclose(closed_form(2, 1, 0), [0.5, 0.5, 1 / math.sqrt(2)])
    assert np.allclose(closed_form(2, 1, 1), [0.5, 0.5, -1 / math.sqrt(2)])


def test_recording_oracle_trivial_labels_unchanged():
    lay = layout(n=2, d=3, W=2)
    for i, p in [(0, 0), (0, 2), (1, 0), (2, 0)]:
        s = basis_state(lay, i, p, 1, (BOT, 2))
        assert apply_recording_oracle(s).distance(s) < 1e-12


# -- circuits -------------------------------------------------------------------------

def test_circuit_rejects_non_unitary():
    lay = layout(n=1, d=2, W=1)
    with pytest.raises(NotUnitaryError):
        QueryCircuit(lay, [np.ones((4, 4))])
    with pytest.raises(QsimError):
        QueryCircuit(lay, [np.eye(3)])


def test_json_round_trip():
    rng = np.random.default_rng(4)
    lay = layout(n=1, d=2, W=2)
    c = random_circuit(lay, 2, rng, MatVecProblem(FieldMatrix([[1]], 2)), {1: [(0, 1)]})
    c2 = QueryCircuit.from_json(c.to_json())
    assert c2.T == 2 and c2.output_map == {1: [(0, 1)]}
    assert all(np.allclose(a, b) for a, b in zip(c.unitaries, c2.unitaries))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.sampled_from([2, 3]),
       st.integers(1, 3), st.integers(1, 2))
def test_recording_equivalence_and_sparsity(seed, n, d, T, W):
    lay = layout(n=n, d=d, W=W)
    circ = random_circuit(lay, T, np.random.default_rng(seed))
    trace = trace_recording(circ)
    assert trace.residual <= 1e-9
    assert all(s <= t for t, s in enumerate(trace.support))


def test_zero_query_support_is_empty():
    lay = layout(n=3, d=2, W=2)
    c = random_circuit(lay, 0, np.random.default_rng(0))
    assert max_nonbot_support(run_circuit(c)) == 0
    assert check_recording_equivalence(c) < 1e-12


def test_norm_preserved():
    lay = layout(n=2, d=3, W=2)
    c = random_circuit(lay, 3, np.random.default_rng(9))
    assert math.isclose(run_circuit(c).norm(), 1.0, abs_tol=1e-10)


# -- success probability -------------------------------------------------------------

@pytest.mark.parametrize("d,k", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_guess_circuit_success_is_exact(d, k):
    A = FieldMatrix(np.eye(2, dtype=int), d)
    lay = layout(n=2, d=d, W=2)
    c = guess_circuit(lay, [(r, 1 % d) for r in range(k)], MatVecProblem(A))
    state = run_circuit(c, "standard")
    rep = success_report(state, c, k)
    assert math.isclose(rep.probability, d ** (-k), abs_tol=1e-12)
    # brute force over all inputs
    hits = sum(all(x[r] == 1 % d for r in range(k)) for x in itertools.product(range(d), repeat=2))
    assert math.isclose(rep.probability, hits / d**2, abs_tol=1e-12)
    assert 0 in rep.short_claims


def test_success_zero_outputs_is_one():
    lay = layout(n=1, d=2, W=2)
    c = guess_circuit(lay, [], MatVecProblem(FieldMatrix([[1]], 2)))
    assert math.isclose(success_report(run_circuit(c, "standard"), c, 0).probability, 1.0)


# -- Grover ---------------------------------------------------------------------------

def test_grover_exact_iterations():
    assert grover_exact_iterations(4, 1) == 1
    assert grover_exact_iterations(4, 0) == 0
    assert grover_exact_iterations(1, 1) == 0


@pytest.mark.parametrize("n_bits", [2, 3, 4])
def test_grover_or_never_false_positive(n_bits):
    c = grover_or_circuit(n_bits, grover_exact_iterations(n_bits, 1))
    dist = grover_outcome_distribution(c, [0] * n_bits)
    assert sum(pr for w, pr in dist.items() if w % 2 == 1) < 1e-12


def test_grover_single_marked_of_four_is_exact():
    c = grover_or_circuit(4, 1)
    for marked in range(4):
        x = [0] * 4
        x[marked] = 1
        dist = grover_outcome_distribution(c, x)
        assert math.isclose(dist.get(2 * (marked + 1) + 1, 0.0), 1.0, abs_tol=1e-12)


def test_grover_circuit_is_query_circuit():
    c = grover_or_circuit(3, 1)
    assert c.T == 2
    assert check_recording_equivalence(c) < 1e-9


@pytest.mark.parametrize("N,m,J", [(4, 1, 1), (4, 2, 1), (4, 3, 1), (4, 4, 0), (8, 1, 2), (1, 1, 0)])
def test_exact_schedule_frozen(N, m, J):
    it, beta = grover_exact_schedule(N, m)
    assert it == J
    # the lowered angle satisfies (2J + 1) theta' = pi/2
    theta = math.asin(math.sqrt(m / N) * math.sin(beta))
    assert math.isclose((2 * J + 1) * theta, math.pi / 2, abs_tol=1e-12)


@pytest.mark.parametrize("n_bits", [2, 3, 4, 5])
def test_exact_schedule_succeeds_on_every_input(n_bits):
    for x in itertools.product((0, 1), repeat=n_bits):
        it, beta = grover_exact_schedule(n_bits, sum(x))
        dist = grover_outcome_distribution(grover_or_circuit(n_bits, it, beta=beta), list(x))
        p_one = sum(pr for w, pr in dist.items() if w % 2)
        assert math.isclose(p_one, float(any(x)), abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 3), st.floats(0.1, math.pi / 2), st.data())
def test_grover_or_no_false_positive_any_schedule(n_bits, it, beta, data):
    cand = data.draw(st.lists(st.integers(0, n_bits - 1), min_size=1, unique=True))
    c = grover_or_circuit(n_bits, it, candidates=cand, beta=beta)
    dist = grover_outcome_distribution(c, [0] * n_bits)
    assert sum(pr for w, pr in dist.items() if w % 2) < 1e-12

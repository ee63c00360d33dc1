import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdiqkd import protocol as pr
from sdiqkd import purify as pu
from sdiqkd import qmat
from sdiqkd.errors import ZeroSuccessProbability
from sdiqkd.states import (
    BellDiagonal, TwoQubitState, as_bell_diagonal, bell_state, fidelity_phi_plus, is_bell_diagonal, werner,
)


def _bell_diagonal_step(w):
    # parity check on Bell-diagonal pairs: phi+/phi- and psi+/psi- pairs survive
    a, b, c, d = w
    n = (a + b) ** 2 + (c + d) ** 2
    return np.array([a * a + b * b, 2 * a * b, c * c + d * d, 2 * c * d]) / n, n


def _weights():
    return st.lists(st.floats(0.01, 1), min_size=4, max_size=4).map(lambda v: tuple(np.array(v) / sum(v)))


@given(st.floats(0, 1))
def test_recurrence_matches_circuit_on_werner(f):
    out, p = pu.bbpssw_exact(werner(f))
    f_rec, p_rec = pu.bbpssw_recurrence(f)
    assert fidelity_phi_plus(out) == pytest.approx(f_rec, abs=1e-10)
    assert p == pytest.approx(p_rec, abs=1e-10)


@given(_weights())
def test_circuit_on_bell_diagonal_input(w):
    out, p = pu.bbpssw_exact(BellDiagonal(w).to_state())
    expected, n = _bell_diagonal_step(w)
    assert p == pytest.approx(n, abs=1e-12)
    assert np.allclose(as_bell_diagonal(out).weights, expected, atol=1e-12)


def test_recurrence_fixed_points():
    assert pu.bbpssw_recurrence(1.0) == (1.0, 1.0)
    assert pu.bbpssw_recurrence(0.5)[0] == 0.5
    up, down = 0.55, 0.45
    for _ in range(40):
        up, down = pu.bbpssw_recurrence(up)[0], pu.bbpssw_recurrence(down)[0]
    assert up > 0.9999
    assert down < 0.3
    with pytest.raises(ValueError):
        pu.bbpssw_recurrence(1.2)


def test_bilateral_cnot_is_a_permutation():
    u = pu.BILATERAL_CNOT
    assert np.allclose(u @ u.T, np.eye(16))
    assert np.allclose(u @ u, np.eye(16))


def test_zero_success_probability_raises(monkeypatch):
    monkeypatch.setattr(pu, "KEEP", np.zeros((16, 16), dtype=complex))
    with pytest.raises(ZeroSuccessProbability):
        pu.bbpssw_exact(bell_state())


@given(st.integers(0, 10_000))
def test_pauli_twirl_properties(seed):
    s = TwoQubitState(qmat.random_density_matrix(4, np.random.default_rng(seed)))
    t = pu.pauli_twirl(s)
    assert is_bell_diagonal(t)
    assert fidelity_phi_plus(t) == pytest.approx(fidelity_phi_plus(s), abs=1e-12)
    assert pu.pauli_twirl(t).allclose(t)


@given(_weights())
def test_cyclic_rotation_permutes_error_weights(w):
    r = as_bell_diagonal(pu.rotate(BellDiagonal(w).to_state())).weights
    assert np.allclose(r, (w[0], w[3], w[1], w[2]), atol=1e-12)
    back = pu.rotate(BellDiagonal(w).to_state(), 3)
    assert np.allclose(as_bell_diagonal(back).weights, w, atol=1e-12)


@given(_weights())
def test_werner_twirl_gives_werner_form(w):
    r = as_bell_diagonal(pu.werner_twirl(BellDiagonal(w).to_state())).weights
    rest = (1 - w[0]) / 3
    assert np.allclose(r, (w[0], rest, rest, rest), atol=1e-12)


@pytest.mark.parametrize("policy", list(pu.RoundPolicy))
def test_iterate_bookkeeping(policy):
    trace = pu.purify_iterate(werner(0.7), 6, policy=policy, security=pr.SecuritySettings(0.95))
    assert [r.n for r in trace.rounds] == list(range(7))
    assert trace.rounds[0].cumulative_yield == 1.0
    for r in trace.rounds:
        assert r.cumulative_yield <= 2.0 ** -r.n + 1e-15
        assert r.effective_rate == pytest.approx(max(r.key_rate, 0) * r.cumulative_yield)
    ps = [r.success_prob for r in trace.rounds[1:]]
    assert np.prod(ps) / 2**6 == pytest.approx(trace.rounds[-1].cumulative_yield)


def test_werner_policy_follows_recurrence():
    trace = pu.purify_iterate(werner(0.7), 5, policy="werner")
    f = 0.7
    for r in trace.rounds[1:]:
        f, p = pu.bbpssw_recurrence(f)
        assert r.fidelity == pytest.approx(f, abs=1e-10)
        assert r.success_prob == pytest.approx(p, abs=1e-10)


def test_cyclic_policy_purifies_dephasing_noise():
    # pure phase errors: without the rotation the parity check cannot see them
    s = BellDiagonal((0.75, 0.25, 0.0, 0.0)).to_state()
    pauli = pu.purify_iterate(s, 4, policy="pauli").fidelities
    cyclic = pu.purify_iterate(s, 4, policy="cyclic").fidelities
    assert cyclic[-1] > 0.95
    assert pauli[-1] < cyclic[-1]


def test_below_half_diverges():
    trace = pu.purify_iterate(werner(0.45), 4, policy="werner")
    assert trace.diverged
    assert trace.fidelities[-1] < 0.45


def test_no_twirl_on_bell_diagonal_state():
    s = BellDiagonal((0.8, 0.1, 0.05, 0.05)).to_state()
    a = pu.purify_iterate(s, 3, twirl_each_round=False)
    b = pu.purify_iterate(s, 3, twirl_each_round=True)
    assert np.allclose(a.fidelities, b.fidelities, atol=1e-12)


def test_round_limit():
    with pytest.raises(ValueError):
        pu.purify_iterate(werner(0.8), 13)


def test_trace_serialisation_roundtrip():
    trace = pu.purify_iterate(werner(0.8), 4, security=pr.SecuritySettings(0.9))
    assert pu.PurificationTrace.from_json(trace.to_json()).rounds == trace.rounds
    assert pu.PurificationTrace.from_csv(trace.to_csv()).rounds == trace.rounds
    assert trace.to_csv().splitlines()[0] == ",".join(pu.CSV_COLUMNS)


def test_effective_rate_curve_earliest_argmax():
    trace = pu.purify_iterate(bell_state(), 3)
    n, curve = pu.effective_rate_curve(trace)
    assert n == 0
    assert curve == [1.0, 0.5, 0.25, 0.125]
    with pytest.raises(ValueError):
        pu.effective_rate_curve(pu.PurificationTrace([]))

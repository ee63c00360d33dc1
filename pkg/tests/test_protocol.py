import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdiqkd import channels as ch
from sdiqkd import protocol as pr
from sdiqkd import qmat
from sdiqkd.errors import NeverSecure
from sdiqkd.states import TwoQubitState, bell_state, psi_theta


def _h2(x):
    return 0.0 if x in (0.0, 1.0) else -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _phi_plus_rate(eta):
    # assign_zero: S2 = eta, H(A|B) = 1 - eta (no-click rounds leave A uniform)
    s = eta
    bound = 1 - _h2((1 + math.sqrt(2 * s * s - 1)) / 2) if s > 1 / math.sqrt(2) else 0.0
    return bound - (1 - eta)


def _eigprojectors(op):
    w, v = np.linalg.eigh(op)
    order = np.argsort(-w)
    return [np.outer(v[:, i], v[:, i].conj()) for i in order]


def _naive_prob(rho, eta, a, b, x, y):
    obs = {1: qmat.Z, 2: qmat.X}
    pa = _eigprojectors(obs[x])[a]
    mb = eta * _eigprojectors(obs[y])[b] if b < 2 else (1 - eta) * qmat.I2
    return float(np.real(np.trace(np.kron(pa, mb) @ rho)))


def test_statistics_match_direct_trace(rng):
    for eta in (1.0, 0.83, 0.2):
        s = TwoQubitState(qmat.random_density_matrix(4, rng))
        t = pr.statistics(s, pr.MeasurementModel(eta))
        for x in (1, 2):
            for y in (1, 2):
                for a in (0, 1):
                    for b in (0, 1, 2):
                        assert t.p(a, b, x, y) == pytest.approx(_naive_prob(s.rho, eta, a, b, x, y), abs=1e-12)


@given(st.floats(0, 1), st.integers(0, 10_000))
def test_no_signaling_and_no_click_mass(eta, seed):
    s = TwoQubitState(qmat.random_density_matrix(4, np.random.default_rng(seed)))
    t = pr.statistics(s, pr.MeasurementModel(eta))
    for x in (1, 2):
        assert np.allclose(t.alice_marginal(x, 1), t.alice_marginal(x, 2), atol=1e-10)
        for y in (1, 2):
            assert abs(t.block(x, y).sum() - 1) <= 1e-12
            assert t.bob_marginal(x, y)[pr.NO_CLICK] == 1 - eta


def test_measurement_model_validation():
    with pytest.raises(ValueError):
        pr.MeasurementModel(1.2)


def test_povm_sums_to_identity():
    m = pr.MeasurementModel(0.7)
    for y in (1, 2):
        assert np.allclose(sum(m.bob(y)), qmat.I2)


def test_ideal_key_rate_is_exactly_one():
    r = pr.key_rate(bell_state(), pr.MeasurementModel(1.0))
    assert r.key_rate == 1.0
    assert r.s2 == 1.0
    assert r.h_ab == 0.0
    assert r.secure


@pytest.mark.parametrize("eta", [0.75, 0.8, 0.9, 0.95, 1.0])
def test_phi_plus_rate_closed_form(eta):
    r = pr.key_rate(bell_state(), pr.MeasurementModel(eta))
    assert r.s2 == pytest.approx(eta, abs=1e-12)
    assert r.h_ab == pytest.approx(1 - eta, abs=1e-12)
    assert r.key_rate == pytest.approx(_phi_plus_rate(eta), abs=1e-12)


def test_phi_plus_rate_at_eta_0_9():
    assert pr.key_rate(bell_state(), pr.MeasurementModel(0.9)).key_rate == pytest.approx(0.4113, abs=2e-3)


@given(st.floats(0, 1), st.floats(0.5, 1))
def test_depolarized_s2_scales_with_eta(q, eta):
    s = pr.noisy_state("depolarizing", q)
    t = pr.statistics(s, pr.MeasurementModel(eta))
    assert pr.steering_s2(t) == pytest.approx(eta * (1 - q), abs=1e-12)
    # post-selection hides the detection loss
    assert pr.steering_s2(t, "discard") == pytest.approx(1 - q, abs=1e-12)


def test_discard_is_never_secure():
    r = pr.key_rate(bell_state(), pr.MeasurementModel(0.6), binning="discard")
    assert r.key_rate > 0
    assert not r.secure


def test_bound_edges():
    assert pr.h_a_given_e_bound(1.0) == 1.0
    assert pr.h_a_given_e_bound(pr.STEERING_BOUND) == 0.0
    assert pr.h_a_given_e_bound(0.3) == 0.0
    xs = np.linspace(0.71, 1.0, 50)
    vals = [pr.h_a_given_e_bound(x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_entropies():
    assert pr.shannon([0.5, 0.5]) == pytest.approx(1.0)
    assert pr.shannon([1.0, 0.0]) == 0.0
    assert pr.binary_entropy(0.11) == pytest.approx(_h2(0.11))


@pytest.mark.parametrize("kind", ch.NOISE_KINDS)
def test_clamped_rate_monotone_in_noise(kind):
    lo, hi = ch.PARAM_RANGE[kind]
    m = pr.MeasurementModel(1.0)
    rates = [pr.key_rate(pr.noisy_state(kind, x), m).key_rate_clamped for x in np.linspace(lo, hi, 50)]
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))


@pytest.mark.parametrize("kind", [ch.ChannelKind.DEPHASING, ch.ChannelKind.DEPOLARIZING])
def test_raw_rate_monotone_in_noise(kind):
    lo, hi = ch.PARAM_RANGE[kind]
    m = pr.MeasurementModel(0.95)
    rates = [pr.key_rate(pr.noisy_state(kind, x), m).key_rate for x in np.linspace(lo, hi, 50)]
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))


@pytest.mark.parametrize("kind,param", [("dephasing", 0.1), ("depolarizing", 0.1), ("amplitude_damping", 0.2)])
def test_rate_nondecreasing_in_eta(kind, param):
    s = pr.noisy_state(kind, param)
    rates = [pr.key_rate(s, pr.MeasurementModel(e)).key_rate for e in np.linspace(0.0, 1.0, 50)]
    assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))


def test_report_dict_roundtrip():
    r = pr.key_rate(pr.noisy_state("depolarizing", 0.1), pr.MeasurementModel(0.95))
    assert pr.KeyRateReport.from_dict(r.to_dict()) == r


def test_bisect_boundary():
    root = pr.bisect_boundary(lambda x: x < math.pi / 4, 0.0, 2.0, 1e-6)
    assert root == pytest.approx(math.pi / 4, abs=1e-6)
    down = pr.bisect_boundary(lambda x: x > 0.3, 1.0, 0.0, 1e-6)
    assert down == pytest.approx(0.3, abs=1e-6)
    with pytest.raises(ValueError):
        pr.bisect_boundary(lambda x: False, 0.0, 1.0)


def test_min_efficiency_phi_plus():
    etas = np.linspace(0.7, 1.0, 3001)
    rates = np.array([_phi_plus_rate(e) for e in etas])
    coarse = etas[np.argmax(rates > 0)]
    eta = pr.min_efficiency(bell_state(), tol=1e-6)
    assert eta == pytest.approx(coarse, abs=1e-4)
    assert _phi_plus_rate(eta + 1e-5) > 0 > _phi_plus_rate(eta - 1e-5)


def test_min_efficiency_never_secure():
    with pytest.raises(NeverSecure):
        pr.min_efficiency(pr.noisy_state("depolarizing", 0.5))


def test_critical_noise_steering_roots():
    dep = pr.critical_noise("depolarizing")
    assert dep.steering_critical == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-4)
    u = (-1 + math.sqrt(1 + 4 * math.sqrt(2))) / 2
    ad = pr.critical_noise("amplitude_damping")
    assert ad.steering_critical == pytest.approx(1 - u * u, abs=1e-4)
    assert dep.key_rate_critical < dep.steering_critical


def test_critical_noise_never_secure_at_low_eta():
    with pytest.raises(NeverSecure):
        pr.critical_noise("dephasing", eta_b=0.5)


def test_theta_min_violates_bound_just_above():
    t = pr.theta_min()
    assert 0.5 * (1 + math.sin(2 * t)) == pytest.approx(pr.STEERING_BOUND, abs=1e-15)
    m = pr.MeasurementModel(1.0)
    assert pr.steering_s2(pr.statistics(psi_theta(t + 1e-6), m)) > pr.STEERING_BOUND
    assert pr.steering_s2(pr.statistics(psi_theta(t - 1e-6), m)) < pr.STEERING_BOUND


def test_theta_min_defining_equation_both_ends():
    m = pr.MeasurementModel(1.0)
    for t in (pr.theta_min(), math.pi / 2 - pr.theta_min()):
        assert pr.steering_s2(pr.statistics(psi_theta(t), m)) == pytest.approx(pr.STEERING_BOUND, abs=1e-9)

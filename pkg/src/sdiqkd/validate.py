"""Invariant checks run by ``sdiqkd validate``.

Each check returns ``(name, passed, detail)``; nothing here raises on a
failed invariant.
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from . import channels as ch
from . import protocol as pr
from . import purify as pu
from . import qmat
from .states import (
    TwoQubitState, bell_state, concurrence, fidelity_phi_plus, psi_theta, werner,
)

Check = Tuple[str, bool, str]


def _random_states(n: int, seed: int) -> List[TwoQubitState]:
    rng = np.random.default_rng(seed)
    return [TwoQubitState(qmat.random_density_matrix(4, rng, rank=int(rng.integers(1, 5)))) for _ in range(n)]


def check_cptp() -> Check:
    worst_complete, worst_trace, worst_eig = 0.0, 0.0, 0.0
    states = _random_states(10, 1)
    for kind in ch.NOISE_KINDS:
        lo, hi = ch.PARAM_RANGE[kind]
        for x in np.linspace(lo, hi, 21):
            chan = ch.make_channel(kind, x)
            worst_complete = max(worst_complete, ch.completeness_error(chan.kraus_ops))
            for s in states:
                out = ch.apply_one_sided(chan, s).rho
                worst_trace = max(worst_trace, abs(np.trace(out) - 1))
                worst_eig = min(worst_eig, np.linalg.eigvalsh(out).min())
    ok = worst_complete <= 1e-12 and worst_trace <= 1e-12 and worst_eig >= -1e-10
    return "cptp", ok, f"completeness {worst_complete:.1e}, trace {worst_trace:.1e}, min eig {worst_eig:.1e}"


def check_no_signaling() -> Check:
    worst_sig, worst_norm, worst_noclick = 0.0, 0.0, 0.0
    for s in _random_states(20, 2):
        for eta in (0.0, 0.37, 0.5, 0.9, 1.0):
            t = pr.statistics(s, pr.MeasurementModel(eta))
            for x in (1, 2):
                worst_sig = max(worst_sig, np.max(np.abs(t.alice_marginal(x, 1) - t.alice_marginal(x, 2))))
                for y in (1, 2):
                    worst_norm = max(worst_norm, abs(t.block(x, y).sum() - 1))
                    worst_noclick = max(worst_noclick, abs(t.bob_marginal(x, y)[pr.NO_CLICK] - (1 - eta)))
    ok = worst_sig <= 1e-10 and worst_norm <= 1e-12 and worst_noclick <= 1e-15
    return "no_signaling", ok, f"signaling {worst_sig:.1e}, normalisation {worst_norm:.1e}, no-click {worst_noclick:.1e}"


def check_recurrence_oracle() -> Check:
    rng = np.random.default_rng(3)
    worst = 0.0
    for f in rng.uniform(0.0, 1.0, 100):
        out, p = pu.bbpssw_exact(werner(f))
        f_rec, p_rec = pu.bbpssw_recurrence(f)
        worst = max(worst, abs(fidelity_phi_plus(out) - f_rec), abs(p - p_rec))
    return "recurrence_vs_circuit", worst <= 1e-10, f"max deviation {worst:.1e}"


def check_fixed_points() -> Check:
    f1, p1 = pu.bbpssw_recurrence(1.0)
    fh, _ = pu.bbpssw_recurrence(0.5)
    up, down = 0.55, 0.45
    for _ in range(30):
        up = pu.bbpssw_recurrence(up)[0]
        down = pu.bbpssw_recurrence(down)[0]
    ok = abs(f1 - 1) < 1e-15 and abs(p1 - 1) < 1e-15 and abs(fh - 0.5) < 1e-15 and up > 0.999 and down < 0.45
    return "fixed_points", ok, f"F(1)={f1}, F(1/2)={fh}, from 0.55 -> {up:.6f}, from 0.45 -> {down:.6f}"


def check_analytic_formulas() -> Check:
    m = pr.MeasurementModel(1.0)
    worst = 0.0

    def s2(state):
        return pr.steering_s2(pr.statistics(state, m))

    for q in np.linspace(0, 1, 21):
        s = pr.noisy_state("depolarizing", q)
        worst = max(worst, abs(s2(s) - (1 - q)), abs(concurrence(s) - max(0.0, 1 - 1.5 * q)))
    for g in np.linspace(0, 1, 21):
        s = pr.noisy_state("amplitude_damping", g)
        worst = max(worst, abs(s2(s) - 0.5 * (1 - g + math.sqrt(1 - g))), abs(concurrence(s) - math.sqrt(1 - g)))
    for p in np.linspace(0, 0.5, 21):
        s = pr.noisy_state("dephasing", p)
        worst = max(worst, abs(s2(s) - 0.5 * (1 + abs(1 - 2 * p))), abs(concurrence(s) - abs(1 - 2 * p)))
    for th in np.linspace(0, math.pi / 2, 21):
        s = psi_theta(th)
        worst = max(worst, abs(s2(s) - 0.5 * (1 + math.sin(2 * th))), abs(concurrence(s) - math.sin(2 * th)))
    return "analytic_formulas", worst <= 1e-9, f"max deviation {worst:.1e}"


def check_depolarizing_forms() -> Check:
    worst = 0.0
    for s in _random_states(5, 4):
        rho_a = s.reduced(0)
        for q in np.linspace(0, 1, 11):
            worst = max(worst, np.max(np.abs(ch.depolarizing(q).apply(rho_a) - ((1 - q) * rho_a + q * qmat.I2 / 2))))
    return "depolarizing_forms", worst <= 1e-12, f"max deviation {worst:.1e}"


def check_twirl() -> Check:
    worst = 0.0
    for s in _random_states(20, 5):
        t = pu.pauli_twirl(s)
        worst = max(worst, abs(fidelity_phi_plus(t) - fidelity_phi_plus(s)), np.max(np.abs(pu.pauli_twirl(t).rho - t.rho)))
    return "twirl", worst <= 1e-12, f"max deviation {worst:.1e}"


def check_ideal_rate() -> Check:
    r = pr.key_rate(bell_state(), pr.MeasurementModel(1.0))
    return "ideal_rate", r.key_rate == 1.0 and r.s2 == 1.0, f"r={r.key_rate!r}, s2={r.s2!r}"


CHECKS: List[Callable[[], Check]] = [
    check_cptp,
    check_no_signaling,
    check_recurrence_oracle,
    check_fixed_points,
    check_analytic_formulas,
    check_depolarizing_forms,
    check_twirl,
    check_ideal_rate,
]


def run_all() -> List[Check]:
    return [c() for c in CHECKS]

import math

import numpy as np
import pytest

from sdiqkd import channels as ch
from sdiqkd import experiments as ex
from sdiqkd import protocol as pr


def test_scenario_defaults_and_validation():
    sc = ex.Scenario()
    assert sc.noise_kind() == "identity"
    assert ex.evaluate(sc).key_rate == 1.0
    with pytest.raises(ValueError):
        ex.Scenario(theta=2.0)
    with pytest.raises(ValueError):
        ex.Scenario(eta_b=1.5)
    with pytest.raises(ValueError):
        ex.Scenario(channels=[{"kind": "dephasing", "param": 0.9}])
    with pytest.raises(ValueError):
        ex.Scenario(binning="fair")


def test_scenario_json_roundtrip():
    sc = ex.Scenario(
        theta=0.6,
        channels=[{"kind": "dephasing", "param": 0.05}, {"kind": "amplitude_damping", "length_km": 10, "lc_km": 24}],
        side="stationary",
        eta_b=0.93,
        rounds=3,
        round_policy="werner",
    )
    back = ex.Scenario.from_json(sc.to_json())
    assert back == sc
    assert back.to_json() == sc.to_json()
    assert sc.noise_kind() == "dephasing+amplitude_damping"
    assert sc.noise_param() is None
    assert set(sc.to_dict()["purification"]) == {"rounds", "twirl_each_round", "round_policy"}


def test_single_noise_matches_direct_evaluation():
    sc = ex.single_noise("depolarizing", 0.1, eta_b=0.97)
    direct = pr.key_rate(pr.noisy_state("depolarizing", 0.1), pr.MeasurementModel(0.97))
    assert ex.evaluate(sc) == direct


def test_sweep_csv_roundtrip_and_determinism():
    a = ex.sweep_noise("dephasing", step=0.05)
    b = ex.sweep_noise("dephasing", step=0.05)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == ",".join(ex.SWEEP_COLUMNS)
    back = ex.SweepResult.from_csv(a.to_csv())
    assert back.rows == a.rows
    assert ex.SweepResult.from_json(a.to_json()).rows == a.rows
    assert len(a.rows) == 11


def test_sweep_noise_annotations():
    res = ex.sweep_noise("depolarizing")
    ann = res.annotations
    assert ann["steering_zero"]["refined"] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-4)
    assert ann["esd"]["refined"] == pytest.approx(2 / 3, abs=1e-4)
    assert ann["key_rate_zero"]["direction"] == "falling"
    s = ann["key_rate_zero"]
    assert abs(s["sampled"] - s["refined"]) <= 0.01 + 1e-12
    assert abs(s["interpolated"] - s["refined"]) <= 0.01


def test_sweep_efficiency():
    sc = ex.single_noise("dephasing", 0.02)
    res = ex.sweep_efficiency(sc, n_points=25)
    etas = res.column("eta_b")
    assert etas[0] == 0.4 and etas[-1] == 1.0 and len(etas) == 25
    rates = res.column("key_rate")
    assert np.all(np.diff(rates) >= -1e-12)
    eta_min = pr.min_efficiency(sc.state())
    assert res.annotations["key_rate_zero"]["refined"] == pytest.approx(eta_min, abs=1e-4)
    assert res.annotations["key_rate_zero"]["direction"] == "rising"


def test_sweep_theta_peak_and_boundaries():
    res = ex.sweep_theta(n_points=50)
    assert res.annotations["argmax_refined"] == pytest.approx(math.pi / 4, abs=1e-6)
    rise, fall = res.annotations["key_rate_rise"], res.annotations["key_rate_fall"]
    assert rise["refined"] < math.pi / 4 < fall["refined"]
    # symmetric about pi/4
    assert rise["refined"] + fall["refined"] == pytest.approx(math.pi / 2, abs=2e-4)


def test_annotate_boundary_none_when_no_crossing():
    assert ex.annotate_boundary([0, 1, 2], [1, 2, 3], 0.0, lambda x: True) is None


def test_contour_grid_shape_and_flags():
    ls = [0.0, 10.0, 30.0, 60.0]
    res = ex.contour_grid("depolarizing", l_values=ls, max_round=3)
    assert len(res.rows) == len(ls) * 4
    assert res.to_csv().splitlines()[0] == ",".join(ex.CONTOUR_COLUMNS)
    by = {(r["l_km"], r["round"]): r for r in res.rows}
    # q = 1 - exp(-1.5) gives F < 1/2 at 60 km
    assert by[(60.0, 0)]["fidelity"] < 0.5
    assert by[(60.0, 2)]["diverged"] and not by[(60.0, 0)]["diverged"]
    assert by[(60.0, 2)]["fidelity"] == by[(60.0, 0)]["fidelity"]
    assert not by[(30.0, 3)]["diverged"]
    assert by[(30.0, 3)]["fidelity"] > by[(30.0, 0)]["fidelity"]
    assert len(res.annotations["positive_cells_per_round"]) == 4
    assert ex.SweepResult.from_csv(res.to_csv()).rows == res.rows


def test_zero_contour_interpolates():
    grid = ex.SweepResult(
        ex.CONTOUR_COLUMNS, {"round": [0]},
        [{"round": 0, "l_km": 0.0, "key_rate": 0.5}, {"round": 0, "l_km": 10.0, "key_rate": -0.5}],
    )
    assert ex.zero_contour(grid) == [5.0]


def test_threshold_table_structure():
    t = ex.threshold_table(tol=1e-3)
    assert set(t["channels"]) == {k.value for k in ch.NOISE_KINDS}
    dep = t["channels"]["depolarizing"]
    assert dep["sudden_death"] and dep["esd"] == pytest.approx(2 / 3, abs=1e-3)
    assert not t["channels"]["amplitude_damping"]["sudden_death"]
    implied = t["implied_noise"]["values"]
    assert implied["amplitude_damping"]["param"] == pytest.approx(1 - math.exp(-1.25))

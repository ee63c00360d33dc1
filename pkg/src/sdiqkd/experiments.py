"""Scenarios, parameter sweeps, threshold tables and (length, round) grids.

Every sweep is a deterministic function of its arguments and renders to CSV
with a fixed header; JSON carries the same rows plus the threshold
annotations.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import channels as ch
from . import protocol as pr
from . import purify as pu
from .states import TwoQubitState, concurrence, fidelity_phi_plus, psi_theta

SWEEP_COLUMNS = (
    "noise_kind", "param", "eta_b", "theta", "s2", "h_ab", "h_ae_bound", "key_rate", "concurrence", "secure",
)
CONTOUR_COLUMNS = (
    "noise_kind", "lc_km", "l_km", "round", "fidelity", "success_prob", "yield", "key_rate",
    "effective_rate", "diverged",
)

_STR_COLUMNS = {"noise_kind"}
_INT_COLUMNS = {"round"}
_BOOL_COLUMNS = {"secure", "diverged"}


@dataclass
class Scenario:
    theta: float = math.pi / 4
    channels: List[dict] = field(default_factory=list)
    side: str = ch.Side.TRAVELING.value
    eta_b: float = 1.0
    binning: str = pr.Binning.ASSIGN_ZERO.value
    bound_method: str = pr.BoundMethod.STEERING_ANALYTIC.value
    rounds: int = 0
    twirl_each_round: bool = True
    round_policy: str = pu.RoundPolicy.CYCLIC.value

    def __post_init__(self):
        if not 0 <= self.theta <= math.pi / 2 + 1e-15:
            raise ValueError(f"theta={self.theta} outside [0, pi/2]")
        self.side = ch.Side(self.side).value
        self.binning = pr.Binning(self.binning).value
        self.bound_method = pr.BoundMethod(self.bound_method).value
        self.round_policy = pu.RoundPolicy(self.round_policy).value
        pr.MeasurementModel(self.eta_b)
        self.channels = [dict(st) for st in self.channels]
        for st in self.channels:
            ch.make_channel(st["kind"], ch.stage_param(st))
        if not 0 <= self.rounds <= 12:
            raise ValueError("rounds must be in [0, 12]")

    @property
    def security(self) -> pr.SecuritySettings:
        return pr.SecuritySettings(self.eta_b, self.bound_method, self.binning)

    def channel(self) -> ch.KrausChannel:
        return ch.channel_from_spec({"stages": self.channels})

    def noise_kind(self) -> str:
        if not self.channels:
            return ch.ChannelKind.IDENTITY.value
        return "+".join(ch.ChannelKind(st["kind"]).value for st in self.channels)

    def noise_param(self) -> Optional[float]:
        if len(self.channels) != 1:
            return 0.0 if not self.channels else None
        return ch.stage_param(self.channels[0])

    def state(self) -> TwoQubitState:
        return ch.apply_one_sided(self.channel(), psi_theta(self.theta), self.side)

    def to_dict(self) -> dict:
        d = asdict(self)
        purification = {k: d.pop(k) for k in ("rounds", "twirl_each_round", "round_policy")}
        d["purification"] = purification
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        d.update(d.pop("purification", {}))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def single_noise(kind, param: float, **kw) -> Scenario:
    stages = [] if ch.ChannelKind(kind) is ch.ChannelKind.IDENTITY else [{"kind": ch.ChannelKind(kind).value, "param": float(param)}]
    return Scenario(channels=stages, **kw)


def evaluate(sc: Scenario) -> pr.KeyRateReport:
    return sc.security.evaluate(sc.state())


def purify(sc: Scenario) -> pu.PurificationTrace:
    return pu.purify_iterate(sc.state(), sc.rounds, sc.twirl_each_round, sc.security, sc.round_policy)


def sweep_row(sc: Scenario, report: pr.KeyRateReport) -> dict:
    return {
        "noise_kind": sc.noise_kind(),
        "param": sc.noise_param(),
        "eta_b": float(sc.eta_b),
        "theta": float(sc.theta),
        "s2": report.s2,
        "h_ab": report.h_ab,
        "h_ae_bound": report.h_ae_bound,
        "key_rate": report.key_rate,
        "concurrence": report.concurrence,
        "secure": report.secure,
    }


# -- results container ---------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(col: str, s: str):
    if col in _STR_COLUMNS:
        return s
    if s == "":
        return None
    if col in _BOOL_COLUMNS:
        return s == "true"
    if col in _INT_COLUMNS:
        return int(s)
    return float(s)


@dataclass
class SweepResult:
    columns: tuple
    axes: Dict[str, list]
    rows: List[dict]
    annotations: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, axes: Optional[Dict[str, list]] = None) -> "SweepResult":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        rows = [{c: _parse(c, v) for c, v in zip(header, line)} for line in reader]
        return cls(header, axes or {}, rows)

    def to_json(self) -> str:
        return json.dumps(
            {"columns": list(self.columns), "axes": self.axes, "rows": self.rows, "annotations": self.annotations},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        d = json.loads(text)
        return cls(tuple(d["columns"]), d["axes"], d["rows"], d.get("annotations", {}))


# -- threshold annotation -------------------------------------------------------------


def annotate_boundary(
    xs: Sequence[float],
    values: Sequence[float],
    level: float,
    pred: Callable[[float], bool],
    tol: float = 1e-4,
) -> Optional[dict]:
    """First place along ``xs`` where ``values > level`` changes truth value.

    Reports the first sample past the change (grid resolution), the linear
    interpolation of ``values`` to ``level`` between the bracketing samples, and
    a bisection of ``pred`` on that bracket down to ``tol``.
    """
    flags = [v > level for v in values]
    for i in range(len(xs) - 1):
        if flags[i] != flags[i + 1]:
            x0, x1, v0, v1 = xs[i], xs[i + 1], values[i], values[i + 1]
            interp = x0 + (level - v0) * (x1 - x0) / (v1 - v0) if v1 != v0 else x1
            good, bad = (x0, x1) if flags[i] else (x1, x0)
            return {
                "sampled": float(x1),
                "interpolated": float(interp),
                "refined": float(pr.bisect_boundary(pred, good, bad, tol)),
                "direction": "falling" if flags[i] else "rising",
            }
    return None


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def sweep_efficiency(sc: Scenario, n_points: int = 100, eta_range=(0.4, 1.0)) -> SweepResult:
    etas = np.linspace(eta_range[0], eta_range[1], n_points)
    state = sc.state()
    reports = [pr.key_rate(state, pr.MeasurementModel(float(e)), sc.bound_method, sc.binning) for e in etas]
    rows = [sweep_row(replace(sc, eta_b=float(e)), r) for e, r in zip(etas, reports)]

    def secure(e):
        return pr.key_rate(state, pr.MeasurementModel(e), sc.bound_method, sc.binning).key_rate > 0

    ann = {"key_rate_zero": annotate_boundary(etas, [r.key_rate for r in reports], 0.0, secure)}
    return SweepResult(SWEEP_COLUMNS, {"eta_b": etas.tolist()}, rows, ann)


def sweep_noise(
    kind,
    eta_b: float = 1.0,
    n_points: Optional[int] = None,
    step: float = 0.01,
    theta: float = math.pi / 4,
    binning=pr.Binning.ASSIGN_ZERO,
    method=pr.BoundMethod.STEERING_ANALYTIC,
    side=ch.Side.TRAVELING,
) -> SweepResult:
    kind = ch.ChannelKind(kind)
    lo, hi = ch.PARAM_RANGE[kind]
    xs = np.linspace(lo, hi, n_points) if n_points else _grid(lo, hi, step)
    m = pr.MeasurementModel(eta_b)

    def report(x):
        return pr.key_rate(pr.noisy_state(kind, x, theta, side), m, method, binning)

    reports = [report(float(x)) for x in xs]
    rows = [
        sweep_row(single_noise(kind, float(x), theta=theta, eta_b=eta_b, binning=pr.Binning(binning).value,
                               bound_method=pr.BoundMethod(method).value, side=ch.Side(side).value), r)
        for x, r in zip(xs, reports)
    ]
    ann = {
        "key_rate_zero": annotate_boundary(xs, [r.key_rate for r in reports], 0.0, lambda x: report(x).key_rate > 0),
        "steering_zero": annotate_boundary(
            xs, [r.s2 for r in reports], pr.STEERING_BOUND, lambda x: report(x).s2 > pr.STEERING_BOUND
        ),
        "esd": annotate_boundary(
            xs, [r.concurrence for r in reports], 1e-12, lambda x: report(x).concurrence > 1e-12
        ),
    }
    return SweepResult(SWEEP_COLUMNS, {"param": xs.tolist()}, rows, ann)


def sweep_theta(
    eta_b: float = 1.0,
    n_points: int = 100,
    binning=pr.Binning.ASSIGN_ZERO,
    method=pr.BoundMethod.STEERING_ANALYTIC,
) -> SweepResult:
    thetas = np.linspace(0.0, math.pi / 2, n_points)
    m = pr.MeasurementModel(eta_b)

    def report(t):
        return pr.key_rate(psi_theta(min(t, math.pi / 2)), m, method, binning)

    reports = [report(float(t)) for t in thetas]
    rates = [r.key_rate for r in reports]
    rows = [sweep_row(Scenario(theta=float(t), eta_b=eta_b, binning=pr.Binning(binning).value,
                               bound_method=pr.BoundMethod(method).value), r) for t, r in zip(thetas, reports)]

    def secure(t):
        return report(t).key_rate > 0

    i = int(np.argmax(rates))
    lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, len(thetas) - 1)]
    # golden-section refinement of the maximum
    g = (math.sqrt(5) - 1) / 2
    for _ in range(80):
        a, b = hi - g * (hi - lo), lo + g * (hi - lo)
        if report(a).key_rate >= report(b).key_rate:
            hi = b
        else:
            lo = a
    rising = annotate_boundary(thetas, rates, 0.0, secure)
    falling = None
    if rising is not None:
        j = int(np.searchsorted(thetas, rising["sampled"]))
        falling = annotate_boundary(thetas[j:], rates[j:], 0.0, secure)
    ann = {
        "argmax_sampled": float(thetas[i]),
        "argmax_refined": float(0.5 * (lo + hi)),
        "key_rate_rise": rising,
        "key_rate_fall": falling,
    }
    return SweepResult(SWEEP_COLUMNS, {"theta": thetas.tolist()}, rows, ann)


def contour_grid(
    kind,
    lc_km: Optional[float] = None,
    l_values: Sequence[float] = tuple(range(0, 61)),
    max_round: int = 10,
    eta_b: float = 0.9,
    binning=pr.Binning.ASSIGN_ZERO,
    method=pr.BoundMethod.STEERING_ANALYTIC,
    policy=pu.RoundPolicy.CYCLIC,
    side=ch.Side.TRAVELING,
) -> SweepResult:
    """Signed key rate over (fibre length, purification round).

    Lengths whose input fidelity is at most 1/2 cannot be purified; their
    cells repeat the unpurified rate and are flagged ``diverged``.
    """
    kind = ch.ChannelKind(kind)
    lc = ch.DEFAULT_LC_KM[kind] if lc_km is None else float(lc_km)
    security = pr.SecuritySettings(eta_b, pr.BoundMethod(method).value, pr.Binning(binning).value)
    rows = []
    for length in l_values:
        chan = ch.from_distance(kind, ch.DistanceModel(float(length), lc))
        state = ch.apply_one_sided(chan, psi_theta(math.pi / 4), side)
        trace = pu.purify_iterate(state, 0, True, security, policy)
        diverged = trace.diverged
        if not diverged:
            trace = pu.purify_iterate(state, max_round, True, security, policy)
        base = trace.rounds[0]
        for n in range(max_round + 1):
            rec = base if diverged else trace.rounds[n]
            rows.append({
                "noise_kind": kind.value,
                "lc_km": lc,
                "l_km": float(length),
                "round": n,
                "fidelity": rec.fidelity,
                "success_prob": rec.success_prob,
                "yield": rec.cumulative_yield,
                "key_rate": rec.key_rate,
                "effective_rate": rec.effective_rate,
                "diverged": bool(diverged and n > 0),
            })
    axes = {"l_km": [float(x) for x in l_values], "round": list(range(max_round + 1))}
    res = SweepResult(CONTOUR_COLUMNS, axes, rows)
    res.annotations = {"zero_contour": zero_contour(res), "positive_cells_per_round": positive_cells_per_round(res)}
    return res


def positive_cells_per_round(grid: SweepResult) -> List[int]:
    rounds = grid.axes["round"]
    return [sum(1 for r in grid.rows if r["round"] == n and r["key_rate"] > 0) for n in rounds]


def zero_contour(grid: SweepResult) -> List[Optional[float]]:
    """Per round, the length where the key rate first turns nonpositive (linear interpolation)."""
    out = []
    for n in grid.axes["round"]:
        cells = [r for r in grid.rows if r["round"] == n]
        ls = [r["l_km"] for r in cells]
        rs = [r["key_rate"] for r in cells]
        hit = None
        for i in range(len(ls) - 1):
            if rs[i] > 0 >= rs[i + 1]:
                hit = ls[i] + (0 - rs[i]) * (ls[i + 1] - ls[i]) / (rs[i + 1] - rs[i])
                break
        out.append(hit)
    return out


def _esd(kind: ch.ChannelKind, tol: float) -> dict:
    hi = ch.PARAM_RANGE[kind][1]

    def entangled(x):
        return concurrence(pr.noisy_state(kind, x)) > 1e-12

    if entangled(hi):
        return {"value": None, "sudden_death": False}
    x = pr.bisect_boundary(entangled, 0.0, hi, tol)
    return {"value": x, "sudden_death": x < hi - tol}


def threshold_table(eta_b: float = 1.0, tol: float = 1e-4, length_km: float = 30.0) -> dict:
    """Steering, key-rate and entanglement thresholds per channel, plus distance-implied noise."""
    table = {}
    for kind in ch.NOISE_KINDS:
        crit = pr.critical_noise(kind, eta_b, tol=tol)
        esd = _esd(kind, tol)
        residual = None
        if crit.key_rate_critical is not None:
            residual = concurrence(pr.noisy_state(kind, crit.key_rate_critical))
        try:
            eta_min = pr.min_efficiency(pr.noisy_state(kind, 0.1), tol=tol)
        except pr.NeverSecure:
            eta_min = None
        table[kind.value] = {
            "steering_critical": crit.steering_critical,
            "key_rate_critical": crit.key_rate_critical,
            "esd": esd["value"],
            "sudden_death": esd["sudden_death"],
            "residual_concurrence": residual,
            "eta_min_at_0.1": eta_min,
        }
    implied = {
        kind.value: {
            "lc_km": ch.DEFAULT_LC_KM[kind],
            "param": ch.noise_from_distance(kind, ch.DistanceModel(length_km, ch.DEFAULT_LC_KM[kind])),
            "fidelity": fidelity_phi_plus(
                ch.apply_one_sided(
                    ch.from_distance(kind, ch.DistanceModel(length_km, ch.DEFAULT_LC_KM[kind])), psi_theta(math.pi / 4)
                )
            ),
        }
        for kind in ch.NOISE_KINDS
    }
    return {"eta_b": eta_b, "channels": table, "implied_noise": {"length_km": length_km, "values": implied}}

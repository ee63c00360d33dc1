"""Measurement statistics, steering parameter, entropies and key-rate bound.

Alice (trusted) measures sigma_z for x=1 and sigma_x for x=2. Bob's untrusted
device nominally measures the same bases but fires with efficiency eta_b; the
no-click outcome is kept as a third outcome and never discarded when a rate
is claimed secure.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import channels as ch
from . import qmat
from .errors import NeverSecure
from .states import TwoQubitState, concurrence, psi_theta

NO_CLICK = 2
STEERING_BOUND = 1 / math.sqrt(2)

# written out entrywise so that ideal statistics come out exact
ALICE_PROJECTORS = {
    1: (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)),
    2: (0.5 * np.array([[1, 1], [1, 1]], dtype=complex), 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)),
}


class Binning(str, Enum):
    ASSIGN_ZERO = "assign_zero"
    DISCARD = "discard"


class BoundMethod(str, Enum):
    STEERING_ANALYTIC = "steering_analytic"


@dataclass(frozen=True)
class MeasurementModel:
    eta_b: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta_b <= 1.0:
            raise ValueError(f"eta_b={self.eta_b} outside [0, 1]")

    def alice(self, x: int) -> tuple:
        return ALICE_PROJECTORS[x]

    def bob(self, y: int) -> tuple:
        """POVM (M_0, M_1, M_noclick) for Bob's setting y."""
        p0, p1 = ALICE_PROJECTORS[y]
        e = self.eta_b
        return (e * p0, e * p1, (1 - e) * qmat.I2)


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """p(a, b | x, y) stored as probs[x-1, y-1, a, b]; b = 2 is the no-click outcome."""

    probs: np.ndarray
    eta_b: float

    def p(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.probs[x - 1, y - 1, a, b])

    def block(self, x: int, y: int) -> np.ndarray:
        return self.probs[x - 1, y - 1]

    def alice_marginal(self, x: int, y: int) -> np.ndarray:
        return self.block(x, y).sum(axis=1)

    def bob_marginal(self, x: int, y: int) -> np.ndarray:
        return self.block(x, y).sum(axis=0)


@lru_cache(maxsize=512)
def _joint_operators(m: MeasurementModel) -> np.ndarray:
    ops = np.zeros((2, 2, 2, 3, 4, 4), dtype=complex)
    for x in (1, 2):
        for y in (1, 2):
            for a, pa in enumerate(m.alice(x)):
                for b, mb in enumerate(m.bob(y)):
                    ops[x - 1, y - 1, a, b] = qmat.tensor(pa, mb)
    ops.setflags(write=False)
    return ops


def statistics(s: TwoQubitState, m: MeasurementModel) -> ProbabilityTable:
    """p(a, b | x, y) = Tr[(M_a^x (x) M_b^y) rho] for all settings and outcomes."""
    probs = np.einsum("xyabij,ji->xyab", _joint_operators(m), s.rho).real
    probs[np.abs(probs) < 1e-14] = 0.0
    probs = np.clip(probs, 0.0, None)
    # no-click column is (1 - eta) times Alice's marginal; pin its total to 1 - eta
    for x in (1, 2):
        pa = probs[x - 1, 0].sum(axis=1)
        for y in (1, 2):
            if m.eta_b < 1:
                p0 = (1 - m.eta_b) * pa[0] / pa.sum()
                probs[x - 1, y - 1, :, NO_CLICK] = (p0, (1 - m.eta_b) - p0)
            else:
                probs[x - 1, y - 1, :, NO_CLICK] = 0.0
    probs.setflags(write=False)
    return ProbabilityTable(probs, m.eta_b)


def correlator(t: ProbabilityTable, x: int, y: int, binning=Binning.ASSIGN_ZERO) -> float:
    """<A_x B_y> with outcome 0 -> +1 and 1 -> -1."""
    binning = Binning(binning)
    blk = t.block(x, y)
    sign = np.array([1.0, -1.0])
    detected = float(sign @ blk[:, :2] @ sign)
    if binning is Binning.ASSIGN_ZERO:
        return detected + float(sign @ blk[:, NO_CLICK])
    mass = blk[:, :2].sum()
    return detected / mass if mass > 0 else 0.0


def steering_s2(t: ProbabilityTable, binning=Binning.ASSIGN_ZERO) -> float:
    return 0.5 * (correlator(t, 1, 1, binning) + correlator(t, 2, 2, binning))


def shannon(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def h_a_given_b(t: ProbabilityTable, binning=Binning.ASSIGN_ZERO) -> float:
    """H(A_1 | B_1) over b in {0, 1, no-click}.

    With ``discard`` the no-click column is dropped and the rest renormalised
    (post-selected, diagnostic only).
    """
    blk = np.array(t.block(1, 1))
    if Binning(binning) is Binning.DISCARD:
        blk = blk[:, :2]
        if blk.sum() <= 0:
            return 0.0
        blk = blk / blk.sum()
    h = 0.0
    for b in range(blk.shape[1]):
        pb = blk[:, b].sum()
        for a in range(2):
            pab = blk[a, b]
            if pab > 0:
                h -= pab * math.log2(pab / pb)
    return max(h, 0.0)


def h_a_given_e_bound(s2: float, method=BoundMethod.STEERING_ANALYTIC) -> float:
    """Lower bound on H(A_1 | E) from the steering parameter.

    Zero up to the local-hidden-state bound 1/sqrt(2), then
    1 - h((1 + sqrt(2 s2^2 - 1)) / 2), reaching 1 at s2 = 1.
    """
    BoundMethod(method)
    s2 = min(max(float(s2), 0.0), 1.0)
    if s2 <= STEERING_BOUND:
        return 0.0
    return max(0.0, 1.0 - binary_entropy((1 + math.sqrt(max(2 * s2 * s2 - 1, 0.0))) / 2))


@dataclass(frozen=True)
class KeyRateReport:
    s2: float
    h_ab: float
    h_ae_bound: float
    key_rate: float
    concurrence: float
    bound_method: str = BoundMethod.STEERING_ANALYTIC.value
    binning: str = Binning.ASSIGN_ZERO.value

    @property
    def secure(self) -> bool:
        return self.key_rate > 0 and self.binning == Binning.ASSIGN_ZERO.value

    @property
    def key_rate_clamped(self) -> float:
        return max(self.key_rate, 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["key_rate_clamped"] = self.key_rate_clamped
        d["secure"] = self.secure
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KeyRateReport":
        fields = ("s2", "h_ab", "h_ae_bound", "key_rate", "concurrence")
        return cls(
            *(float(d[k]) for k in fields),
            bound_method=str(d.get("bound_method", BoundMethod.STEERING_ANALYTIC.value)),
            binning=str(d.get("binning", Binning.ASSIGN_ZERO.value)),
        )


def key_rate(
    s: TwoQubitState,
    m: MeasurementModel,
    method=BoundMethod.STEERING_ANALYTIC,
    binning=Binning.ASSIGN_ZERO,
) -> KeyRateReport:
    method, binning = BoundMethod(method), Binning(binning)
    t = statistics(s, m)
    s2 = steering_s2(t, binning)
    h_ab = h_a_given_b(t, binning)
    h_ae = h_a_given_e_bound(s2, method)
    return KeyRateReport(
        s2=float(s2),
        h_ab=float(h_ab),
        h_ae_bound=float(h_ae),
        key_rate=float(h_ae - h_ab),
        concurrence=concurrence(s),
        bound_method=method.value,
        binning=binning.value,
    )


@dataclass(frozen=True)
class SecuritySettings:
    """Measurement model plus the choices that turn statistics into a rate."""

    eta_b: float = 1.0
    method: str = BoundMethod.STEERING_ANALYTIC.value
    binning: str = Binning.ASSIGN_ZERO.value

    def evaluate(self, s: TwoQubitState) -> KeyRateReport:
        return key_rate(s, MeasurementModel(self.eta_b), self.method, self.binning)


# -- threshold searches ------------------------------------------------------------


def bisect_boundary(pred: Callable[[float], bool], good: float, bad: float, tol: float = 1e-4) -> float:
    """Locate where a monotone predicate flips between ``good`` (True) and ``bad`` (False).

    Returns the midpoint of the final bracket, which is narrower than ``tol``.
    """
    if not pred(good):
        raise ValueError("predicate is False at the 'good' end of the bracket")
    if pred(bad):
        raise ValueError("predicate is True at the 'bad' end of the bracket")
    while abs(bad - good) > tol:
        mid = 0.5 * (good + bad)
        if pred(mid):
            good = mid
        else:
            bad = mid
    return 0.5 * (good + bad)


def _secure(report: KeyRateReport) -> bool:
    return report.key_rate > 0


def min_efficiency(
    s: TwoQubitState,
    method=BoundMethod.STEERING_ANALYTIC,
    binning=Binning.ASSIGN_ZERO,
    tol: float = 1e-4,
) -> float:
    """Smallest eta_b with a positive key rate for state ``s``."""

    def rate(eta):
        return key_rate(s, MeasurementModel(eta), method, binning).key_rate

    if rate(1.0) <= 0:
        raise NeverSecure(f"key rate {rate(1.0):.4g} <= 0 at eta_b = 1")
    grid = np.linspace(0.0, 1.0, 11)
    vals = [rate(e) for e in grid]
    if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
        raise ArithmeticError("key rate is not monotone in eta_b on the search bracket")
    return bisect_boundary(lambda e: rate(e) > 0, 1.0, 0.0, tol)


def noisy_state(kind, param: float, theta: float = math.pi / 4, side=ch.Side.TRAVELING) -> TwoQubitState:
    return ch.apply_one_sided(ch.make_channel(kind, param), psi_theta(theta), side)


@dataclass(frozen=True)
class CriticalNoise:
    kind: str
    eta_b: float
    key_rate_critical: Optional[float]
    steering_critical: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _noise_root(kind, pred: Callable[[float], bool], tol: float) -> Optional[float]:
    hi = ch.PARAM_RANGE[ch.ChannelKind(kind)][1]
    if pred(hi):
        return None
    return bisect_boundary(pred, 0.0, hi, tol)


def critical_noise(
    kind,
    eta_b: float = 1.0,
    method=BoundMethod.STEERING_ANALYTIC,
    binning=Binning.ASSIGN_ZERO,
    tol: float = 1e-4,
    theta: float = math.pi / 4,
    side=ch.Side.TRAVELING,
) -> CriticalNoise:
    """Noise strength where the key rate, and separately S2 > 1/sqrt(2), stop holding.

    ``None`` means the condition holds over the whole parameter range.
    """
    kind = ch.ChannelKind(kind)
    m = MeasurementModel(eta_b)

    def report(x):
        return key_rate(noisy_state(kind, x, theta, side), m, method, binning)

    if report(0.0).key_rate <= 0:
        raise NeverSecure(f"no positive key rate for {kind.value} even at zero noise (eta_b={eta_b})")
    r_crit = _noise_root(kind, lambda x: report(x).key_rate > 0, tol)
    s_crit = _noise_root(kind, lambda x: report(x).s2 > STEERING_BOUND, tol)
    return CriticalNoise(kind.value, eta_b, r_crit, s_crit)


def theta_min() -> float:
    """Smallest angle at which |psi(theta)> still violates the steering bound."""
    return 0.5 * math.asin(math.sqrt(2) - 1)

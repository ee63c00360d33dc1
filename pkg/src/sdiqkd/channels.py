"""Single-qubit noise channels in Kraus form and their one-sided application.

The three physical channels are dephasing (``p``), depolarizing (``q``) and
amplitude damping (``gamma``). Each can be built directly from its noise
parameter or from a fibre length and coherence length. Channels act on one
qubit of a pair; by default the traveling qubit (qubit 0, Alice's).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from . import qmat
from .errors import CompletenessError
from .states import TwoQubitState


class ChannelKind(str, Enum):
    DEPHASING = "dephasing"
    DEPOLARIZING = "depolarizing"
    AMPLITUDE_DAMPING = "amplitude_damping"
    IDENTITY = "identity"
    COMPOSITE = "composite"


class Side(str, Enum):
    TRAVELING = "traveling"
    STATIONARY = "stationary"


NOISE_KINDS = (ChannelKind.DEPHASING, ChannelKind.DEPOLARIZING, ChannelKind.AMPLITUDE_DAMPING)

PARAM_RANGE = {
    ChannelKind.DEPHASING: (0.0, 0.5),
    ChannelKind.DEPOLARIZING: (0.0, 1.0),
    ChannelKind.AMPLITUDE_DAMPING: (0.0, 1.0),
}

PARAM_SYMBOL = {
    ChannelKind.DEPHASING: "p",
    ChannelKind.DEPOLARIZING: "q",
    ChannelKind.AMPLITUDE_DAMPING: "gamma",
}

# default coherence lengths (km) for the distance scenarios
DEFAULT_LC_KM = {
    ChannelKind.DEPHASING: 40.0,
    ChannelKind.DEPOLARIZING: 40.0,
    ChannelKind.AMPLITUDE_DAMPING: 24.0,
}


def completeness_error(ops: Sequence[np.ndarray]) -> float:
    s = sum(qmat.dagger(k) @ k for k in ops)
    return float(np.max(np.abs(s - qmat.I2)))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kind: ChannelKind
    kraus_ops: tuple
    param: Optional[float] = None

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops or any(k.shape != (2, 2) for k in ops):
            raise ValueError("Kraus operators must be a nonempty list of 2x2 matrices")
        err = completeness_error(ops)
        if err > qmat.STRUCT_TOL:
            raise CompletenessError(f"sum K^dagger K deviates from I by {err:.3e}")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        object.__setattr__(self, "kraus_ops", ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Act on a single-qubit density matrix."""
        return qmat.kraus_sum(self.kraus_ops, np.asarray(rho, dtype=complex))

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """This channel followed by ``other``."""
        return compose(self, other)


def _check_range(kind: ChannelKind, value: float) -> float:
    lo, hi = PARAM_RANGE[kind]
    value = float(value)
    if not lo <= value <= hi:
        raise ValueError(f"{PARAM_SYMBOL[kind]}={value} outside [{lo}, {hi}] for {kind.value}")
    return value


def identity() -> KrausChannel:
    return KrausChannel(ChannelKind.IDENTITY, (qmat.I2,), 0.0)


def dephasing(p: float) -> KrausChannel:
    p = _check_range(ChannelKind.DEPHASING, p)
    return KrausChannel(ChannelKind.DEPHASING, (math.sqrt(1 - p) * qmat.I2, math.sqrt(p) * qmat.Z), p)


def depolarizing(q: float) -> KrausChannel:
    """(1 - q) rho + q I/2, as weights (1 - 3q/4, q/4, q/4, q/4) on (I, X, Y, Z)."""
    q = _check_range(ChannelKind.DEPOLARIZING, q)
    k0 = math.sqrt(1 - 3 * q / 4) * qmat.I2
    kp = math.sqrt(q / 4)
    return KrausChannel(ChannelKind.DEPOLARIZING, (k0, kp * qmat.X, kp * qmat.Y, kp * qmat.Z), q)


def amplitude_damping(gamma: float) -> KrausChannel:
    g = _check_range(ChannelKind.AMPLITUDE_DAMPING, gamma)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - g)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(g)], [0, 0]], dtype=complex)
    return KrausChannel(ChannelKind.AMPLITUDE_DAMPING, (k0, k1), g)


_BUILDERS = {
    ChannelKind.DEPHASING: dephasing,
    ChannelKind.DEPOLARIZING: depolarizing,
    ChannelKind.AMPLITUDE_DAMPING: amplitude_damping,
}


def make_channel(kind, param: float) -> KrausChannel:
    kind = ChannelKind(kind)
    if kind is ChannelKind.IDENTITY:
        return identity()
    if kind not in _BUILDERS:
        raise ValueError(f"cannot build a {kind.value} channel from a single parameter")
    return _BUILDERS[kind](param)


def compose(*channels: KrausChannel) -> KrausChannel:
    """Sequential composition; the first channel listed acts first."""
    if not channels:
        return identity()
    if len(channels) == 1:
        return channels[0]
    ops = channels[0].kraus_ops
    for ch in channels[1:]:
        ops = tuple(b @ a for a in ops for b in ch.kraus_ops)
    return KrausChannel(ChannelKind.COMPOSITE, ops, None)


@dataclass(frozen=True)
class DistanceModel:
    length_km: float
    lc_km: float

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("fibre length must be nonnegative")
        if self.lc_km <= 0:
            raise ValueError("coherence length must be positive")

    @property
    def decay(self) -> float:
        return math.exp(-self.length_km / self.lc_km)


def noise_from_distance(kind, d: DistanceModel) -> float:
    kind = ChannelKind(kind)
    if kind is ChannelKind.DEPHASING:
        return 0.5 * (1 - d.decay)
    if kind in (ChannelKind.DEPOLARIZING, ChannelKind.AMPLITUDE_DAMPING):
        return 1 - d.decay
    raise ValueError(f"no distance law for {kind.value}")


def from_distance(kind, d: DistanceModel) -> KrausChannel:
    return make_channel(kind, noise_from_distance(kind, d))


def apply_one_sided(ch: KrausChannel, s: TwoQubitState, side=Side.TRAVELING) -> TwoQubitState:
    """(E x I)(rho) for the traveling qubit, (I x E)(rho) for the stationary one."""
    side = Side(side)
    if completeness_error(ch.kraus_ops) > qmat.STRUCT_TOL:
        raise CompletenessError("channel is not trace preserving")
    if side is Side.TRAVELING:
        lifted = [qmat.tensor(k, qmat.I2) for k in ch.kraus_ops]
    else:
        lifted = [qmat.tensor(qmat.I2, k) for k in ch.kraus_ops]
    rho = qmat.kraus_sum(lifted, s.rho)
    rho = (rho + qmat.dagger(rho)) / 2
    label = f"{ch.kind.value}[{side.value}]({s.label})" if s.label else None
    return TwoQubitState(rho, label)


# -- channel specification schema -------------------------------------------------
#
# One stage:   {"kind": "dephasing", "param": 0.1}
#          or  {"kind": "amplitude_damping", "length_km": 30, "lc_km": 24}
# A full spec: {"stages": [stage, ...], "side": "traveling"}; stages act in order.


def stage_param(stage: Mapping) -> float:
    kind = ChannelKind(stage["kind"])
    if kind is ChannelKind.IDENTITY:
        return 0.0
    if stage.get("param") is not None:
        return float(stage["param"])
    if stage.get("length_km") is not None:
        lc = stage.get("lc_km")
        lc = DEFAULT_LC_KM[kind] if lc is None else float(lc)
        return noise_from_distance(kind, DistanceModel(float(stage["length_km"]), lc))
    raise ValueError(f"stage {dict(stage)} needs 'param' or 'length_km'")


def channel_from_spec(spec: Mapping) -> KrausChannel:
    stages = spec.get("stages", [])
    return compose(*[make_channel(st["kind"], stage_param(st)) for st in stages])

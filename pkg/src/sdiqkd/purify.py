"""BBPSSW recurrence purification on two-qubit states.

One round takes two copies of a pair, applies CNOTs from the first (control)
pair into the second (target) pair on both sides, measures both target qubits
in the computational basis and keeps the control pair when the outcomes agree.

Between rounds the pair is brought back to Bell-diagonal form by a Pauli twirl
and then acted on by a bilateral rotation U x U*, which leaves phi+ alone and
permutes the three error Bell states. Phase errors (phi-) are invisible to the
CNOT parity check, so without this step they accumulate and fidelity stalls.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from . import qmat
from .errors import ZeroSuccessProbability
from .protocol import SecuritySettings
from .states import TwoQubitState, fidelity_phi_plus, is_bell_diagonal


class RoundPolicy(str, Enum):
    CYCLIC = "cyclic"  # fixed rotation phi- -> psi+ -> psi- -> phi-
    WERNER = "werner"  # average over the three rotations: full Werner depolarisation
    PAULI = "pauli"  # Pauli twirl only


_PAULI_PAIRS = [qmat.tensor(p, p) for p in qmat.PAULIS]

# 2pi/3 rotation about (1,1,1): X -> Y -> Z -> X under conjugation
_C = (
    math.cos(math.pi / 3) * qmat.I2
    - 1j * math.sin(math.pi / 3) * (qmat.X + qmat.Y + qmat.Z) / math.sqrt(3)
)
CYCLIC_ROTATION = qmat.tensor(_C, np.conj(_C))


def pauli_twirl(s: TwoQubitState) -> TwoQubitState:
    rho = sum(p @ s.rho @ p for p in _PAULI_PAIRS) / 4
    return TwoQubitState((rho + qmat.dagger(rho)) / 2, s.label)


def rotate(s: TwoQubitState, times: int = 1) -> TwoQubitState:
    u = np.linalg.matrix_power(CYCLIC_ROTATION, times % 3)
    rho = u @ s.rho @ qmat.dagger(u)
    return TwoQubitState((rho + qmat.dagger(rho)) / 2, s.label)


def werner_twirl(s: TwoQubitState) -> TwoQubitState:
    """Depolarise to Werner form, keeping the phi+ weight."""
    t = pauli_twirl(s)
    rho = sum(rotate(t, k).rho for k in range(3)) / 3
    return TwoQubitState(rho, s.label)


def bbpssw_recurrence(f: float) -> Tuple[float, float]:
    """Closed-form output fidelity and success probability for a Werner input."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    g = 1 - f
    p_succ = f * f + 2 / 3 * f * g + 5 / 9 * g * g
    return (f * f + g * g / 9) / p_succ, p_succ


def _bilateral_cnot() -> np.ndarray:
    # qubit order (A1, B1, A2, B2); CNOT A1 -> A2 and B1 -> B2
    u = np.zeros((16, 16), dtype=complex)
    for i in range(16):
        a1, b1, a2, b2 = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        j = (a1 << 3) | (b1 << 2) | ((a2 ^ a1) << 1) | (b2 ^ b1)
        u[j, i] = 1
    return u


BILATERAL_CNOT = _bilateral_cnot()
# targets (A2, B2) agree
KEEP = np.diag([1.0 if ((i >> 1) & 1) == (i & 1) else 0.0 for i in range(16)]).astype(complex)


def bbpssw_exact(s: TwoQubitState) -> Tuple[TwoQubitState, float]:
    """Simulate one round on two copies of ``s`` (16x16) and postselect."""
    rho = qmat.tensor(s.rho, s.rho)
    rho = BILATERAL_CNOT @ rho @ BILATERAL_CNOT.T
    kept = KEEP @ rho @ KEEP
    out = qmat.partial_trace(kept, [0, 1])
    p_succ = float(np.real(np.trace(out)))
    if p_succ < 1e-14:
        raise ZeroSuccessProbability(f"kept-branch probability {p_succ:.3e}")
    out = out / p_succ
    return TwoQubitState((out + qmat.dagger(out)) / 2, s.label), p_succ


@dataclass(frozen=True)
class RoundRecord:
    n: int
    fidelity: float
    success_prob: float
    cumulative_yield: float
    key_rate: float
    effective_rate: float


CSV_COLUMNS = ("round", "fidelity", "success_prob", "yield", "key_rate", "effective_rate")


@dataclass
class PurificationTrace:
    rounds: List[RoundRecord] = field(default_factory=list)
    policy: str = RoundPolicy.CYCLIC.value

    @property
    def diverged(self) -> bool:
        """Input fidelity at or below 1/2, where recurrence cannot help."""
        return bool(self.rounds) and self.rounds[0].fidelity <= 0.5

    @property
    def fidelities(self) -> List[float]:
        return [r.fidelity for r in self.rounds]

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rounds], indent=2)

    @classmethod
    def from_json(cls, text: str, policy: str = RoundPolicy.CYCLIC.value) -> "PurificationTrace":
        return cls([RoundRecord(**d) for d in json.loads(text)], policy)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rounds:
            w.writerow([r.n, repr(r.fidelity), repr(r.success_prob), repr(r.cumulative_yield),
                        repr(r.key_rate), repr(r.effective_rate)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, policy: str = RoundPolicy.CYCLIC.value) -> "PurificationTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            [
                RoundRecord(int(d["round"]), float(d["fidelity"]), float(d["success_prob"]),
                            float(d["yield"]), float(d["key_rate"]), float(d["effective_rate"]))
                for d in rows
            ],
            policy,
        )


def prepare_round(s: TwoQubitState, policy=RoundPolicy.CYCLIC, twirl: bool = True) -> TwoQubitState:
    policy = RoundPolicy(policy)
    if twirl or not is_bell_diagonal(s):
        s = pauli_twirl(s)
    if policy is RoundPolicy.CYCLIC:
        s = rotate(s)
    elif policy is RoundPolicy.WERNER:
        s = werner_twirl(s)
    return s


def purify_iterate(
    s: TwoQubitState,
    n_rounds: int,
    twirl_each_round: bool = True,
    security: Optional[SecuritySettings] = None,
    policy=RoundPolicy.CYCLIC,
) -> PurificationTrace:
    """Run ``n_rounds`` rounds and record fidelity, yield and key rates.

    Round 0 describes the (twirled, if needed) input. Key rates are those of
    the state each round hands on, under ``security``.
    """
    if not 0 <= n_rounds <= 12:
        raise ValueError("n_rounds must be in [0, 12]")
    security = security or SecuritySettings()
    policy = RoundPolicy(policy)
    current = s if is_bell_diagonal(s) else pauli_twirl(s)

    def record(n, state, p, yld):
        r = security.evaluate(state).key_rate
        return RoundRecord(n, fidelity_phi_plus(state), p, yld, r, max(r, 0.0) * yld)

    trace = PurificationTrace([record(0, current, 1.0, 1.0)], policy.value)
    yld = 1.0
    for n in range(1, n_rounds + 1):
        current, p = bbpssw_exact(prepare_round(current, policy, twirl_each_round))
        yld *= p / 2
        trace.rounds.append(record(n, current, p, yld))
    return trace


def effective_rate_curve(trace: PurificationTrace) -> Tuple[int, List[float]]:
    """Round with the largest effective rate (earliest on ties) and the curve."""
    if not trace.rounds:
        raise ValueError("empty trace")
    curve = [r.effective_rate for r in trace.rounds]
    best = max(range(len(curve)), key=lambda i: (curve[i], -i))
    return trace.rounds[best].n, curve

"""Noise analysis for one-sided device-independent QKD.

States, Kraus noise channels, steering-based key rates, threshold searches
and BBPSSW purification, all as exact expectation values.
"""

from .channels import ChannelKind, KrausChannel, Side, apply_one_sided, compose, make_channel
from .errors import DomainError, NeverSecure, ZeroSuccessProbability
from .experiments import Scenario, evaluate
from .protocol import Binning, BoundMethod, KeyRateReport, MeasurementModel, key_rate
from .purify import PurificationTrace, bbpssw_exact, bbpssw_recurrence, purify_iterate
from .states import TwoQubitState, bell_state, concurrence, fidelity_phi_plus, psi_theta, werner

__version__ = "0.1.0"

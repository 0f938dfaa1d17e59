"""Exact belief updating and belief revision on polytrees via named-axis tensor contraction."""

from .engine import Commitment, Equilibrium, Mode, commit, propagate, revise_beliefs, update_beliefs
from .errors import (
    BeliefError,
    ContradictoryEvidenceError,
    EvidenceError,
    ModelError,
    NetworkValidationError,
    ZeroMassError,
)
from .model import BeliefNetwork, CheckMode, Evidence, joint_probability, load_evidence, load_network, validate
from .tensor import Axis, CombineOp, Norm, Tensor

__version__ = "0.1.0"

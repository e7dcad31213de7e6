"""Qubit lattice algorithms for KdV and 2D tensor-dielectric Maxwell, with exact continuum-limit checks."""
from ._accel import BACKEND
from .errors import ConfigError, NumericAbort, SequenceError
from .lattice import AmplitudeField, AngleField, LocalOperator, apply_sequence, collide, l2_norm, stream
from .program import Collide, OperatorSequence, Potential, Stream, parse_program

__version__ = "0.1.0"

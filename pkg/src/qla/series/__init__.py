"""Exact truncated epsilon-series engine for continuum-limit derivations."""
from .algebra import ORDER, MAX_DERIV, Atom, AtomPolynomial, DerivativeOverflow, TruncatedSeries, atom
from .algebra import series_add, series_mul, series_scale
from .coeff import ExactCoeff, SQRT2, INV_SQRT2
from .expand import UnsupportedAngle, expand_sequence, field_vector, stream_expand, trig_expand

"""Deterministic annealing, bifurcation analysis and relevance-compression
curves for the Information Distortion and Information Bottleneck problems.

All information quantities are in nats. Arrays are numpy float64; a joint
distribution is K_X x K and a quantizer is N x K (column-stochastic).
"""

from ._infobif import *  # noqa: F401,F403
from ._infobif import __doc__  # noqa: F401

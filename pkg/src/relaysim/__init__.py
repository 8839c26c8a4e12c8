"""Two-way relay network simulator with analytic SEP for multi-antenna relays."""

from .analysis import MgfSpec, SepCurvePoint, sep_downlink, sep_downlink_bounds, total_sep
from .downlink import SchemeId
from .engine import Mode, SepEstimate, SimConfig, estimate_sep, sweep
from .exceptions import DegenerateChannelError, NumericalError
from .modulation import Constellation, build_constellation

__all__ = [
    "Constellation", "DegenerateChannelError", "MgfSpec", "Mode", "NumericalError", "SchemeId",
    "SepCurvePoint", "SepEstimate", "SimConfig", "build_constellation", "estimate_sep",
    "sep_downlink", "sep_downlink_bounds", "sweep", "total_sep",
]
__version__ = "0.1.0"

"""Delivery-time analysis of cache-aided fog radio access networks."""

from .errors import (
    Infeasible,
    InfeasibleCloudOnly,
    InfeasibleEdgeOnly,
    InfeasibleHybrid,
    InvalidConfig,
    InvalidParameter,
    LibraryTooSmall,
    NoFeasibleScheme,
    ValidationFailure,
)
from .model import DemandVector, Mode, NetworkConfig, Scheme, SubfileId, Technique, class_profile, validate_config
from .ndt import NdtBreakdown, delta, delta_pipelined, delta_serial, evaluate, sweep
from .placement import classify_bits, place_en_caches, place_user_caches
from .scheduler import build_schedule, reconcile, validate_block

__version__ = "0.1.0"

"""Stable-throughput analysis and simulation of cooperative multicast with network coding."""

from .analytic import (
    Binding,
    SeriesPolicy,
    StabilityResult,
    coop_max_stable,
    coop_nc_max_stable,
    coop_source_service_rate,
    expected_max_geometric,
    max_stable,
    prp_max_stable,
    relay_expected_service_saturated,
    rlnc_source_max_stable,
    state_probability,
)
from .galois import FieldSpec, decode_count_pmf
from .model import EnumerationOverflowError, NcParams, NetworkConfig
from .simulate import (
    BisectionError,
    LambdaEstimate,
    ProtocolKind,
    SearchOptions,
    SimReport,
    find_lambda_max,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "Binding",
    "BisectionError",
    "EnumerationOverflowError",
    "FieldSpec",
    "LambdaEstimate",
    "NcParams",
    "NetworkConfig",
    "ProtocolKind",
    "SearchOptions",
    "SeriesPolicy",
    "SimReport",
    "StabilityResult",
    "coop_max_stable",
    "coop_nc_max_stable",
    "coop_source_service_rate",
    "decode_count_pmf",
    "expected_max_geometric",
    "find_lambda_max",
    "max_stable",
    "prp_max_stable",
    "relay_expected_service_saturated",
    "rlnc_source_max_stable",
    "run",
    "state_probability",
]

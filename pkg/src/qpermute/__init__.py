"""Simulator and pulse-schedule compiler for an all-optical operator-permuting device."""

from .config import SimulationConfig, config_from_dict, load_config
from .errors import (
    CollisionError,
    ConfigurationError,
    ConsistencyError,
    InvariantViolation,
    NormalizationError,
    RoutingError,
    TimingInfeasibleError,
    ValidationError,
)
from .network import Side, SwitchId, SwitchNetwork, SwitchSetting, apply_switch, build_network, propagate_iteration, run_device
from .oracle import circuit_n2, haar_random_unitary, meta_operator_output, q2_permute, resource_counts
from .schedule import (
    PulseSchedule,
    SchedulerParams,
    boundary_settings,
    build_schedule,
    operator_index,
    permutation_bins,
    route_settings,
    routing_discrepancies,
)
from .state import GATES, PhotonState, PolarizationOperator, apply_polarization_op, fidelity, norm, normalize

__version__ = "0.1.0"

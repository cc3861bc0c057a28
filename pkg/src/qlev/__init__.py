"""Quasi-1D lattice scattering engine with an exact eigenvalue-counting check.

The model is a half-line of identical rings threaded by a flux, with a
potential on the boundary ring.  The package computes channel structure,
scattering matrices, one-sided threshold limits, bound states (three
independent ways), winding numbers, and verifies that they satisfy an exact
integer identity, including the correction terms at resonant and coinciding
thresholds.
"""

from .model import (
    Channel,
    IntricateInfo,
    Level,
    Model,
    ModelError,
    ModelParams,
    ThresholdPoint,
    build_model,
    cycle_matrix,
    detect_intricate,
    distinct_level_count,
)
from .resolvent import (
    Energy,
    NonInvertibleError,
    ThresholdEnergyError,
    bs_matrix,
    bs_matrix_batch,
    bs_matrix_closed_part,
    bs_matrix_unphysical,
    channel_resolvent,
    channel_resolvent_boundary,
    channel_resolvent_continued,
    m_matrix,
    resolvent_profile,
)
from .scattering import (
    ExtrapolationDiverged,
    ScatteringSample,
    ThresholdClass,
    ThresholdLimit,
    algebra_continuity_check,
    all_threshold_limits,
    s_matrix,
    s_matrix_batch,
    threshold_limit,
    unitarity_defect,
)
from .bound_states import (
    BoundState,
    BoundStateSummary,
    NoConvergenceError,
    OracleResult,
    bound_state_census,
    find_discrete,
    find_embedded,
    lattice_oracle,
)
from .winding import (
    LevinsonReport,
    PhaseJumpTooLarge,
    PhaseTrace,
    UnclassifiedThresholdError,
    arg_variation,
    comb_edges,
    correction_count,
    eta_piece_expected,
    eta_piece_winding,
    interval_phase_trace,
    levinson_report,
    simple_channel_correction,
    var_det_s,
)
from .hexagon import (
    HexagonDomainError,
    HexagonSymbol,
    HexagonWinding,
    MixedLimits,
    hexagon_symbol,
    hexagon_winding,
    q_limit,
)
from .special import det4_structured, eta_minus, eta_plus, phi_symbol, psi
from .sweep import SweepConfig, VDistribution, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "IntricateInfo",
    "Level",
    "Model",
    "ModelError",
    "ModelParams",
    "ThresholdPoint",
    "build_model",
    "cycle_matrix",
    "detect_intricate",
    "distinct_level_count",
    "Energy",
    "NonInvertibleError",
    "ThresholdEnergyError",
    "bs_matrix",
    "bs_matrix_batch",
    "bs_matrix_closed_part",
    "bs_matrix_unphysical",
    "channel_resolvent",
    "channel_resolvent_boundary",
    "channel_resolvent_continued",
    "m_matrix",
    "resolvent_profile",
    "ExtrapolationDiverged",
    "ScatteringSample",
    "ThresholdClass",
    "ThresholdLimit",
    "algebra_continuity_check",
    "all_threshold_limits",
    "s_matrix",
    "s_matrix_batch",
    "threshold_limit",
    "unitarity_defect",
    "BoundState",
    "BoundStateSummary",
    "NoConvergenceError",
    "OracleResult",
    "bound_state_census",
    "find_discrete",
    "find_embedded",
    "lattice_oracle",
    "LevinsonReport",
    "PhaseJumpTooLarge",
    "PhaseTrace",
    "UnclassifiedThresholdError",
    "arg_variation",
    "comb_edges",
    "correction_count",
    "eta_piece_expected",
    "eta_piece_winding",
    "interval_phase_trace",
    "levinson_report",
    "simple_channel_correction",
    "var_det_s",
    "HexagonDomainError",
    "HexagonSymbol",
    "HexagonWinding",
    "MixedLimits",
    "hexagon_symbol",
    "hexagon_winding",
    "q_limit",
    "det4_structured",
    "eta_minus",
    "eta_plus",
    "phi_symbol",
    "psi",
    "SweepConfig",
    "VDistribution",
    "run_sweep",
    "__version__",
]

"""Balanced truncation for externally switched linear hybrid systems.

The package models hybrid systems whose discrete part is a Moore automaton
driven by external events, with one LTI subsystem per mode and linear
reset maps on transitions. It verifies and solves the generalized Gramian
LMIs, balances and truncates the subsystems together with their reset
maps, evaluates the analytic output-error bound, and ships a simulation
harness that checks the bound empirically.
"""

from . import _kernels, fourmode, modelio, randgen, signals
from .balance import (
    BalancedRealization,
    BalancingError,
    IllConditionedBalancing,
    ReducedModel,
    VDiagnostic,
    balance,
    error_bound,
    reduce,
    truncate,
    v_diagnostic,
)
from .gramian import (
    GramianError,
    GramianFamily,
    Infeasible,
    LmiResidualReport,
    NonConvergent,
    SolveOptions,
    check_gramians,
    export_gramians,
    gramians_from_stability,
    import_gramians,
    schur_jump_equivalence,
    solve_gramians,
)
from .linalg import (
    DefinitenessVerdict,
    LinalgError,
    NotPositiveDefinite,
    SingularMatrix,
    SymEig,
    cholesky,
    definiteness,
    inverse,
    mat_exp,
    sym_eig,
)
from .model import (
    LinearHybridSystem,
    ModeInterval,
    ResetMap,
    Subsystem,
    TimedEventSequence,
    UnknownIdError,
    ValidationReport,
    discrete_trajectory,
    step_mode,
    validate,
)
from .signals import ExpressionSignal, InputSignal, ZohSignal, make_signal, register_signal
from .simulate import (
    DivergedError,
    EventRecord,
    HybridTrajectory,
    L2Report,
    Segment,
    SimConfig,
    l2_norm,
    l2_norm_samples,
    l2_norm_signal,
    l2_output_difference,
    simulate,
    simulate_exact,
)

__version__ = "0.1.0"

kernel_backend = _kernels.backend

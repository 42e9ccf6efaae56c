"""Deterministic engine for simulating, identifying and verbalizing
interactive games, with multistage perception-game sessions on top."""

from .engine import (
    Coalition,
    CoalitionSpec,
    DynamicsSpec,
    Engine,
    IntentionField,
    InvariantSpec,
    Jet,
    MemoryKernel,
    PureControl,
    RealizedControl,
    StateVector,
    Trajectory,
    check_invariants,
    coalition_control,
    identity_feedback,
    reduce_memory_feedback,
    rk4_step,
    simulate,
)
from .epsilon import (
    CellComplex,
    CorrelationIntegral,
    EpsilonRepresentation,
    EpsilonTrace,
    Partition,
    apply_representation,
    detect_cell_transitions,
    epsilon_trace,
    estimate_epsilon,
    find_correlation_integrals,
    monomial,
    stack_traces,
)
from .errors import (
    DimensionMismatch,
    EngineError,
    IntegrationDiverged,
    ReplayMismatch,
    SchemaError,
    UnderDetermined,
    UnsupportedKernel,
    WindowTooShort,
)
from .perception import (
    FigureConfig,
    MatchRecord,
    MatchRunner,
    RecalibrationMap,
    SetRecord,
    StopCriterion,
    recalibrate_stop,
    run_match,
    run_set,
)
from .scenarios import (
    CompiledScenario,
    ScenarioSpec,
    build_dialogue_toy,
    build_iavr_figure,
    build_pursuit,
    builtin_scenario,
    compile_scenario,
    load_scenario,
)
from .analysis import SessionAnalysis, analyze_session
from .verbalize import (
    DialogueState,
    FunctionalSpec,
    RecursionModel,
    Transcript,
    Window,
    compute_window_functionals,
    dialogue_states,
    fit_recursion,
    transcript,
    verbalizability_score,
    windows_from_boundaries,
    windows_from_partition,
)

__version__ = "0.1.0"

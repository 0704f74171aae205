"""Working-memory-augmented neural adaptive control of a two-link arm.

The package couples a two-layer adaptive network controller with an
external attention-addressed memory bank and simulates the closed loop
under abrupt plant-parameter changes, with baselines (plain network,
soft attention, hard attention) for comparison.
"""

from .dynamics import (ArmParams, JointSignal, JumpEvent, NonPositiveMassError,
                       PlantState, SingularMassError, apply_jump,
                       coriolis_matrix, gravity_vector, mass_matrix,
                       plant_derivative, reference_eval)
from .memory import (AttentionConfig, AttentionWeights, WorkingMemory,
                     softmax)
from .metrics_io import (EmptyWindowError, MissingBaselineError, RunSummary,
                         comparison_table, srmse, summarize_run,
                         write_summary_json, write_trace_csv)
from .neurocontroller import (ControllerGains, ErrorState, NetworkParams,
                              init_network)
from .scenarios import (ScenarioSpec, ScenarioParseError,
                        ScenarioValidationError, load_scenario_file, preset,
                        save_scenario_file)
from .simulation import (ClosedLoopState, DivergedError, RunResult, SimConfig,
                         Trace, TraceRecord, closed_loop_derivative,
                         rk4_step, run_scenario, step_closed_loop)

__version__ = "0.1.0"

__all__ = [
    "ArmParams", "AttentionConfig", "AttentionWeights", "ClosedLoopState",
    "ControllerGains", "DivergedError", "EmptyWindowError", "ErrorState",
    "JointSignal", "JumpEvent", "MissingBaselineError", "NetworkParams",
    "NonPositiveMassError", "PlantState", "RunResult", "RunSummary",
    "ScenarioParseError", "ScenarioSpec", "ScenarioValidationError",
    "SimConfig", "SingularMassError", "Trace", "TraceRecord",
    "WorkingMemory", "apply_jump", "closed_loop_derivative",
    "comparison_table", "coriolis_matrix", "gravity_vector",
    "init_network", "load_scenario_file", "mass_matrix", "plant_derivative",
    "preset", "reference_eval", "rk4_step", "run_scenario",
    "save_scenario_file", "softmax", "srmse", "step_closed_loop",
    "summarize_run", "write_summary_json", "write_trace_csv",
]

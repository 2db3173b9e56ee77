"""ccskit: timed component contracts for hybrid systems.

Build reactive controllers and controllable plants, compose them under a
scheduling cost model with variable-level non-interference gates,
generate the proof obligations that justify the composition, and
simulate the closed loop under seeded schedules.
"""

from .ast import (
    And,
    Assign,
    Box,
    Choice,
    Compare,
    Divide,
    Exists,
    FALSE,
    FalseF,
    Forall,
    Formula,
    Implies,
    Loop,
    Minus,
    Neg,
    Node,
    Not,
    ODE,
    Or,
    Plus,
    Program,
    Rational,
    Seq,
    Term,
    Test,
    Times,
    TRUE,
    TrueF,
    Variable,
    choice,
    choice_alternatives,
    conj,
    conjuncts,
    fraction_to_text,
    mentions_name,
    normalize_ac,
    num,
    pretty_print,
    print_formula,
    print_program,
    print_term,
    seq,
    seq_statements,
    var,
)
from .components import (
    CLOCK,
    Contract,
    ControllablePlant,
    EMPTY_ENVIRONMENT,
    Environment,
    MCCS,
    MultiChoiceController,
    ReactiveController,
    TIMESTAMP_PREFIX,
    TimestampRegistry,
    TRUE_CONTRACT,
    as_multi_controller,
    contract_validity_goal,
    make_ccs,
    make_controllable_plant,
    make_reactive_controller,
    with_contract,
)
from .composition import (
    CostModel,
    NonInterferenceReport,
    Violation,
    choice_composition,
    compose_controllers,
    compose_mccs,
    compose_plants,
    cost,
    non_interference_controllers,
    non_interference_ctrl_plant,
    non_interference_plants,
    raise_on_violations,
)
from .dsl import (
    ModelSource,
    build_components,
    load,
    load_file,
    parse,
    parse_formula_text,
    parse_program_text,
    parse_term_text,
    serialize_composed,
    serialize_model,
)
from .errors import (
    BoundOccursInBehavior,
    CcsError,
    ClockRedefined,
    DivisionByZero,
    EnvironmentNotConstant,
    InitViolatesAssumptions,
    InterferenceError,
    InvalidContract,
    MissingContract,
    NonFreshTimestamp,
    NonPositiveBound,
    NotDiscrete,
    ParseError,
    ReactivityExceedsControllability,
    ReservedName,
    StuckState,
    UnboundedVariable,
    UnmappedController,
    UnresolvedName,
)
from .obligations import (
    BoundedCheckResult,
    ProofObligation,
    check_bounded,
    obligations_ccs,
    obligations_controllers,
    obligations_plants,
    render_kyx,
)
from .simulator import (
    BatchSummary,
    Schedule,
    Trace,
    TracePoint,
    eval_formula,
    eval_term,
    run,
    run_batch,
    write_trace_csv,
)
from .statics import all_vars, bound_vars, free_vars, must_bound_vars

__version__ = "0.1.0"

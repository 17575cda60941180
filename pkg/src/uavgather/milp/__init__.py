from .lpformat import export_model
from .model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    LE,
    LinearModel,
    ModelError,
    ModelStats,
    check_assignment,
    model_stats,
)
from .solvers import (
    BACKENDS,
    ERROR,
    FEASIBLE_GAP,
    INFEASIBLE,
    OPTIMAL,
    SOLVER_PATH_ENV,
    TIMEOUT_NO_SOLUTION,
    SolveConfig,
    SolveReport,
    parse_highs_solution,
    solve,
)

"""Selfish scheduling of jobs whose lengths depend linearly on their start time.

Jobs choose machines; machines run their jobs in a fixed priority order
without idle time. The package builds schedules, checks and searches for
pure Nash equilibria, runs constructive equilibrium algorithms, evaluates
coordination mechanisms and generates the standard instance families.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    FLOAT,
    RATIONAL,
    GameClass,
    GameInstance,
    Machine,
    NumericMode,
    ProcessingFunction,
    classify,
    completion_time,
    eval_processing,
    is_delay_averse,
    min_completion_after,
    optimal_start,
)
from .equilibrium import (
    Converged,
    Cycle,
    Deviation,
    EquilibriumReport,
    best_response,
    brd,
    compute_poa_pos,
    enumerate_ne,
    enumerate_ne_via_ls,
    is_nash,
    ne_exists,
    ne_set,
    optimal_makespan,
    search_ne,
    sweep_statistics,
)
from .errors import (
    BudgetExceeded,
    ClassMismatch,
    DomainError,
    InfeasibleSpec,
    InvalidInstance,
    MalformedProfile,
    ParameterInfeasible,
    ParseError,
    SchedulingError,
    StepBudgetExceeded,
)
from .generators import (
    ThreeDMInstance,
    gen_arbitrary_lb,
    gen_exponential,
    gen_global_lb,
    gen_noNE2,
    gen_noNE3,
    gen_poa_r,
    gen_sbpt_tight,
    gen_sdr_lb,
    reduce_3dm,
    reduction_has_ne,
    sample_3dm,
    sample_random,
    solve_3dm_bruteforce,
)
from .mechanisms import (
    density_integral,
    deterioration_density,
    lbdr_priority,
    lbdr_product_bound,
    mechanism_outcome,
    poa_bound,
    sbpt_priority,
    sdr_dynamic_order,
    sdr_priority,
)
from .schedule import Schedule, build_schedule, total_processing
from .solvers import greedy_general, list_scheduling, solve_symmetric, solve_two_machines

__all__ = [name for name in dir() if not name.startswith("_")]

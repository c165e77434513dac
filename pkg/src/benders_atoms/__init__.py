"""Hybrid Benders decomposition MILP solver with QUBO master problems.

The master problem over the binary variables is compiled to a QUBO and
solved by an interchangeable sampler (exact enumeration, simulated
annealing, or an emulated neutral-atom analog device); the linear
subproblem is solved by a built-in simplex that supplies the duals and
infeasibility rays driving the Benders cuts.
"""

from .milp import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    GeneratorConfig,
    MilpSolution,
    OriginalProblem,
    brute_force_solve,
    generate_instances,
    load_instance,
    save_instance,
)

__version__ = "0.1.0"

__all__ = [
    "FEASIBLE",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "GeneratorConfig",
    "MilpSolution",
    "OriginalProblem",
    "brute_force_solve",
    "generate_instances",
    "load_instance",
    "save_instance",
    "__version__",
]

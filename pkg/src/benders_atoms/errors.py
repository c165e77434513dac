"""Exception hierarchy shared across the solver stack."""


class BendersAtomsError(Exception):
    """Base class for all package errors."""


class ParseError(BendersAtomsError):
    """Instance file is malformed or misses required keys."""


class DimensionError(BendersAtomsError):
    """Matrix/vector shapes are mutually inconsistent."""


class SizeError(BendersAtomsError):
    """Problem exceeds a hard size limit of the requested routine."""


class NumericalError(BendersAtomsError):
    """Pivoting degenerated beyond the anti-cycling safeguards."""


class RelaxationInfeasible(BendersAtomsError):
    """A bound-tightening linear relaxation has no feasible point."""


class RelaxationUnbounded(BendersAtomsError):
    """A bound-tightening linear relaxation is unbounded; the value
    cannot be binary encoded."""


class BoundError(BendersAtomsError):
    """A required variable bound is missing or negative."""


class LengthError(BendersAtomsError):
    """Bitstring length does not match the model layout."""


class CapacityError(BendersAtomsError):
    """Fewer candidate positions than atoms to place."""


class NormDriftError(BendersAtomsError):
    """State norm drifted beyond tolerance; the step size must be reduced."""


class BudgetExceeded(BendersAtomsError):
    """Master QUBO needs more qubits than the configured budget."""


class StalledError(BendersAtomsError):
    """The decomposition loop produced a duplicate cut and cannot progress."""


class DuplicateCut(BendersAtomsError):
    """Cut identical to one already stored in the pool."""

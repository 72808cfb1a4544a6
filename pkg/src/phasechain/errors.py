"""Exception taxonomy.

Constraint-style errors (bad inputs, violated preconditions) derive from
ConstraintError and map to exit code 2 / HTTP 422; everything else is a
runtime failure (exit 1 / HTTP 500).
"""


class PhasechainError(Exception):
    """Base class for all package errors."""


class ConstraintError(PhasechainError):
    """A caller-visible contract or configuration constraint was violated."""


class ContractViolationError(ConstraintError):
    """Operation precondition breach: bad dimensions, indices, or arguments."""


class BudgetError(ConstraintError):
    """Opening phase too large: the infinite phase sum would reach pi/2."""


class GenesisConstraintError(ConstraintError):
    """First block must carry r1 = 0 (its bit pair limited to 00 or 01)."""


class CapacityError(ConstraintError):
    """Payload does not fit the codec's fixed 2-bit block capacity."""


class UnknownIndexError(ConstraintError):
    """Codec has no permutation registered for the requested block index."""


class SequencingError(ConstraintError):
    """Block index does not extend the chain contiguously."""


class ScheduleViolationError(ConstraintError):
    """Block phase disagrees with the value the schedule fixes for its index."""


class OracleScaleError(ConstraintError):
    """Explicit state-vector form requested beyond the supported qubit count."""


class TemporalAccessError(ConstraintError):
    """Target qubit was already absorbed; only the last temporal qubit exists."""


class NumericalDegeneracyError(PhasechainError):
    """All measurement outcome probabilities vanished; state/basis mismatch."""

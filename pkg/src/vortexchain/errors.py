"""Exception hierarchy for vortexchain.

Every error carries an ``exit_code`` used by the CLI: 1 for input/validation
problems, 2 for structural infeasibility (the requested object cannot exist),
3 for exhausted simulation budgets.
"""


class VortexChainError(Exception):
    """Base class for all vortexchain errors."""

    exit_code = 1


# --- chain validation ---

class NegativeEntry(VortexChainError):
    """A transition matrix entry is negative beyond tolerance."""


class RowSumViolation(VortexChainError):
    """A transition matrix row does not sum to 1 within tolerance."""


class ZeroSupportState(VortexChainError):
    """The stationary distribution has a non-positive weight where ergodicity was demanded."""


class Reducible(VortexChainError):
    """The chain is reducible; no unique stationary distribution exists."""


class NotStationary(VortexChainError):
    """The supplied distribution is not stationary for the transition matrix."""


class NonErgodic(VortexChainError):
    """The operation requires an ergodic chain and no override was given."""


# --- variance computation ---

class SingularLambda(VortexChainError):
    """The variance kernel solve failed; the chain input is invalid."""


class SlowMixing(VortexChainError):
    """The autocovariance series did not converge within the lag cap."""

    exit_code = 3


class SingularInput(VortexChainError):
    """A matrix required to be invertible is numerically singular."""


class MismatchedStationary(VortexChainError):
    """Chains being compared do not share a stationary distribution."""


# --- vortex construction ---

class NotReversible(VortexChainError):
    """The operation is defined for reversible chains only."""


class CycleTooShort(VortexChainError):
    """A cycle must contain at least three states to carry a flow."""

    exit_code = 2


class ZeroDirection(VortexChainError):
    """The flow direction is identically zero."""

    exit_code = 2


class ZeroFlow(VortexChainError):
    """A non-zero flow is required."""

    exit_code = 2


class ConditionIViolated(VortexChainError):
    """The matrix is not a balanced skew flow (skew-symmetric with zero row sums)."""


class ConditionIIViolated(VortexChainError):
    """The perturbed joint distribution would have negative entries."""

    exit_code = 2


# --- simulation ---

class InvalidStart(VortexChainError):
    """The trajectory start state is out of range."""


class LagTooLarge(VortexChainError):
    """The requested autocovariance lag exceeds what the trajectory supports."""


class InsufficientReplicas(VortexChainError):
    """At least two replicas are required for a variance estimate."""


class BudgetExceeded(VortexChainError):
    """The simulation exceeded its total step budget."""

    exit_code = 3


# --- experiment builders ---

class BadParams(VortexChainError):
    """Invalid experiment parameters."""


class Infeasible(VortexChainError):
    """The requested chain cannot be realized within the documented tolerance."""

    exit_code = 2

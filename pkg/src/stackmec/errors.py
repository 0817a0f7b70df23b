"""Exception hierarchy.

Every error raised on purpose by the package derives from ``StackmecError`` so
callers (the CLI in particular) can map them onto exit codes.
"""


class StackmecError(Exception):
    pass


class ConfigurationError(StackmecError, ValueError):
    """Invalid generation/solver configuration (bad range, zero counts...)."""


class ValidationError(StackmecError, ValueError):
    """A scenario field violates its invariant.

    ``field`` names the offending attribute, e.g. ``"total_data"``.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SchemaError(StackmecError, ValueError):
    """Malformed scenario document (missing section, wrong version)."""


class DomainError(StackmecError, ValueError):
    """Argument outside the domain of a utility function."""


class StructuralError(StackmecError, ValueError):
    """Inconsistent assignment, e.g. a UE linked to two UAVs."""


class DegenerateEconomicsError(StackmecError, ArithmeticError):
    """Closed-form optimal price undefined (negative radicand)."""


class InfeasibleError(StackmecError):
    """No placement/assignment satisfies the capacity or energy limits."""


class RebalanceError(InfeasibleError):
    """Capacity rebalancing exceeded its move budget."""

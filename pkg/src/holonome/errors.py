"""Exception hierarchy shared by all holonome modules."""


class HolonomeError(Exception):
    """Base class for every error raised by this package."""


# --- expression DSL ---------------------------------------------------------

class ExprSyntaxError(HolonomeError):
    """Source text does not match the expression grammar.

    Carries the byte offset of the offending token.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    """Identifier is neither a variable x1..x9 nor a known function."""


class ArityError(ExprSyntaxError):
    """Function called with the wrong number of arguments."""


class DimensionError(ExprSyntaxError):
    """Variable index exceeds the declared ambient dimension."""


class DomainError(HolonomeError):
    """Evaluation hit a singular point (log/sqrt of a negative, division
    by zero, overflow).  Raised eagerly; never reported as a silent NaN."""


# --- matrix groups -----------------------------------------------------------

class GroupInvariantError(HolonomeError):
    """A matrix failed the invariants of its declared structure group."""


class OutOfBranchError(HolonomeError):
    """Matrix logarithm requested outside the principal branch."""


class SingularInputError(HolonomeError):
    """Matrix is too close to singular for the requested projection."""


# --- paths -------------------------------------------------------------------

class OutOfRangeError(HolonomeError):
    """Path parameter outside [0, 1] (or probe step outside its bounds)."""


class EndpointMismatchError(HolonomeError):
    """Juxtaposition endpoints do not match."""


class NotMonotoneError(HolonomeError):
    """Reparametrization is not weakly increasing from 0 to 1."""


# --- connections / transport -------------------------------------------------

class OutsideChartError(HolonomeError):
    """Point (or path) leaves the declared chart domains."""


class SingularGaugeError(HolonomeError):
    """Gauge matrix is singular somewhere on the chart."""


class StepUnderflowError(HolonomeError):
    """Adaptive integrator cannot meet the tolerance with h >= 1e-7."""


# --- reconstruction ----------------------------------------------------------

class OracleFailureError(HolonomeError):
    """A transport oracle raised while probing."""


class VelocityMismatchError(HolonomeError):
    """Paths supplied to the independence check do not share the initial
    point and velocity."""


class IllConditionedBasisError(HolonomeError):
    """Reconstructed horizontal basis is numerically degenerate."""


# --- holonomy ----------------------------------------------------------------

class NotClosedError(HolonomeError):
    """Loop start and end points differ."""


# --- scenarios ---------------------------------------------------------------

class SchemaError(HolonomeError):
    """Scenario document violates the schema.  Carries a path into the
    document, e.g. ``tasks[2].path``."""

    def __init__(self, message, where):
        super().__init__(f"{where}: {message}")
        self.where = where


class ValidationError(HolonomeError):
    """Scenario or connection is well-formed but inconsistent (undeclared
    name, incompatible transition, unknown builtin, ...)."""

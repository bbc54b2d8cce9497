"""Exception taxonomy shared by all qfads modules.

Exit-code classes used by the CLI: UsageError -> 1, ConfigError -> 2,
NumericalError -> 3, CacheError -> 4.
"""


class QfadsError(Exception):
    """Base class for all package errors."""


class UsageError(QfadsError):
    pass


class ConfigError(QfadsError):
    pass


class NumericalError(QfadsError):
    pass


class CacheError(QfadsError):
    pass


# --- configuration / parsing ------------------------------------------------

class ParseError(ConfigError):
    """Malformed config file; carries line number and field when known."""

    def __init__(self, msg, line=None, field=None):
        self.line = line
        self.field = field
        loc = "" if line is None else f" (line {line})"
        fld = "" if field is None else f" [field {field!r}]"
        super().__init__(f"{msg}{loc}{fld}")


class ValidationError(ConfigError):
    pass


# --- geometry ----------------------------------------------------------------

class AmbiguousClass(NumericalError):
    """Causal type of a pair sits within tolerance of a class boundary."""


class NotSpacelikeSeparated(NumericalError):
    pass


class NotTangent(NumericalError):
    pass


class OutOfChartDomain(NumericalError):
    """Carries the violated inequality as text."""


class DegenerateFrame(NumericalError):
    pass


class NotInOPlus(NumericalError):
    pass


# --- groups ------------------------------------------------------------------

class RelatorViolation(ValidationError):
    def __init__(self, residual, factor):
        self.residual = residual
        self.factor = factor
        super().__init__(
            f"relator residual {residual:.3e} in factor {factor} exceeds tolerance")


class NonUnimodular(ValidationError):
    pass


class DepthLimit(NumericalError):
    pass


class NotHyperbolic(NumericalError):
    def __init__(self, factor, trace):
        self.factor = factor
        self.trace = trace
        super().__init__(f"factor {factor} not hyperbolic: |trace| = {abs(trace):.6f} <= 2")


class EmptyBall(NumericalError):
    pass


class FixedBasepoint(NumericalError):
    pass


class SolverNonConvergence(NumericalError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"feasibility solve stalled after {iterations} iterations, residual {residual:.3e}")


# --- series / kernels ----------------------------------------------------------

class DivergentParameter(NumericalError):
    pass


class DegenerateClass(NumericalError):
    pass


class PoleProximity(NumericalError):
    pass


class SlowConvergence(NumericalError):
    pass


class LightConeProximity(NumericalError):
    pass


class IntegerPole(NumericalError):
    pass


class LightConeOnSupport(NumericalError):
    pass


class ChartBoundary(NumericalError):
    pass


# --- special functions ---------------------------------------------------------

class ParameterPole(NumericalError):
    pass


class TransformUnreachable(NumericalError):
    pass


class PoleAtNonPositiveInteger(NumericalError):
    pass


class ResonantDenominator(NumericalError):
    pass


class QuadratureNonConvergent(NumericalError):
    pass


class DegenerateS(NumericalError):
    pass

"""Exception hierarchy shared by every odecirc module."""


class OdeCircError(Exception):
    """Base class for all library errors."""


class InconsistentArity(OdeCircError):
    pass


class ValidationError(OdeCircError):
    """Raised when a term fails validation; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        msg = "; ".join(str(d) for d in self.diagnostics if d.severity == "error")
        super().__init__(msg or "validation failed")


class SchemaViolation(OdeCircError):
    """A schema side condition failed at evaluation time.

    ``kind`` is one of ``"BooleanRange"`` or ``"KZeroWithHOne"``.
    """

    def __init__(self, kind, message=""):
        self.kind = kind
        super().__init__(f"{kind}: {message}" if message else kind)


class MissingOracle(OdeCircError):
    pass


class BoundExceeded(OdeCircError):
    pass


class NotEssentiallyConstant(OdeCircError):
    pass


class ParseError(OdeCircError):
    def __init__(self, message, line=None, column=None, field=None):
        self.line = line
        self.column = column
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnknownStdName(ParseError):
    pass


class UnboundOracle(OdeCircError):
    pass


class PlanTooNarrow(OdeCircError):
    pass


class ModeError(OdeCircError):
    """A construct needs a circuit variant or preset that was not selected."""


class WidthMismatch(OdeCircError):
    pass


class InvalidCircuit(OdeCircError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "invalid circuit")


class IndexSpaceTooSmall(OdeCircError):
    pass


class VariantMismatch(OdeCircError):
    pass


class NonBooleanStep(OdeCircError):
    pass

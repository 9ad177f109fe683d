"""Exception hierarchy."""


class DeltaVarError(Exception):
    pass


class TimeScaleError(DeltaVarError, ValueError):
    pass


class TooFewPoints(TimeScaleError):
    pass


class NotOnTimeScale(TimeScaleError):
    pass


class DomainMismatch(DeltaVarError, ValueError):
    """Grid functions living on different domains were combined."""


class ExprError(DeltaVarError):
    pass


class ParseError(ExprError, ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"{message} at column {column}")
        self.column = column


class UnknownIdentifier(ParseError):
    pass


class OrderMismatch(ExprError, ValueError):
    pass


class UnboundVariable(ExprError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the domain of an operation (log of 0, division by zero, ...)."""

    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message}: {subexpr}")
        self.subexpr = subexpr


class ProblemError(DeltaVarError, ValueError):
    pass


class WrongPointCount(ProblemError):
    pass


class RankDeficient(DeltaVarError, ArithmeticError):
    pass


class NonFiniteValue(DeltaVarError, ArithmeticError):
    pass

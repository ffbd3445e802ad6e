"""Exception hierarchy shared by all curvelab modules."""


class CurvelabError(Exception):
    """Base class; the CLI maps subclasses onto exit codes."""


class DSLError(CurvelabError, ValueError):
    """Problem with surface definition source text."""

    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.line = self.col = None
        if pos is not None and text is not None:
            self.line = text.count("\n", 0, pos) + 1
            self.col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {self.line}, column {self.col})"
        elif pos is not None:
            message = f"{message} (offset {pos})"
        super().__init__(message)


class DSLSyntaxError(DSLError):
    pass


class ArityError(DSLError):
    pass


class UnknownFunctionError(DSLError):
    pass


class UnknownIdentifierError(DSLError):
    pass


class DimensionMismatchError(DSLError):
    pass


class NumericError(CurvelabError, ArithmeticError):
    """A numerical failure (exit code 3 in the CLI)."""


class EvaluationSingularity(NumericError):
    """Division by zero, log of a nonpositive number, etc. at an evaluation point."""


class DegenerateDifferential(NumericError):
    """The immersion differential has rank < 2 at the point."""


class ConformalityError(NumericError):
    """The parametrization is not isothermal where it is required to be."""


class OrderUnavailable(NumericError):
    """Requested flag order is not available at this point."""


class IdentityInapplicable(NumericError):
    """An identity check cannot be evaluated for this surface."""


class CompatibilityError(NumericError):
    """Frame integration detected a Gauss-Codazzi-Ricci violation."""


class GridError(CurvelabError, ValueError):
    """Grid too coarse, mismatched, or unsuitable for the operation."""


class InvalidInput(CurvelabError, ValueError):
    """Invalid user input (weights, angles, tangent pairs...)."""

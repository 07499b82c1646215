"""Semantic exception hierarchy shared by all modules."""


class DecouplingLabError(Exception):
    """Base class for all library errors."""


class ExtRealArithmeticError(DecouplingLabError):
    """Raised on the rejected operation (+inf) + (-inf)."""


class EmptyInterior(DecouplingLabError):
    """Region has no interior points."""


class InfiniteAtBase(DecouplingLabError):
    """A function value required to be finite at a base point is not."""


class PreconditionFailed(DecouplingLabError):
    """A declared precondition does not hold on any sample."""


class EmptyCoupling(DecouplingLabError):
    """No sampled point with finite coupled sum."""


class NotInBox(DecouplingLabError):
    pass


class InvalidBounds(DecouplingLabError):
    pass


class EmptySet(DecouplingLabError):
    pass


class JacobianUnavailable(DecouplingLabError):
    pass


class AllInfinite(DecouplingLabError):
    """Every value on a finite cloud is +inf."""


class NotBoundedBelow(DecouplingLabError):
    pass


class QuasiuniformEpsMinNotCertified(DecouplingLabError):
    pass


class GammaSearchFailed(DecouplingLabError):
    """Coupling-penalty weight search exceeded its doubling cap."""


class NoSubgradOracle(DecouplingLabError):
    pass


class NotASubgradient(DecouplingLabError):
    pass


class BaseNotInIntersection(DecouplingLabError):
    pass


class NonSeparableObjective(DecouplingLabError):
    pass


class UnknownCase(DecouplingLabError):
    pass


class ProblemSyntaxError(DecouplingLabError):
    """Problem-file syntax error carrying position information."""

    def __init__(self, message, line=None, column=None, token=None):
        self.line = line
        self.column = column
        self.token = token
        where = ""
        if line is not None:
            where = f" at line {line}"
            if column is not None:
                where += f", column {column}"
        tok = f" (near {token!r})" if token else ""
        super().__init__(f"{message}{where}{tok}")


class UndefinedSymbol(DecouplingLabError):
    pass


class DimensionMismatch(DecouplingLabError):
    pass

"""Exception types shared across the toolkit."""


class NmxError(Exception):
    pass


class NoPrimeInRange(NmxError):
    pass


class DivisionByZero(NmxError, ZeroDivisionError):
    pass


class GeneratorSearchInfeasible(NmxError):
    pass


class DimensionMismatch(NmxError, ValueError):
    pass


class InvalidCoordinate(NmxError, ValueError):
    pass


class FixedPointAdversary(NmxError, ValueError):
    """An adversary mapped some seed to itself."""


class EnumerationBudgetExceeded(NmxError):
    pass


# the harness spells it this way
BudgetExceeded = EnumerationBudgetExceeded


class EmptySubset(NmxError, ValueError):
    pass


class ZeroSource(NmxError, ValueError):
    pass


class ZeroCoefficient(NmxError, ValueError):
    pass


class OutputTooWide(NmxError, ValueError):
    pass


class IndivisibleBlocks(NmxError, ValueError):
    pass


class SeedWidthMismatch(NmxError, ValueError):
    pass


class WidthMismatch(NmxError, ValueError):
    pass


class InsufficientRandomness(NmxError):
    pass

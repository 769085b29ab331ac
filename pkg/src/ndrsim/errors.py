"""Exception types shared across the package."""


class NDRError(Exception):
    """Base class for every error raised by ndrsim."""


class SymbolNotInAlphabet(NDRError, ValueError):
    pass


class UnknownSystem(NDRError, KeyError):
    def __str__(self):
        return f"unknown formal system: {self.args[0]!r}"


class NotPrefixFree(NDRError, ValueError):
    pass


class BudgetExhaustedError(NDRError):
    """Raised where a halting run is required but the step budget ran out."""


class StateSpaceTooLarge(NDRError):
    pass


class QuestionNeverAnswered(NDRError):
    pass


class ConditioningEventNeverObserved(NDRError):
    pass


class ConditioningListNeverReached(NDRError):
    pass


class PrecedenceViolated(NDRError):
    pass


class ConditioningUndefined(NDRError, ZeroDivisionError):
    pass


class ZeroDenominator(NDRError, ZeroDivisionError):
    pass


class InvalidWeights(NDRError, ValueError):
    pass


class DeltaConditionViolated(NDRError):
    pass


class WffNeverAnswered(NDRError):
    pass


class ConfigError(NDRError, ValueError):
    """A config or input file could not be parsed; message carries the location."""


class IndexOutOfRange(NDRError, IndexError):
    pass

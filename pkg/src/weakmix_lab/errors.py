"""Exception hierarchy shared by all modules."""


class WeakmixError(Exception):
    """Base class for every error raised by the library."""


class CapExceeded(WeakmixError):
    """A word expansion would exceed the configured memory cap."""


class UnknownSymbol(WeakmixError):
    pass


class SeedNotExtendable(WeakmixError):
    """The seed letter's image does not start with the seed."""


class NotAFactor(WeakmixError):
    """The word does not occur in the language of the subshift."""


class AmbiguousContext(WeakmixError):
    """Recoding alpha -> beta needs the symbol preceding a leading 0."""


class DimensionMismatch(WeakmixError):
    pass


class StageCapExceeded(WeakmixError):
    """The requested computation needs a tower stage above ``max_stage``."""


class UndefinedPoint(WeakmixError):
    """The Chacon map is not defined at this point up to ``max_stage``."""


class EmptyCell(WeakmixError):
    pass


class WordTooShort(WeakmixError):
    pass


class DepthTooShallow(WeakmixError):
    """Some image beta^m(b) is shorter than the cylinder rank."""


class NoReturnWords(WeakmixError):
    pass


class NotDecomposable(WeakmixError):
    pass


class CesaroBoundViolated(WeakmixError):
    """The Cesaro means of the input series exceed the supplied bound."""


class ConfigInvalid(WeakmixError):
    pass


class BumpConditionFailed(WeakmixError):
    """The bump inequality fails; lower-bound experiments only flag it."""


class ComputeError(WeakmixError):
    """A computation could not be completed (numerical certification failed)."""

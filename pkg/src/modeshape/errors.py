"""Exception hierarchy. Every error raised by the package derives from ModeshapeError."""


class ModeshapeError(Exception):
    """Base class."""


# ingestion / windows
class MalformedInput(ModeshapeError, ValueError):
    pass


class GapDetected(MalformedInput):
    def __init__(self, row, col, message=None):
        self.row = row
        self.col = col
        super().__init__(message or f"missing or non-finite value at row {row}, column {col}")


class TimeOrderError(MalformedInput):
    pass


class WindowTooLong(ModeshapeError, ValueError):
    pass


# signal processing
class EmptyInput(ModeshapeError, ValueError):
    pass


class WindowTooShortAfterTaper(ModeshapeError, ValueError):
    pass


class ZeroPower(ModeshapeError, ValueError):
    pass


class NonPositiveAmplitude(ModeshapeError, ValueError):
    pass


class SingularRegression(ModeshapeError, ValueError):
    pass


# decomposition
class TooFewSamples(ModeshapeError, ValueError):
    pass


class NonFiniteInput(ModeshapeError, ValueError):
    pass


class NoComponentsKept(ModeshapeError):
    pass


# observations / clustering
class ZeroShape(ModeshapeError, ValueError):
    pass


class TooManyClusters(ModeshapeError, ValueError):
    pass


class UndefinedSilhouette(ModeshapeError, ValueError):
    pass


class NoObservations(ModeshapeError):
    pass


# synthesis
class SamplingTooSlow(ModeshapeError, ValueError):
    pass


class InvalidScenario(ModeshapeError, ValueError):
    pass

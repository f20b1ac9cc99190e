"""Exception hierarchy shared by all modules."""


class PianoCoverError(Exception):
    """Base class for every error raised by this package."""


class MalformedFile(PianoCoverError, ValueError):
    pass


class UnsupportedFormat(PianoCoverError, ValueError):
    pass


class DanglingNoteOnWarning(UserWarning):
    """Note-on events without a matching note-off were truncated at end of track."""

    def __init__(self, count):
        super().__init__(f"{count} dangling note-on event(s) truncated at end of track")
        self.count = count


class NoDownbeat(PianoCoverError, ValueError):
    pass


class NonMonotoneBeats(PianoCoverError, ValueError):
    pass


class InvalidMeter(PianoCoverError, ValueError):
    pass


class PositionOutOfRange(PianoCoverError, IndexError):
    pass


class GrammarViolation(PianoCoverError, ValueError):
    def __init__(self, message, bar=None):
        super().__init__(message if bar is None else f"bar {bar}: {message}")
        self.bar = bar


class UnknownId(PianoCoverError, KeyError):
    pass


class InsufficientData(PianoCoverError, ValueError):
    pass


class EmptyInput(PianoCoverError, ValueError):
    pass


class DegeneratePath(PianoCoverError, ValueError):
    pass


class BoundaryOutOfRange(PianoCoverError, ValueError):
    pass


class InsufficientOnsets(PianoCoverError, ValueError):
    pass

"""Exception hierarchy shared by every stage of the toolkit."""


class SpkidError(Exception):
    """Base class. The CLI maps any subclass to exit status 2."""


class ManifestError(SpkidError):
    pass


class UnsupportedFormatError(SpkidError):
    pass


class EmptyUtteranceError(SpkidError):
    pass


class DegenerateFrameError(SpkidError):
    pass


class InsufficientDataError(SpkidError):
    pass


class DimensionMismatchError(SpkidError, ValueError):
    pass


class CombineError(SpkidError):
    pass


class SingularModelError(SpkidError):
    pass


class ProtocolError(SpkidError):
    """Corpus does not cover a requested (speaker, language, split) cell."""

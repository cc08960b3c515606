"""Exception hierarchy shared by all toolkit modules."""


class ForgeError(Exception):
    """Base class for every error raised by the toolkit."""


class InputFormatError(ForgeError):
    """Input could not be parsed. The CLI maps this family to exit code 2."""


class SemanticError(ForgeError):
    """Input parsed but cannot be scored/processed. CLI exit code 3."""


# audiocore
class NotFound(InputFormatError, FileNotFoundError):
    pass


class UnsupportedEncoding(InputFormatError):
    pass


class MultiChannel(InputFormatError):
    pass


class IoFailure(ForgeError, OSError):
    pass


class BadConfig(ForgeError, ValueError):
    pass


class RateMismatch(ForgeError, ValueError):
    pass


class SilentInputWarning(UserWarning):
    """Peak normalization was asked to scale an all-zero clip."""


# augment
class ZoneOutOfRange(ForgeError, ValueError):
    pass


class SilentNoise(ForgeError, ValueError):
    pass


# corpus
class MalformedDocument(InputFormatError):
    pass


class NegativeTime(MalformedDocument):
    pass


class OutOfRange(ForgeError, ValueError):
    pass


class EmptyTranscript(ForgeError, ValueError):
    pass


class InconsistentDecision(ForgeError, ValueError):
    pass


class ProviderError(ForgeError):
    """An endpoint/replacement provider failed after exhausting retries."""


# metrics / diarpost
class MalformedLine(InputFormatError):
    pass


class EmptyReference(SemanticError):
    pass


class EmptyCorpus(SemanticError):
    pass


class UnpairedRecording(InputFormatError):
    pass

"""Exception types shared across the platform.

Everything raised on purpose derives from :class:`OpenPdaError` so the
service layer can map failures to HTTP codes in one place.
"""


class OpenPdaError(Exception):
    """Base class for all deliberate errors."""


# language front-end

class EmptyInput(OpenPdaError):
    pass


class OversizeInput(OpenPdaError):
    pass


class UnknownLanguage(OpenPdaError):
    pass


# embeddings / distance

class MalformedHeader(OpenPdaError):
    pass


class DimensionMismatch(OpenPdaError):
    pass


class EmptyVocabulary(OpenPdaError):
    pass


class AllWordsDropped(OpenPdaError):
    """Nothing in the utterance survives vocabulary filtering."""


class SizeExceeded(OpenPdaError):
    pass


# app registry

class SchemaViolation(OpenPdaError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DuplicateIntent(OpenPdaError):
    pass


class UnreachableIntent(OpenPdaError):
    pass


class TwoParamsSameType(OpenPdaError):
    pass


class NameConflict(OpenPdaError):
    pass


class NotFound(OpenPdaError):
    pass


# message bus

class BindFailure(OpenPdaError):
    pass


class NotConnected(OpenPdaError):
    pass


class BadFilter(OpenPdaError):
    pass


# home agent / simulator

class UnknownObject(OpenPdaError):
    pass


class MissingParam(OpenPdaError):
    pass


class UnknownRelay(OpenPdaError):
    pass


class MalformedReading(OpenPdaError):
    pass


class ConfigError(OpenPdaError):
    pass

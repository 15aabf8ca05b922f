"""Exception hierarchy.

Every error carries the process exit code the command line maps it to:
1 for validation problems, 2 for data problems, 3 for I/O problems.
"""


class CrtkError(Exception):
    exit_code = 2


class ValidationError(CrtkError):
    """Bad configuration, lexicon content or arguments."""

    exit_code = 1


class DataError(CrtkError):
    exit_code = 2


class InputFileError(CrtkError):
    """A file could not be read or written."""

    exit_code = 3


class EmptyInputError(DataError):
    pass


class EmptyVocabularyError(DataError):
    pass


class OOVError(DataError, KeyError):
    def __init__(self, token, context=None):
        self.token = token
        msg = f"token {token!r} is not in the vocabulary"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)

    def __str__(self):
        return self.args[0]


class DegenerateVectorError(DataError):
    pass


class ResourceError(DataError):
    pass


class CorruptFileError(DataError):
    """A binary artifact failed its magic, version, length or checksum checks."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class CorruptModelError(CorruptFileError):
    pass


class UndefinedAccuracyError(DataError):
    pass


class EmptyMatrixError(DataError):
    pass


class MissingArtifactError(DataError):
    """A mid-pipeline stage was asked to run before its upstream stage."""

    def __init__(self, artifact, producer):
        self.artifact = artifact
        self.producer = producer
        super().__init__(
            f"missing artifact {artifact}; run the {producer!r} subcommand first"
        )

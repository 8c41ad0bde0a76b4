"""Exception hierarchy shared across the package."""


class TableQAError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedFormatError(TableQAError):
    """The table file extension is not one we can read."""


class MalformedFileError(TableQAError):
    """The table file exists but cannot be parsed into a rectangular table."""


class LlmError(TableQAError):
    """A chat backend failed (transport, bad status, or empty reply).

    ``kind`` is one of ``transport``, ``status``, ``empty``, ``script``.
    """

    def __init__(self, message: str, kind: str = "transport"):
        super().__init__(message)
        self.kind = kind


class JsonExtractError(TableQAError):
    """No parseable JSON value could be recovered from the model output."""


class EmptyDecompositionError(TableQAError):
    """The model returned zero usable sub-queries, even after a retry."""


class ColumnNotFoundError(TableQAError):
    """A referenced column does not exist in the table."""


class NonStringColumnError(TableQAError):
    """Entity retrieval was pointed at a non-text column; caller should skip it."""


class SelectionNotInCandidatesError(TableQAError):
    """The model picked an alignment value outside the candidate set."""


class CoercionError(TableQAError):
    """A raw answer string cannot be coerced to the requested answer kind."""


class GoldCoercionError(CoercionError):
    """A gold answer string cannot be coerced to its declared kind."""


class ManifestMissingError(TableQAError):
    """The dataset root has no QA manifest file."""


class TableMissingError(TableQAError):
    """A dataset directory referenced by the manifest has no table file."""


class InvalidStateError(TableQAError):
    """An operation was called on a reasoning state that does not allow it."""


class ConfigError(TableQAError):
    """The run configuration is malformed or internally inconsistent."""

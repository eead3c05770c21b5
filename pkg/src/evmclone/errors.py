"""Exception hierarchy for the evmclone toolkit."""


class EvmCloneError(Exception):
    """Base class for all toolkit errors."""


class EmptyBytecodeError(EvmCloneError):
    """Raised when an operation receives empty bytecode."""


class SplitNotFoundError(EvmCloneError):
    """Raised when input declared as creation code has no deploy-return boundary."""


class DegeneratePairError(EvmCloneError):
    """Raised when both fingerprints of a pair are empty."""


class UnknownRepresentativeError(EvmCloneError):
    """Raised when a cluster member has no duplicate group."""


class EmptyMatchingError(EvmCloneError):
    """Raised when a weight matrix with no rows or no columns is matched."""


class TemplateOnlyError(EvmCloneError):
    """Raised when a DApp has no contracts left after template exclusion."""


class MissingFingerprintError(EvmCloneError):
    """Raised when a contract id is absent from the fingerprint store."""


class MissingProfileError(EvmCloneError):
    """Raised when a vulnerability profile is absent for a contract in a pair."""


class CorpusIoError(EvmCloneError):
    """Raised when a corpus or report file cannot be read or written."""


class RpcError(EvmCloneError):
    """Raised when a node RPC call fails after the configured retries."""


class ProtocolError(EvmCloneError):
    """Raised when a node RPC response does not have the expected shape."""


class VersionError(EvmCloneError):
    """Raised when a persisted database carries an unsupported format version."""

"""Exception hierarchy shared by all modules."""


class PseudonymError(Exception):
    """Base class for every error raised by this package."""


class KeyLengthError(PseudonymError, ValueError):
    pass


class EntropyUnavailable(PseudonymError, RuntimeError):
    pass


class UnknownSuite(PseudonymError, ValueError):
    pass


# identifier codec

class IdentifierError(PseudonymError, ValueError):
    pass


class EmptyAttribute(IdentifierError):
    pass


class AttributeTooLong(IdentifierError):
    pass


class TooManyAttributes(IdentifierError):
    pass


class MalformedEncoding(IdentifierError):
    pass


# tree / proofs

class DuplicateIdentifier(PseudonymError, ValueError):
    pass


class IndexOutOfRange(PseudonymError, IndexError):
    pass


class MalformedPseudonym(PseudonymError, ValueError):
    pass


class MalformedProof(PseudonymError, ValueError):
    """Raised by the proof parser; ``field`` names the offending element."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


# keystore

class KeystoreError(PseudonymError):
    pass


class DuplicateLabel(KeystoreError, ValueError):
    pass


class UnknownLabel(KeystoreError, LookupError):
    pass


class StorageFailure(KeystoreError, OSError):
    pass


class BadPassphrase(StorageFailure):
    pass


# simulation

class ScenarioError(PseudonymError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(f"step {step}: {message}" if step is not None else message)

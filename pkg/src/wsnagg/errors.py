"""Exception types shared across the package."""


class WsnAggError(Exception):
    """Base class for all package errors."""


class ConfigError(WsnAggError, ValueError):
    """Invalid configuration value."""


class MissingRingError(WsnAggError):
    """A node appears in the radio adjacency but has no key ring."""


class NoSecureLinkError(WsnAggError):
    """A pairwise encrypted exchange was requested without an established key."""


class SingularMatrixError(WsnAggError):
    """The seed matrix is not invertible (repeated seeds)."""


class CorruptedTranscriptError(WsnAggError):
    """An exact recovery produced a non-integer solution; the transcript is inconsistent."""


class ProtocolAbort(WsnAggError):
    """A hardened-mode validation check rejected the transcript.

    ``check`` names the failed check, ``offender`` the rejected value.
    """

    def __init__(self, check: str, offender, message: str | None = None):
        self.check = check
        self.offender = offender
        super().__init__(message or f"{check} rejected value {offender}")


class SeedCheckError(ProtocolAbort):
    """A public seed is not strictly below the sum of its peers."""

    def __init__(self, offender, message=None):
        super().__init__("seed-triangle", offender, message)


class ShareCheckError(ProtocolAbort):
    """A share value is not strictly below the sum of its peers."""

    def __init__(self, offender, message=None):
        super().__init__("share-triangle", offender, message)


class AttackFailedError(WsnAggError):
    """An attack hit a structural impossibility (negative coefficient, inconsistent solve)."""

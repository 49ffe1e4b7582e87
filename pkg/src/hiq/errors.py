"""Exception hierarchy shared by every stage of the codec."""

from __future__ import annotations


class HiqError(Exception):
    """Base class for all codec errors."""


class InvalidParameter(HiqError, ValueError):
    pass


class LayerMismatch(HiqError, ValueError):
    pass


class CapacityExceeded(HiqError):
    """Payload does not fit; ``max_payload`` carries the largest size that does."""

    def __init__(self, message: str, max_payload: int | dict | None = None):
        super().__init__(message)
        self.max_payload = max_payload


class BlockDecodeFailure(HiqError):
    """More codeword errors than the block can correct."""


class FormatUnreadable(HiqError):
    pass


class LocalizationFailed(HiqError):
    """Fewer than three finder patterns survived detection."""


class DegenerateConfiguration(HiqError, ValueError):
    pass


class InvalidWhite(HiqError, ValueError):
    pass


class WhiteEstimationFailure(HiqError):
    pass


class InsufficientData(HiqError, ValueError):
    pass


class UndefinedMetrics(HiqError, ValueError):
    pass


class FrameRejected(HiqError):
    """A projected sampling point fell outside the image."""

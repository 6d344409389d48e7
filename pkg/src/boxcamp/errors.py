"""Exception types shared across the toolkit."""


class BoxcampError(Exception):
    """Base class for all toolkit errors."""


class ParseError(BoxcampError):
    """A document could not be parsed; the message carries the location."""


class ReferentialIntegrityError(BoxcampError):
    """An entry points at an image or category that does not exist."""

    def __init__(self, message: str, offending_ids=()):
        super().__init__(message)
        self.offending_ids = list(offending_ids)


class ValidationError(BoxcampError):
    """A value violates a domain invariant."""


class FoldViolationError(BoxcampError):
    """An operation targets an image outside the fold it is allowed in."""


class StageError(BoxcampError):
    """The campaign is not in a stage that permits the operation."""


class StaleReferenceError(BoxcampError):
    """A remove targets a box ref that no longer exists (UI desync)."""


class IncompleteCampaignError(BoxcampError):
    """Finalize was called while images are still pending."""

    def __init__(self, message: str, pending_ids=()):
        super().__init__(message)
        self.pending_ids = list(pending_ids)


class LogIntegrityError(BoxcampError):
    """The event log violates ordering or schema constraints."""


class ExtrapolationError(BoxcampError):
    """A quality curve was queried outside its measured range."""


class ClampWarning(UserWarning):
    """A parsed value was nudged back into its legal range."""

"""Exception types shared across the package."""


class SilentFrameError(ValueError):
    """Raised when a correlator is handed an all-zero frame.

    Callers treat the frame as non-speech rather than aborting a run.
    """


class UnidentifiableError(ValueError):
    """Raised when a fit has no information to pin down its parameter
    (e.g. ear-distance calibration from zero-angle observations only)."""

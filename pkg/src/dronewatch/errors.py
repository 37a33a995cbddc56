"""Exception types shared across the toolkit."""


class FormatError(ValueError):
    """Malformed or truncated image file."""


class DimensionMismatch(ValueError):
    """Two rasters that must share dimensions do not."""


class EmptyBox(ValueError):
    """A box operation produced zero area."""


class EmptyAsset(ValueError):
    """Foreground asset has no pixel with alpha > 0."""


class NoValidPlacement(RuntimeError):
    """No placement satisfying the in-frame coverage constraint was found."""


class ShapeError(ValueError):
    """Tensor shape does not match what the operation requires."""


class LengthMismatch(ValueError):
    """Paired sequences differ in length."""


class MissingScore(ValueError):
    """Detection lacks the confidence score required for ranking."""


class UpdateBeforeInit(RuntimeError):
    """Tracker update() called before init()."""


class BadParams(ValueError):
    """Calibration or config parameters outside their valid domain."""

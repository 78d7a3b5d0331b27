"""Error types shared across the package."""


class WalkwiseError(Exception):
    """Base class for package errors."""


class CapacityError(WalkwiseError):
    """A level would need more raw steps than its safety cap allows.

    The cap is 16 * K * 4**m raw steps for level m when covering horizon
    K; waiting-time sums have geometric tails, so hitting it signals a
    logic error or an absurd request, and the build reports it instead
    of silently truncating.
    """

    def __init__(self, level: int, needed: int, cap: int):
        self.level = level
        self.needed = needed
        self.cap = cap
        super().__init__(
            f"level {level} would need {needed} raw steps, cap is {cap}"
        )


class InsufficientInputError(WalkwiseError):
    """An operation ran out of prepared input (bridges, passages, sums)."""

    def __init__(self, what: str, needed: int, available: int):
        self.what = what
        self.needed = needed
        self.available = available
        super().__init__(f"need {needed} {what}, have {available}")

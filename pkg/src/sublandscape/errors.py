"""Exception types shared by all modules.

Every error carries a short machine-readable ``code`` (e.g. ``"empty-set"``)
so the CLI can map it to an exit status without parsing messages.
"""


class SublandscapeError(ValueError):
    """Validation failure on user-supplied input."""

    exit_code = 2

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class BudgetError(SublandscapeError):
    """A resource budget (simplex count, solver size) would be exceeded."""

    exit_code = 3


class SubsampleError(SublandscapeError):
    """Wraps an error raised while processing one subsample."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        code = getattr(cause, "code", "subsample-failed")
        super().__init__(code, f"subsample {index}: {cause}")

"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field path."""


class NumericError(RuntimeError):
    """Numerical breakdown (non-finite objective, indefinite correlation, ...).

    The optimizer attaches the offending state snapshot as ``.state`` when
    one is available.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state

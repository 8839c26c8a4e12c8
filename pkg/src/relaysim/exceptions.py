"""Exception types raised by relaysim."""


class DegenerateChannelError(ValueError):
    """A channel realization makes the requested operation undefined.

    Raised for measure-zero events such as a zero-norm downlink vector
    handed to the beamforming precoder.
    """


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its requested accuracy."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        info = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({info})"

"""Exception hierarchy shared by the simulator, protocol and front ends."""


class GubqcError(Exception):
    """Root of every error raised by this package."""


class SizeError(GubqcError, ValueError):
    """Register size, qubit index or operand shape out of range."""


class EnumerationError(GubqcError):
    """An exhaustive enumeration was refused (cap exceeded or continuous group)."""


class ConfigError(GubqcError, ValueError):
    """A configuration or precondition violation, naming the offending key."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ProtocolError(GubqcError):
    """The session left the message grammar and was aborted."""


class FrameDecodeError(ProtocolError):
    def __init__(self, message: str, offset: int):
        self.reason = message
        self.offset = offset
        super().__init__(f"frame decode error at offset {offset}: {message}")


class TransportError(ProtocolError):
    """The peer went away or could not be reached."""


class NormalizationError(GubqcError, ValueError):
    """Weights, norms or density-matrix invariants do not hold."""

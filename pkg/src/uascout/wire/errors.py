"""Codec error types.

Every malformed, truncated or hostile input surfaces as one of these; the
decoder never lets a stdlib exception (struct.error, UnicodeDecodeError, ...)
escape to callers.
"""


class CodecError(Exception):
    """Base class for all encode/decode failures."""


class OversizeValue(CodecError):
    """A string, bytestring or array exceeds the configured length limit."""


class Truncated(CodecError):
    """Buffer ends before the declared length of the value."""


class Malformed(CodecError):
    """Structurally invalid input: bad UTF-8, illegal tag, reserved bits."""


class FrameTooLarge(CodecError):
    """Frame body would exceed the configured maximum frame size."""


class UnknownMessageType(CodecError):
    """Transport frame carries a tag outside HEL/ACK/ERR/OPN/MSG/CLO."""


class SizeMismatch(CodecError):
    """Frame size field disagrees with the actual number of octets."""


class UnsupportedService(CodecError):
    """Type id outside the supported service set."""


class ServiceFaultError(CodecError):
    """Server answered with a ServiceFault or a failed service result.

    Carries the status code so callers can react to specific codes
    (Bad_TooManySessions drives the session-exhaustion check, the
    identity-rejection codes drive the authentication tests).
    """

    def __init__(self, code: int, message: str = ""):
        self.code = code
        detail = message or "service fault"
        super().__init__(f"{detail} (status 0x{code:08X})")

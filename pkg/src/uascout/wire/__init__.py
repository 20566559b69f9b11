"""Binary codec for the OPC UA TCP protocol subset used by the toolkit."""

from uascout.wire.errors import (
    CodecError,
    FrameTooLarge,
    Malformed,
    OversizeValue,
    ServiceFaultError,
    SizeMismatch,
    Truncated,
    UnknownMessageType,
    UnsupportedService,
)
from uascout.wire.values import (
    ExtensionBody,
    LocalizedText,
    NodeRef,
    ValueKind,
    WireValue,
)
from uascout.wire.frames import TransportFrame, decode_frame, encode_frame
from uascout.wire.codec import DecodeLimits, decode_value, encode_value

__all__ = [
    "CodecError",
    "DecodeLimits",
    "ExtensionBody",
    "FrameTooLarge",
    "LocalizedText",
    "Malformed",
    "NodeRef",
    "OversizeValue",
    "ServiceFaultError",
    "SizeMismatch",
    "TransportFrame",
    "Truncated",
    "UnknownMessageType",
    "UnsupportedService",
    "ValueKind",
    "WireValue",
    "decode_frame",
    "decode_value",
    "encode_frame",
    "encode_value",
]

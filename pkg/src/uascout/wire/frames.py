"""Transport frame envelope: 3-octet tag, chunk flag, 4-octet size, body.

The size field counts the whole frame including its 8-octet header. Unknown
tags and size disagreements are rejected outright - a peer that sends them
is not speaking this protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from uascout.wire.errors import (
    FrameTooLarge,
    Malformed,
    SizeMismatch,
    Truncated,
    UnknownMessageType,
)

HEADER_SIZE = 8
DEFAULT_MAX_FRAME = 65535


class MessageType(Enum):
    HELLO = b"HEL"
    ACKNOWLEDGE = b"ACK"
    ERROR = b"ERR"
    OPEN_CHANNEL = b"OPN"
    MESSAGE = b"MSG"
    CLOSE_CHANNEL = b"CLO"


class ChunkFlag(Enum):
    FINAL = b"F"
    INTERMEDIATE = b"C"
    ABORT = b"A"


_TYPES = {t.value: t for t in MessageType}
_FLAGS = {f.value: f for f in ChunkFlag}


@dataclass(frozen=True)
class TransportFrame:
    message_type: MessageType
    chunk_flag: ChunkFlag
    body: bytes

    @property
    def size(self) -> int:
        return HEADER_SIZE + len(self.body)


def encode_frame(frame: TransportFrame, max_frame: int = DEFAULT_MAX_FRAME) -> bytes:
    if frame.size > max_frame:
        raise FrameTooLarge(f"frame of {frame.size} octets exceeds limit {max_frame}")
    return (
        frame.message_type.value
        + frame.chunk_flag.value
        + frame.size.to_bytes(4, "little")
        + frame.body
    )


def decode_frame(buf: bytes, max_frame: int = DEFAULT_MAX_FRAME) -> TransportFrame:
    """Decode exactly one frame; buf must contain the whole frame and no more."""
    if len(buf) < HEADER_SIZE:
        raise Truncated(f"frame header needs {HEADER_SIZE} octets, have {len(buf)}")
    tag, flag = buf[0:3], buf[3:4]
    message_type = _TYPES.get(tag)
    if message_type is None:
        raise UnknownMessageType(f"unknown message type tag {tag!r}")
    chunk_flag = _FLAGS.get(flag)
    if chunk_flag is None:
        raise Malformed(f"unknown chunk flag {flag!r}")
    declared = int.from_bytes(buf[4:8], "little")
    if declared > max_frame:
        raise FrameTooLarge(f"declared size {declared} exceeds limit {max_frame}")
    if declared != len(buf):
        raise SizeMismatch(f"declared size {declared}, actual {len(buf)}")
    return TransportFrame(message_type, chunk_flag, buf[HEADER_SIZE:])


def peek_frame_size(header: bytes, max_frame: int = DEFAULT_MAX_FRAME) -> int:
    """Validate a frame header and return the declared total size.

    Used by socket readers to learn how many octets to pull before calling
    decode_frame on the complete buffer.
    """
    if len(header) < HEADER_SIZE:
        raise Truncated("incomplete frame header")
    if header[0:3] not in _TYPES:
        raise UnknownMessageType(f"unknown message type tag {header[0:3]!r}")
    if header[3:4] not in _FLAGS:
        raise Malformed(f"unknown chunk flag {header[3:4]!r}")
    declared = int.from_bytes(header[4:8], "little")
    if declared < HEADER_SIZE:
        raise SizeMismatch(f"declared size {declared} below header size")
    if declared > max_frame:
        raise FrameTooLarge(f"declared size {declared} exceeds limit {max_frame}")
    return declared

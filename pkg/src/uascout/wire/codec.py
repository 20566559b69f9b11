"""Little-endian primitive encoding and decoding.

All multi-octet integers are little-endian. Strings, bytestrings and arrays
carry a signed 32-bit length prefix where -1 encodes null. Decoding enforces
configurable length limits so a hostile peer cannot make the tool allocate
unbounded memory, and every failure raises a CodecError subclass - stdlib
exceptions never escape.
"""

from __future__ import annotations

import struct
import uuid
from dataclasses import dataclass
from typing import Optional, Tuple

from uascout.wire.errors import Malformed, OversizeValue, Truncated
from uascout.wire.values import (
    ExtensionBody,
    LocalizedText,
    NodeRef,
    ValueKind,
    WireValue,
)

# Hard wire-format bound for any length prefix.
MAX_ENCODABLE_LENGTH = 2**31 - 1

# NodeRef wire form tags.
_NODE_FORM_TWO_BYTE = 0x00
_NODE_FORM_FOUR_BYTE = 0x01
_NODE_FORM_NUMERIC = 0x02
_NODE_FORM_STRING = 0x03
_NODE_FORM_GUID = 0x04
_NODE_FORM_OPAQUE = 0x05

# ExpandedNodeId extras, legal only where expanded references are expected.
_NODE_FLAG_NAMESPACE_URI = 0x80
_NODE_FLAG_SERVER_INDEX = 0x40

_LTEXT_HAS_LOCALE = 0x01
_LTEXT_HAS_TEXT = 0x02

_EXT_NO_BODY = 0x00
_EXT_BINARY_BODY = 0x01

_VARIANT_ARRAY_FLAG = 0x80
_VARIANT_DIMENSIONS_FLAG = 0x40

_SCALAR_KINDS = {k for k in ValueKind if k != ValueKind.ARRAY}


@dataclass(frozen=True)
class DecodeLimits:
    """Upper bounds applied while decoding untrusted buffers."""

    max_string: int = 2**24
    max_array: int = 2**16

    def check_string(self, length: int) -> None:
        if length > self.max_string:
            raise OversizeValue(f"string length {length} exceeds limit {self.max_string}")

    def check_array(self, count: int) -> None:
        if count > self.max_array:
            raise OversizeValue(f"array length {count} exceeds limit {self.max_array}")


DEFAULT_LIMITS = DecodeLimits()


class Writer:
    """Append-only little-endian buffer."""

    def __init__(self):
        self._parts = bytearray()

    def data(self) -> bytes:
        return bytes(self._parts)

    def __len__(self) -> int:
        return len(self._parts)

    def write_raw(self, raw: bytes) -> None:
        self._parts += raw

    def write_bool(self, v: bool) -> None:
        self._parts.append(1 if v else 0)

    def write_u8(self, v: int) -> None:
        self._parts += struct.pack("<B", v)

    def write_u16(self, v: int) -> None:
        self._parts += struct.pack("<H", v)

    def write_u32(self, v: int) -> None:
        self._parts += struct.pack("<I", v)

    def write_u64(self, v: int) -> None:
        self._parts += struct.pack("<Q", v)

    def write_i16(self, v: int) -> None:
        self._parts += struct.pack("<h", v)

    def write_i32(self, v: int) -> None:
        self._parts += struct.pack("<i", v)

    def write_i64(self, v: int) -> None:
        self._parts += struct.pack("<q", v)

    def write_f64(self, v: float) -> None:
        self._parts += struct.pack("<d", v)

    def write_bytes(self, v: Optional[bytes]) -> None:
        if v is None:
            self.write_i32(-1)
            return
        if len(v) > MAX_ENCODABLE_LENGTH:
            raise OversizeValue(f"bytestring of {len(v)} octets is not encodable")
        self.write_i32(len(v))
        self.write_raw(v)

    def write_string(self, v: Optional[str]) -> None:
        self.write_bytes(None if v is None else v.encode("utf-8"))

    def write_guid(self, v: uuid.UUID) -> None:
        self.write_raw(v.bytes_le)

    def write_noderef(self, ref: NodeRef) -> None:
        ns, ident = ref.namespace_index, ref.identifier
        if isinstance(ident, int):
            if ns == 0 and ident <= 0xFF:
                self.write_u8(_NODE_FORM_TWO_BYTE)
                self.write_u8(ident)
            elif ns <= 0xFF and ident <= 0xFFFF:
                self.write_u8(_NODE_FORM_FOUR_BYTE)
                self.write_u8(ns)
                self.write_u16(ident)
            else:
                self.write_u8(_NODE_FORM_NUMERIC)
                self.write_u16(ns)
                self.write_u32(ident)
        elif isinstance(ident, str):
            self.write_u8(_NODE_FORM_STRING)
            self.write_u16(ns)
            self.write_string(ident)
        elif isinstance(ident, uuid.UUID):
            self.write_u8(_NODE_FORM_GUID)
            self.write_u16(ns)
            self.write_guid(ident)
        else:
            self.write_u8(_NODE_FORM_OPAQUE)
            self.write_u16(ns)
            self.write_bytes(ident)

    def write_localized_text(self, v: LocalizedText) -> None:
        mask = 0
        if v.locale is not None:
            mask |= _LTEXT_HAS_LOCALE
        if v.text is not None:
            mask |= _LTEXT_HAS_TEXT
        self.write_u8(mask)
        if v.locale is not None:
            self.write_string(v.locale)
        if v.text is not None:
            self.write_string(v.text)

    def write_extension(self, v: ExtensionBody) -> None:
        self.write_noderef(v.type_id)
        if v.payload is None:
            self.write_u8(_EXT_NO_BODY)
        else:
            self.write_u8(_EXT_BINARY_BODY)
            self.write_bytes(v.payload)

    def write_qualified_name(self, namespace_index: int, name: Optional[str]) -> None:
        self.write_u16(namespace_index)
        self.write_string(name)

    def write_value(self, v: WireValue) -> None:
        """Raw form: no type tag, just the value's canonical octets."""
        kind = v.kind
        if kind == ValueKind.ARRAY:
            if v.value is None:
                self.write_i32(-1)
                return
            if len(v.value) > MAX_ENCODABLE_LENGTH:
                raise OversizeValue("array too long to encode")
            self.write_i32(len(v.value))
            for item in v.value:
                self.write_value(item)
            return
        _SCALAR_WRITERS[kind](self, v.value)

    def write_variant(self, v: Optional[WireValue]) -> None:
        """Tagged form: one type byte, array flag folded in. None is null."""
        if v is None:
            self.write_u8(0)
            return
        if v.kind == ValueKind.ARRAY:
            self.write_u8(int(v.element_kind) | _VARIANT_ARRAY_FLAG)
        else:
            self.write_u8(int(v.kind))
        self.write_value(v)


_SCALAR_WRITERS = {
    ValueKind.BOOLEAN: Writer.write_bool,
    ValueKind.BYTE: Writer.write_u8,
    ValueKind.INT16: Writer.write_i16,
    ValueKind.UINT16: Writer.write_u16,
    ValueKind.INT32: Writer.write_i32,
    ValueKind.UINT32: Writer.write_u32,
    ValueKind.INT64: Writer.write_i64,
    ValueKind.UINT64: Writer.write_u64,
    ValueKind.FLOAT64: Writer.write_f64,
    ValueKind.UTF_STRING: Writer.write_string,
    ValueKind.BYTE_STRING: Writer.write_bytes,
    ValueKind.GUID: Writer.write_guid,
    ValueKind.NODE_REF: Writer.write_noderef,
    ValueKind.LOCALIZED_TEXT: Writer.write_localized_text,
    ValueKind.EXTENSION_BODY: Writer.write_extension,
}


class Reader:
    """Bounds-checked cursor over an untrusted buffer."""

    def __init__(self, buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS):
        self._buf = buf
        self._pos = 0
        self.limits = limits

    @property
    def consumed(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return len(self._buf) - self._pos

    def at_end(self) -> bool:
        return self._pos >= len(self._buf)

    def _take(self, n: int) -> bytes:
        if n > self.remaining:
            raise Truncated(
                f"need {n} octets at offset {self._pos}, have {self.remaining}"
            )
        chunk = self._buf[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def read_bool(self) -> bool:
        return self._take(1)[0] != 0

    def read_u8(self) -> int:
        return self._take(1)[0]

    def read_u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def read_u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def read_u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def read_i16(self) -> int:
        return struct.unpack("<h", self._take(2))[0]

    def read_i32(self) -> int:
        return struct.unpack("<i", self._take(4))[0]

    def read_i64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def read_f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def _read_length(self) -> Optional[int]:
        """Length prefix: -1 means null, other negatives are illegal."""
        length = self.read_i32()
        if length == -1:
            return None
        if length < 0:
            raise Malformed(f"negative length prefix {length}")
        return length

    def read_bytes(self) -> Optional[bytes]:
        length = self._read_length()
        if length is None:
            return None
        self.limits.check_string(length)
        return self._take(length)

    def read_string(self) -> Optional[str]:
        raw = self.read_bytes()
        if raw is None:
            return None
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Malformed(f"invalid UTF-8 in string: {exc}") from None

    def read_guid(self) -> uuid.UUID:
        return uuid.UUID(bytes_le=self._take(16))

    def read_noderef(self) -> NodeRef:
        form = self.read_u8()
        if form & (_NODE_FLAG_NAMESPACE_URI | _NODE_FLAG_SERVER_INDEX):
            raise Malformed(f"expanded-form bits in plain node reference: 0x{form:02X}")
        return self._read_noderef_body(form)

    def read_expanded_noderef(self) -> NodeRef:
        """Expanded reference; any namespace URI / server index is discarded."""
        form = self.read_u8()
        ref = self._read_noderef_body(form & 0x3F)
        if form & _NODE_FLAG_NAMESPACE_URI:
            self.read_string()
        if form & _NODE_FLAG_SERVER_INDEX:
            self.read_u32()
        return ref

    def _read_noderef_body(self, form: int) -> NodeRef:
        if form == _NODE_FORM_TWO_BYTE:
            return NodeRef(0, self.read_u8())
        if form == _NODE_FORM_FOUR_BYTE:
            ns = self.read_u8()
            return NodeRef(ns, self.read_u16())
        if form == _NODE_FORM_NUMERIC:
            ns = self.read_u16()
            return NodeRef(ns, self.read_u32())
        if form == _NODE_FORM_STRING:
            ns = self.read_u16()
            ident = self.read_string()
            if ident is None:
                raise Malformed("null string identifier in node reference")
            return NodeRef(ns, ident)
        if form == _NODE_FORM_GUID:
            ns = self.read_u16()
            return NodeRef(ns, self.read_guid())
        if form == _NODE_FORM_OPAQUE:
            ns = self.read_u16()
            ident = self.read_bytes()
            if ident is None:
                raise Malformed("null opaque identifier in node reference")
            return NodeRef(ns, ident)
        raise Malformed(f"illegal node reference form tag 0x{form:02X}")

    def read_localized_text(self) -> LocalizedText:
        mask = self.read_u8()
        if mask & ~(_LTEXT_HAS_LOCALE | _LTEXT_HAS_TEXT):
            raise Malformed(f"reserved bits in localized-text mask 0x{mask:02X}")
        locale = self.read_string() if mask & _LTEXT_HAS_LOCALE else None
        text = self.read_string() if mask & _LTEXT_HAS_TEXT else None
        return LocalizedText(locale, text)

    def read_extension(self) -> ExtensionBody:
        type_id = self.read_noderef()
        encoding = self.read_u8()
        if encoding == _EXT_NO_BODY:
            return ExtensionBody(type_id, None)
        if encoding == _EXT_BINARY_BODY:
            payload = self.read_bytes()
            if payload is None:
                raise Malformed("extension object declares a body but carries null")
            return ExtensionBody(type_id, payload)
        raise Malformed(f"unsupported extension encoding 0x{encoding:02X}")

    def read_qualified_name(self) -> Tuple[int, Optional[str]]:
        ns = self.read_u16()
        return ns, self.read_string()

    def read_value(self, kind: ValueKind, element_kind: Optional[ValueKind] = None) -> WireValue:
        if kind == ValueKind.ARRAY:
            if element_kind is None or element_kind == ValueKind.ARRAY:
                raise Malformed("array decode needs a scalar element kind")
            count = self._read_length()
            if count is None:
                return WireValue(ValueKind.ARRAY, None, element_kind)
            self.limits.check_array(count)
            items = tuple(self.read_value(element_kind) for _ in range(count))
            return WireValue(ValueKind.ARRAY, items, element_kind)
        reader = _SCALAR_READERS.get(kind)
        if reader is None:
            raise Malformed(f"unsupported value kind {kind!r}")
        return WireValue(kind, reader(self))

    def read_variant(self) -> Optional[WireValue]:
        tag = self.read_u8()
        if tag == 0:
            return None
        if tag & _VARIANT_DIMENSIONS_FLAG:
            raise Malformed("variant array dimensions are not supported")
        type_id = tag & 0x3F
        try:
            kind = ValueKind(type_id)
        except ValueError:
            raise Malformed(f"unsupported variant type id {type_id}") from None
        if kind == ValueKind.ARRAY:
            raise Malformed(f"unsupported variant type id {type_id}")
        if tag & _VARIANT_ARRAY_FLAG:
            return self.read_value(ValueKind.ARRAY, kind)
        return self.read_value(kind)


_SCALAR_READERS = {
    ValueKind.BOOLEAN: Reader.read_bool,
    ValueKind.BYTE: Reader.read_u8,
    ValueKind.INT16: Reader.read_i16,
    ValueKind.UINT16: Reader.read_u16,
    ValueKind.INT32: Reader.read_i32,
    ValueKind.UINT32: Reader.read_u32,
    ValueKind.INT64: Reader.read_i64,
    ValueKind.UINT64: Reader.read_u64,
    ValueKind.FLOAT64: Reader.read_f64,
    ValueKind.UTF_STRING: Reader.read_string,
    ValueKind.BYTE_STRING: Reader.read_bytes,
    ValueKind.GUID: Reader.read_guid,
    ValueKind.NODE_REF: Reader.read_noderef,
    ValueKind.LOCALIZED_TEXT: Reader.read_localized_text,
    ValueKind.EXTENSION_BODY: Reader.read_extension,
}


def encode_value(v: WireValue) -> bytes:
    """Canonical octets of a value; equal values encode identically."""
    w = Writer()
    w.write_value(v)
    return w.data()


def decode_value(
    buf: bytes,
    kind: ValueKind,
    element_kind: Optional[ValueKind] = None,
    limits: DecodeLimits = DEFAULT_LIMITS,
) -> Tuple[WireValue, int]:
    """Decode one value of the expected kind; returns (value, octets consumed)."""
    r = Reader(buf, limits)
    value = r.read_value(kind, element_kind)
    return value, r.consumed


# 100-nanosecond intervals between 1601-01-01 and the Unix epoch.
UNIX_EPOCH_TICKS = 116444736000000000


def ticks_from_unix(seconds: float) -> int:
    return UNIX_EPOCH_TICKS + int(seconds * 10_000_000)


def unix_from_ticks(ticks: int) -> float:
    return (ticks - UNIX_EPOCH_TICKS) / 10_000_000

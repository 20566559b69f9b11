"""Value model for the binary codec.

WireValue is a tagged union over the built-in types the toolkit reads and
writes. The kind tags double as the numeric type ids used inside variant
encodings, except ARRAY which is the array marker bit and never appears as
a scalar id on the wire.
"""

from __future__ import annotations

import base64
import re
import struct
import uuid
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Optional, Tuple, Union


class ValueKind(IntEnum):
    BOOLEAN = 1
    BYTE = 3
    INT16 = 4
    UINT16 = 5
    INT32 = 6
    UINT32 = 7
    INT64 = 8
    UINT64 = 9
    FLOAT64 = 11
    UTF_STRING = 12
    GUID = 14
    BYTE_STRING = 15
    NODE_REF = 17
    LOCALIZED_TEXT = 21
    EXTENSION_BODY = 22
    ARRAY = 0x80


_INT_RANGES = {
    ValueKind.BYTE: (0, 2**8 - 1),
    ValueKind.INT16: (-(2**15), 2**15 - 1),
    ValueKind.UINT16: (0, 2**16 - 1),
    ValueKind.INT32: (-(2**31), 2**31 - 1),
    ValueKind.UINT32: (0, 2**32 - 1),
    ValueKind.INT64: (-(2**63), 2**63 - 1),
    ValueKind.UINT64: (0, 2**64 - 1),
}

_NODEREF_PATTERN = re.compile(
    r"^(?:ns=(?P<ns>\d+);)?(?P<form>[isgb])=(?P<body>.*)$"
)


@dataclass(frozen=True)
class NodeRef:
    """Node identity: namespace index plus numeric/string/guid/opaque id.

    The identifier's Python type selects the wire form: int, str, uuid.UUID
    or bytes.
    """

    namespace_index: int = 0
    identifier: Union[int, str, uuid.UUID, bytes] = 0

    def __post_init__(self):
        if not 0 <= self.namespace_index <= 0xFFFF:
            raise ValueError(f"namespace index out of range: {self.namespace_index}")
        ident = self.identifier
        if isinstance(ident, bool) or not isinstance(ident, (int, str, uuid.UUID, bytes)):
            raise ValueError(f"unsupported identifier type: {type(ident).__name__}")
        if isinstance(ident, int) and not 0 <= ident <= 0xFFFFFFFF:
            raise ValueError(f"numeric identifier out of range: {ident}")

    @property
    def is_null(self) -> bool:
        return self.namespace_index == 0 and self.identifier == 0

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        """Parse the conventional string form, e.g. ``ns=2;i=1001`` or ``s=Pump``."""
        m = _NODEREF_PATTERN.match(text.strip())
        if not m:
            raise ValueError(f"cannot parse node reference: {text!r}")
        ns = int(m.group("ns") or 0)
        form, body = m.group("form"), m.group("body")
        if form == "i":
            return cls(ns, int(body))
        if form == "s":
            return cls(ns, body)
        if form == "g":
            return cls(ns, uuid.UUID(body))
        return cls(ns, base64.b64decode(body))

    def __str__(self) -> str:
        ident = self.identifier
        if isinstance(ident, int):
            body = f"i={ident}"
        elif isinstance(ident, str):
            body = f"s={ident}"
        elif isinstance(ident, uuid.UUID):
            body = f"g={ident}"
        else:
            body = f"b={base64.b64encode(ident).decode('ascii')}"
        if self.namespace_index:
            return f"ns={self.namespace_index};{body}"
        return body


@dataclass(frozen=True)
class LocalizedText:
    """Locale/text pair; either part may be absent (None) on the wire."""

    locale: Optional[str] = None
    text: Optional[str] = None


@dataclass(frozen=True)
class ExtensionBody:
    """Extension object: type id plus opaque binary payload.

    payload None encodes "no body"; payload b"" is an empty binary body.
    """

    type_id: NodeRef = field(default_factory=NodeRef)
    payload: Optional[bytes] = None


def _float_bits(value: float) -> bytes:
    return struct.pack("<d", value)


@dataclass(frozen=True, eq=False)
class WireValue:
    """One codec value: a kind tag plus its Python payload.

    Null strings/bytestrings/arrays carry value None, distinct from the
    empty ones. Equality is exact round-trip equality: floats compare by
    bit pattern so NaN payloads survive the round-trip invariant.
    """

    kind: ValueKind
    value: Any
    element_kind: Optional[ValueKind] = None

    def __post_init__(self):
        kind, value = self.kind, self.value
        if kind == ValueKind.ARRAY:
            if self.element_kind is None or self.element_kind == ValueKind.ARRAY:
                raise ValueError("array needs a scalar element kind")
            if value is not None:
                object.__setattr__(self, "value", tuple(value))
                for item in self.value:
                    if not isinstance(item, WireValue) or item.kind != self.element_kind:
                        raise ValueError("array elements must match the element kind")
            return
        if self.element_kind is not None:
            raise ValueError("element_kind is only valid for arrays")
        if kind == ValueKind.BOOLEAN and not isinstance(value, bool):
            raise ValueError("boolean value must be a bool")
        if kind in _INT_RANGES:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{kind.name} value must be an int")
            lo, hi = _INT_RANGES[kind]
            if not lo <= value <= hi:
                raise ValueError(f"{kind.name} value out of range: {value}")
        if kind == ValueKind.FLOAT64 and not isinstance(value, (int, float)):
            raise ValueError("float value must be numeric")
        if kind == ValueKind.FLOAT64:
            object.__setattr__(self, "value", float(value))
        if kind == ValueKind.UTF_STRING and not (value is None or isinstance(value, str)):
            raise ValueError("string value must be str or None")
        if kind == ValueKind.BYTE_STRING and not (value is None or isinstance(value, bytes)):
            raise ValueError("bytestring value must be bytes or None")
        if kind == ValueKind.GUID and not isinstance(value, uuid.UUID):
            raise ValueError("guid value must be a uuid.UUID")
        if kind == ValueKind.NODE_REF and not isinstance(value, NodeRef):
            raise ValueError("node value must be a NodeRef")
        if kind == ValueKind.LOCALIZED_TEXT and not isinstance(value, LocalizedText):
            raise ValueError("localized text value must be a LocalizedText")
        if kind == ValueKind.EXTENSION_BODY and not isinstance(value, ExtensionBody):
            raise ValueError("extension value must be an ExtensionBody")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WireValue):
            return NotImplemented
        if self.kind != other.kind or self.element_kind != other.element_kind:
            return False
        if self.kind == ValueKind.FLOAT64:
            return _float_bits(self.value) == _float_bits(other.value)
        return self.value == other.value

    def __hash__(self) -> int:
        if self.kind == ValueKind.FLOAT64:
            return hash((self.kind, _float_bits(self.value)))
        return hash((self.kind, self.element_kind, self.value))

    # Shorthand constructors for the kinds used all over the toolkit.

    @classmethod
    def boolean(cls, v: bool) -> "WireValue":
        return cls(ValueKind.BOOLEAN, v)

    @classmethod
    def byte(cls, v: int) -> "WireValue":
        return cls(ValueKind.BYTE, v)

    @classmethod
    def uint16(cls, v: int) -> "WireValue":
        return cls(ValueKind.UINT16, v)

    @classmethod
    def uint32(cls, v: int) -> "WireValue":
        return cls(ValueKind.UINT32, v)

    @classmethod
    def int32(cls, v: int) -> "WireValue":
        return cls(ValueKind.INT32, v)

    @classmethod
    def double(cls, v: float) -> "WireValue":
        return cls(ValueKind.FLOAT64, v)

    @classmethod
    def string(cls, v: Optional[str]) -> "WireValue":
        return cls(ValueKind.UTF_STRING, v)

    @classmethod
    def bytestring(cls, v: Optional[bytes]) -> "WireValue":
        return cls(ValueKind.BYTE_STRING, v)

    @classmethod
    def node(cls, v: NodeRef) -> "WireValue":
        return cls(ValueKind.NODE_REF, v)

    @classmethod
    def array(cls, element_kind: ValueKind, items: Optional[Tuple]) -> "WireValue":
        """Build an array, auto-wrapping raw Python items of element_kind."""
        if items is None:
            return cls(ValueKind.ARRAY, None, element_kind)
        wrapped = tuple(
            item if isinstance(item, WireValue) else cls(element_kind, item)
            for item in items
        )
        return cls(ValueKind.ARRAY, wrapped, element_kind)

    @classmethod
    def string_array(cls, items) -> "WireValue":
        return cls.array(ValueKind.UTF_STRING, None if items is None else tuple(items))

    def python_value(self):
        """Unwrap to plain Python (arrays become tuples of plain values)."""
        if self.kind == ValueKind.ARRAY:
            if self.value is None:
                return None
            return tuple(item.python_value() for item in self.value)
        return self.value

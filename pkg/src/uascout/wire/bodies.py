"""Service request/response bodies for the supported service set.

Each body encodes as its numeric type id (four-byte node form) followed by
the structure fields. Only the twelve services the toolkit needs exist here;
anything else is rejected at this boundary. DiagnosticInfo content in
responses is validated and discarded, never modeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Tuple

from uascout.wire.codec import DEFAULT_LIMITS, DecodeLimits, Reader, Writer
from uascout.wire.errors import Malformed, ServiceFaultError, UnsupportedService
from uascout.wire import status
from uascout.wire.values import ExtensionBody, LocalizedText, NodeRef, WireValue

# Binary-encoding type ids of the supported services.
TYPE_SERVICE_FAULT = 397
TYPE_FIND_SERVERS_REQUEST = 422
TYPE_FIND_SERVERS_RESPONSE = 425
TYPE_GET_ENDPOINTS_REQUEST = 428
TYPE_GET_ENDPOINTS_RESPONSE = 431
TYPE_OPEN_CHANNEL_REQUEST = 446
TYPE_OPEN_CHANNEL_RESPONSE = 449
TYPE_CLOSE_CHANNEL_REQUEST = 452
TYPE_CLOSE_CHANNEL_RESPONSE = 455
TYPE_CREATE_SESSION_REQUEST = 461
TYPE_CREATE_SESSION_RESPONSE = 464
TYPE_ACTIVATE_SESSION_REQUEST = 467
TYPE_ACTIVATE_SESSION_RESPONSE = 470
TYPE_CLOSE_SESSION_REQUEST = 473
TYPE_CLOSE_SESSION_RESPONSE = 476
TYPE_BROWSE_REQUEST = 527
TYPE_BROWSE_RESPONSE = 530
TYPE_BROWSE_NEXT_REQUEST = 533
TYPE_BROWSE_NEXT_RESPONSE = 536
TYPE_READ_REQUEST = 631
TYPE_READ_RESPONSE = 634
TYPE_WRITE_REQUEST = 673
TYPE_WRITE_RESPONSE = 676

# Identity token binary type ids.
TYPE_ANONYMOUS_TOKEN = 321
TYPE_USERNAME_TOKEN = 324
TYPE_X509_TOKEN = 327
TYPE_ISSUED_TOKEN = 940


class SecurityMode(IntEnum):
    NONE = 1
    SIGN = 2
    SIGN_AND_ENCRYPT = 3


class UserTokenType(IntEnum):
    ANONYMOUS = 0
    USER_NAME = 1
    CERTIFICATE = 2
    ISSUED_TOKEN = 3


class AttributeId(IntEnum):
    NODE_CLASS = 2
    DISPLAY_NAME = 4
    VALUE = 13
    ACCESS_LEVEL = 17
    USER_ACCESS_LEVEL = 18


class NodeClass(IntEnum):
    OBJECT = 1
    VARIABLE = 2


class TimestampsToReturn(IntEnum):
    SOURCE = 0
    SERVER = 1
    BOTH = 2
    NEITHER = 3


class ChannelRequestType(IntEnum):
    ISSUE = 0
    RENEW = 1


BROWSE_DIRECTION_FORWARD = 0
REF_HIERARCHICAL = 33
REF_ORGANIZES = 35
REF_HAS_COMPONENT = 47
RESULT_MASK_ALL = 63

ACCESS_READ_BIT = 0x01
ACCESS_WRITE_BIT = 0x02


# -- DiagnosticInfo: skipped, never modeled -------------------------------

_DIAG_SYMBOLIC_ID = 0x01
_DIAG_NAMESPACE = 0x02
_DIAG_LOCALIZED_TEXT = 0x04
_DIAG_LOCALE = 0x08
_DIAG_ADDITIONAL_INFO = 0x10
_DIAG_INNER_STATUS = 0x20
_DIAG_INNER_DIAG = 0x40


def _skip_diagnostic_info(r: Reader, depth: int = 0) -> None:
    if depth > 16:
        raise Malformed("diagnostic info nesting too deep")
    mask = r.read_u8()
    if mask & 0x80:
        raise Malformed("reserved bit in diagnostic-info mask")
    if mask & _DIAG_SYMBOLIC_ID:
        r.read_i32()
    if mask & _DIAG_NAMESPACE:
        r.read_i32()
    if mask & _DIAG_LOCALE:
        r.read_i32()
    if mask & _DIAG_LOCALIZED_TEXT:
        r.read_i32()
    if mask & _DIAG_ADDITIONAL_INFO:
        r.read_string()
    if mask & _DIAG_INNER_STATUS:
        r.read_u32()
    if mask & _DIAG_INNER_DIAG:
        _skip_diagnostic_info(r, depth + 1)


def _skip_diagnostic_array(r: Reader) -> None:
    count = r.read_i32()
    if count == -1:
        return
    if count < 0:
        raise Malformed(f"negative diagnostic array length {count}")
    r.limits.check_array(count)
    for _ in range(count):
        _skip_diagnostic_info(r)


def _read_string_array(r: Reader) -> Optional[Tuple[Optional[str], ...]]:
    count = r.read_i32()
    if count == -1:
        return None
    if count < 0:
        raise Malformed(f"negative array length {count}")
    r.limits.check_array(count)
    return tuple(r.read_string() for _ in range(count))


def _write_string_array(w: Writer, items) -> None:
    if items is None:
        w.write_i32(-1)
        return
    w.write_i32(len(items))
    for item in items:
        w.write_string(item)


# -- Common composite structures -------------------------------------------


@dataclass
class RequestHeader:
    auth_token: NodeRef = field(default_factory=NodeRef)
    timestamp: int = 0  # 100 ns ticks since 1601-01-01
    request_handle: int = 0
    return_diagnostics: int = 0
    audit_entry_id: Optional[str] = None
    timeout_hint: int = 0
    additional: ExtensionBody = field(default_factory=ExtensionBody)

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.auth_token)
        w.write_i64(self.timestamp)
        w.write_u32(self.request_handle)
        w.write_u32(self.return_diagnostics)
        w.write_string(self.audit_entry_id)
        w.write_u32(self.timeout_hint)
        w.write_extension(self.additional)

    @classmethod
    def decode(cls, r: Reader) -> "RequestHeader":
        return cls(
            auth_token=r.read_noderef(),
            timestamp=r.read_i64(),
            request_handle=r.read_u32(),
            return_diagnostics=r.read_u32(),
            audit_entry_id=r.read_string(),
            timeout_hint=r.read_u32(),
            additional=r.read_extension(),
        )


@dataclass
class ResponseHeader:
    timestamp: int = 0
    request_handle: int = 0
    service_result: int = status.GOOD
    string_table: Optional[Tuple[Optional[str], ...]] = None

    def encode(self, w: Writer) -> None:
        w.write_i64(self.timestamp)
        w.write_u32(self.request_handle)
        w.write_u32(self.service_result)
        w.write_u8(0)  # empty service diagnostics
        _write_string_array(w, self.string_table)
        w.write_extension(ExtensionBody())

    @classmethod
    def decode(cls, r: Reader) -> "ResponseHeader":
        timestamp = r.read_i64()
        request_handle = r.read_u32()
        service_result = r.read_u32()
        _skip_diagnostic_info(r)
        string_table = _read_string_array(r)
        r.read_extension()
        return cls(timestamp, request_handle, service_result, string_table)


@dataclass
class ApplicationDescription:
    application_uri: Optional[str] = None
    product_uri: Optional[str] = None
    application_name: LocalizedText = field(default_factory=LocalizedText)
    application_type: int = 0  # 0=server, 1=client
    gateway_server_uri: Optional[str] = None
    discovery_profile_uri: Optional[str] = None
    discovery_urls: Optional[Tuple[Optional[str], ...]] = None

    def encode(self, w: Writer) -> None:
        w.write_string(self.application_uri)
        w.write_string(self.product_uri)
        w.write_localized_text(self.application_name)
        w.write_u32(self.application_type)
        w.write_string(self.gateway_server_uri)
        w.write_string(self.discovery_profile_uri)
        _write_string_array(w, self.discovery_urls)

    @classmethod
    def decode(cls, r: Reader) -> "ApplicationDescription":
        return cls(
            application_uri=r.read_string(),
            product_uri=r.read_string(),
            application_name=r.read_localized_text(),
            application_type=r.read_u32(),
            gateway_server_uri=r.read_string(),
            discovery_profile_uri=r.read_string(),
            discovery_urls=_read_string_array(r),
        )


@dataclass
class UserTokenPolicyStruct:
    policy_id: Optional[str] = None
    token_type: int = UserTokenType.ANONYMOUS
    issued_token_type: Optional[str] = None
    issuer_endpoint_url: Optional[str] = None
    security_policy_uri: Optional[str] = None

    def encode(self, w: Writer) -> None:
        w.write_string(self.policy_id)
        w.write_u32(self.token_type)
        w.write_string(self.issued_token_type)
        w.write_string(self.issuer_endpoint_url)
        w.write_string(self.security_policy_uri)

    @classmethod
    def decode(cls, r: Reader) -> "UserTokenPolicyStruct":
        policy_id = r.read_string()
        token_type = r.read_u32()
        if token_type > 3:
            raise Malformed(f"unknown user token type {token_type}")
        return cls(
            policy_id=policy_id,
            token_type=token_type,
            issued_token_type=r.read_string(),
            issuer_endpoint_url=r.read_string(),
            security_policy_uri=r.read_string(),
        )


@dataclass
class EndpointDescriptionStruct:
    endpoint_url: Optional[str] = None
    server: ApplicationDescription = field(default_factory=ApplicationDescription)
    server_certificate: Optional[bytes] = None
    security_mode: int = SecurityMode.NONE
    security_policy_uri: Optional[str] = None
    user_identity_tokens: Tuple[UserTokenPolicyStruct, ...] = ()
    transport_profile_uri: Optional[str] = None
    security_level: int = 0

    def encode(self, w: Writer) -> None:
        w.write_string(self.endpoint_url)
        self.server.encode(w)
        w.write_bytes(self.server_certificate)
        w.write_u32(self.security_mode)
        w.write_string(self.security_policy_uri)
        w.write_i32(len(self.user_identity_tokens))
        for policy in self.user_identity_tokens:
            policy.encode(w)
        w.write_string(self.transport_profile_uri)
        w.write_u8(self.security_level)

    @classmethod
    def decode(cls, r: Reader) -> "EndpointDescriptionStruct":
        endpoint_url = r.read_string()
        server = ApplicationDescription.decode(r)
        server_certificate = r.read_bytes()
        security_mode = r.read_u32()
        if security_mode not in (1, 2, 3):
            raise Malformed(f"invalid message security mode {security_mode}")
        security_policy_uri = r.read_string()
        count = r.read_i32()
        if count == -1:
            tokens: Tuple[UserTokenPolicyStruct, ...] = ()
        elif count < 0:
            raise Malformed(f"negative token policy count {count}")
        else:
            r.limits.check_array(count)
            tokens = tuple(UserTokenPolicyStruct.decode(r) for _ in range(count))
        return cls(
            endpoint_url=endpoint_url,
            server=server,
            server_certificate=server_certificate,
            security_mode=security_mode,
            security_policy_uri=security_policy_uri,
            user_identity_tokens=tokens,
            transport_profile_uri=r.read_string(),
            security_level=r.read_u8(),
        )


@dataclass
class SignatureData:
    algorithm: Optional[str] = None
    signature: Optional[bytes] = None

    def encode(self, w: Writer) -> None:
        w.write_string(self.algorithm)
        w.write_bytes(self.signature)

    @classmethod
    def decode(cls, r: Reader) -> "SignatureData":
        return cls(algorithm=r.read_string(), signature=r.read_bytes())


@dataclass
class SignedSoftwareCertificate:
    certificate_data: Optional[bytes] = None
    signature: Optional[bytes] = None

    def encode(self, w: Writer) -> None:
        w.write_bytes(self.certificate_data)
        w.write_bytes(self.signature)

    @classmethod
    def decode(cls, r: Reader) -> "SignedSoftwareCertificate":
        return cls(certificate_data=r.read_bytes(), signature=r.read_bytes())


@dataclass
class ChannelSecurityToken:
    channel_id: int = 0
    token_id: int = 0
    created_at: int = 0
    revised_lifetime: int = 0  # milliseconds

    def encode(self, w: Writer) -> None:
        w.write_u32(self.channel_id)
        w.write_u32(self.token_id)
        w.write_i64(self.created_at)
        w.write_u32(self.revised_lifetime)

    @classmethod
    def decode(cls, r: Reader) -> "ChannelSecurityToken":
        return cls(r.read_u32(), r.read_u32(), r.read_i64(), r.read_u32())


_DV_HAS_VALUE = 0x01
_DV_HAS_STATUS = 0x02
_DV_HAS_SOURCE_TS = 0x04
_DV_HAS_SERVER_TS = 0x08
_DV_HAS_SOURCE_PICO = 0x10
_DV_HAS_SERVER_PICO = 0x20


@dataclass
class DataValue:
    """Attribute value plus optional status and timestamps (pass-through)."""

    value: Optional[WireValue] = None
    status: Optional[int] = None  # absent means Good
    source_timestamp: Optional[int] = None
    server_timestamp: Optional[int] = None
    source_picoseconds: Optional[int] = None
    server_picoseconds: Optional[int] = None

    @property
    def status_or_good(self) -> int:
        return status.GOOD if self.status is None else self.status

    def encode(self, w: Writer) -> None:
        mask = 0
        if self.value is not None:
            mask |= _DV_HAS_VALUE
        if self.status is not None:
            mask |= _DV_HAS_STATUS
        if self.source_timestamp is not None:
            mask |= _DV_HAS_SOURCE_TS
        if self.server_timestamp is not None:
            mask |= _DV_HAS_SERVER_TS
        if self.source_picoseconds is not None:
            mask |= _DV_HAS_SOURCE_PICO
        if self.server_picoseconds is not None:
            mask |= _DV_HAS_SERVER_PICO
        w.write_u8(mask)
        if self.value is not None:
            w.write_variant(self.value)
        if self.status is not None:
            w.write_u32(self.status)
        if self.source_timestamp is not None:
            w.write_i64(self.source_timestamp)
        if self.server_timestamp is not None:
            w.write_i64(self.server_timestamp)
        if self.source_picoseconds is not None:
            w.write_u16(self.source_picoseconds)
        if self.server_picoseconds is not None:
            w.write_u16(self.server_picoseconds)

    @classmethod
    def decode(cls, r: Reader) -> "DataValue":
        mask = r.read_u8()
        if mask & 0xC0:
            raise Malformed(f"reserved bits in data-value mask 0x{mask:02X}")
        return cls(
            value=r.read_variant() if mask & _DV_HAS_VALUE else None,
            status=r.read_u32() if mask & _DV_HAS_STATUS else None,
            source_timestamp=r.read_i64() if mask & _DV_HAS_SOURCE_TS else None,
            server_timestamp=r.read_i64() if mask & _DV_HAS_SERVER_TS else None,
            source_picoseconds=r.read_u16() if mask & _DV_HAS_SOURCE_PICO else None,
            server_picoseconds=r.read_u16() if mask & _DV_HAS_SERVER_PICO else None,
        )


@dataclass
class QualifiedName:
    namespace_index: int = 0
    name: Optional[str] = None

    def encode(self, w: Writer) -> None:
        w.write_qualified_name(self.namespace_index, self.name)

    @classmethod
    def decode(cls, r: Reader) -> "QualifiedName":
        ns, name = r.read_qualified_name()
        return cls(ns, name)


@dataclass
class ReadValueId:
    node: NodeRef = field(default_factory=NodeRef)
    attribute_id: int = AttributeId.VALUE
    index_range: Optional[str] = None
    data_encoding: QualifiedName = field(default_factory=QualifiedName)

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.node)
        w.write_u32(self.attribute_id)
        w.write_string(self.index_range)
        self.data_encoding.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "ReadValueId":
        return cls(
            node=r.read_noderef(),
            attribute_id=r.read_u32(),
            index_range=r.read_string(),
            data_encoding=QualifiedName.decode(r),
        )


@dataclass
class WriteValue:
    node: NodeRef = field(default_factory=NodeRef)
    attribute_id: int = AttributeId.VALUE
    index_range: Optional[str] = None
    value: DataValue = field(default_factory=DataValue)

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.node)
        w.write_u32(self.attribute_id)
        w.write_string(self.index_range)
        self.value.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "WriteValue":
        return cls(
            node=r.read_noderef(),
            attribute_id=r.read_u32(),
            index_range=r.read_string(),
            value=DataValue.decode(r),
        )


@dataclass
class ViewDescription:
    view_id: NodeRef = field(default_factory=NodeRef)
    timestamp: int = 0
    view_version: int = 0

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.view_id)
        w.write_i64(self.timestamp)
        w.write_u32(self.view_version)

    @classmethod
    def decode(cls, r: Reader) -> "ViewDescription":
        return cls(r.read_noderef(), r.read_i64(), r.read_u32())


@dataclass
class BrowseDescription:
    node: NodeRef = field(default_factory=NodeRef)
    browse_direction: int = BROWSE_DIRECTION_FORWARD
    reference_type: NodeRef = field(default_factory=lambda: NodeRef(0, REF_HIERARCHICAL))
    include_subtypes: bool = True
    node_class_mask: int = 0
    result_mask: int = RESULT_MASK_ALL

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.node)
        w.write_u32(self.browse_direction)
        w.write_noderef(self.reference_type)
        w.write_bool(self.include_subtypes)
        w.write_u32(self.node_class_mask)
        w.write_u32(self.result_mask)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseDescription":
        return cls(
            node=r.read_noderef(),
            browse_direction=r.read_u32(),
            reference_type=r.read_noderef(),
            include_subtypes=r.read_bool(),
            node_class_mask=r.read_u32(),
            result_mask=r.read_u32(),
        )


@dataclass
class ReferenceDescription:
    reference_type: NodeRef = field(default_factory=NodeRef)
    is_forward: bool = True
    node: NodeRef = field(default_factory=NodeRef)
    browse_name: QualifiedName = field(default_factory=QualifiedName)
    display_name: LocalizedText = field(default_factory=LocalizedText)
    node_class: int = NodeClass.OBJECT
    type_definition: NodeRef = field(default_factory=NodeRef)

    def encode(self, w: Writer) -> None:
        w.write_noderef(self.reference_type)
        w.write_bool(self.is_forward)
        w.write_noderef(self.node)  # plain form of the expanded reference
        self.browse_name.encode(w)
        w.write_localized_text(self.display_name)
        w.write_u32(self.node_class)
        w.write_noderef(self.type_definition)

    @classmethod
    def decode(cls, r: Reader) -> "ReferenceDescription":
        return cls(
            reference_type=r.read_noderef(),
            is_forward=r.read_bool(),
            node=r.read_expanded_noderef(),
            browse_name=QualifiedName.decode(r),
            display_name=r.read_localized_text(),
            node_class=r.read_u32(),
            type_definition=r.read_expanded_noderef(),
        )


@dataclass
class BrowseResult:
    status_code: int = status.GOOD
    continuation_point: Optional[bytes] = None
    references: Tuple[ReferenceDescription, ...] = ()

    def encode(self, w: Writer) -> None:
        w.write_u32(self.status_code)
        w.write_bytes(self.continuation_point)
        w.write_i32(len(self.references))
        for ref in self.references:
            ref.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseResult":
        status_code = r.read_u32()
        continuation_point = r.read_bytes()
        count = r.read_i32()
        if count == -1:
            refs: Tuple[ReferenceDescription, ...] = ()
        elif count < 0:
            raise Malformed(f"negative reference count {count}")
        else:
            r.limits.check_array(count)
            refs = tuple(ReferenceDescription.decode(r) for _ in range(count))
        return cls(status_code, continuation_point, refs)


# -- Transport-level bodies (not extension objects) -------------------------


@dataclass
class HelloBody:
    protocol_version: int = 0
    receive_buffer_size: int = 65535
    send_buffer_size: int = 65535
    max_message_size: int = 2**24
    max_chunk_count: int = 4096
    endpoint_url: Optional[str] = None

    def encode(self) -> bytes:
        w = Writer()
        w.write_u32(self.protocol_version)
        w.write_u32(self.receive_buffer_size)
        w.write_u32(self.send_buffer_size)
        w.write_u32(self.max_message_size)
        w.write_u32(self.max_chunk_count)
        w.write_string(self.endpoint_url)
        return w.data()

    @classmethod
    def decode(cls, buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS) -> "HelloBody":
        r = Reader(buf, limits)
        return cls(
            protocol_version=r.read_u32(),
            receive_buffer_size=r.read_u32(),
            send_buffer_size=r.read_u32(),
            max_message_size=r.read_u32(),
            max_chunk_count=r.read_u32(),
            endpoint_url=r.read_string(),
        )


@dataclass
class AcknowledgeBody:
    protocol_version: int = 0
    receive_buffer_size: int = 65535
    send_buffer_size: int = 65535
    max_message_size: int = 2**24
    max_chunk_count: int = 4096

    def encode(self) -> bytes:
        w = Writer()
        w.write_u32(self.protocol_version)
        w.write_u32(self.receive_buffer_size)
        w.write_u32(self.send_buffer_size)
        w.write_u32(self.max_message_size)
        w.write_u32(self.max_chunk_count)
        return w.data()

    @classmethod
    def decode(cls, buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS) -> "AcknowledgeBody":
        r = Reader(buf, limits)
        return cls(
            protocol_version=r.read_u32(),
            receive_buffer_size=r.read_u32(),
            send_buffer_size=r.read_u32(),
            max_message_size=r.read_u32(),
            max_chunk_count=r.read_u32(),
        )


@dataclass
class ErrorBody:
    code: int = 0
    reason: Optional[str] = None

    def encode(self) -> bytes:
        w = Writer()
        w.write_u32(self.code)
        w.write_string(self.reason)
        return w.data()

    @classmethod
    def decode(cls, buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS) -> "ErrorBody":
        r = Reader(buf, limits)
        return cls(code=r.read_u32(), reason=r.read_string())


# -- Secure-channel services -------------------------------------------------


@dataclass
class OpenChannelRequest:
    TYPE_ID = TYPE_OPEN_CHANNEL_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    client_protocol_version: int = 0
    request_type: int = ChannelRequestType.ISSUE
    security_mode: int = SecurityMode.NONE
    client_nonce: Optional[bytes] = None
    requested_lifetime: int = 300_000

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_u32(self.client_protocol_version)
        w.write_u32(self.request_type)
        w.write_u32(self.security_mode)
        w.write_bytes(self.client_nonce)
        w.write_u32(self.requested_lifetime)

    @classmethod
    def decode(cls, r: Reader) -> "OpenChannelRequest":
        header = RequestHeader.decode(r)
        client_protocol_version = r.read_u32()
        request_type = r.read_u32()
        if request_type not in (0, 1):
            raise Malformed(f"invalid channel request type {request_type}")
        security_mode = r.read_u32()
        if security_mode not in (1, 2, 3):
            raise Malformed(f"invalid message security mode {security_mode}")
        return cls(
            header=header,
            client_protocol_version=client_protocol_version,
            request_type=request_type,
            security_mode=security_mode,
            client_nonce=r.read_bytes(),
            requested_lifetime=r.read_u32(),
        )


@dataclass
class OpenChannelResponse:
    TYPE_ID = TYPE_OPEN_CHANNEL_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    server_protocol_version: int = 0
    security_token: ChannelSecurityToken = field(default_factory=ChannelSecurityToken)
    server_nonce: Optional[bytes] = None

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_u32(self.server_protocol_version)
        self.security_token.encode(w)
        w.write_bytes(self.server_nonce)

    @classmethod
    def decode(cls, r: Reader) -> "OpenChannelResponse":
        return cls(
            header=ResponseHeader.decode(r),
            server_protocol_version=r.read_u32(),
            security_token=ChannelSecurityToken.decode(r),
            server_nonce=r.read_bytes(),
        )


@dataclass
class CloseChannelRequest:
    TYPE_ID = TYPE_CLOSE_CHANNEL_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)

    def encode(self, w: Writer) -> None:
        self.header.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "CloseChannelRequest":
        return cls(header=RequestHeader.decode(r))


@dataclass
class CloseChannelResponse:
    TYPE_ID = TYPE_CLOSE_CHANNEL_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)

    def encode(self, w: Writer) -> None:
        self.header.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "CloseChannelResponse":
        return cls(header=ResponseHeader.decode(r))


# -- Discovery services ------------------------------------------------------


@dataclass
class GetEndpointsRequest:
    TYPE_ID = TYPE_GET_ENDPOINTS_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    endpoint_url: Optional[str] = None
    locale_ids: Optional[Tuple[Optional[str], ...]] = ()
    profile_uris: Optional[Tuple[Optional[str], ...]] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_string(self.endpoint_url)
        _write_string_array(w, self.locale_ids)
        _write_string_array(w, self.profile_uris)

    @classmethod
    def decode(cls, r: Reader) -> "GetEndpointsRequest":
        return cls(
            header=RequestHeader.decode(r),
            endpoint_url=r.read_string(),
            locale_ids=_read_string_array(r),
            profile_uris=_read_string_array(r),
        )


@dataclass
class GetEndpointsResponse:
    TYPE_ID = TYPE_GET_ENDPOINTS_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    endpoints: Tuple[EndpointDescriptionStruct, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.endpoints))
        for endpoint in self.endpoints:
            endpoint.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "GetEndpointsResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            endpoints: Tuple[EndpointDescriptionStruct, ...] = ()
        elif count < 0:
            raise Malformed(f"negative endpoint count {count}")
        else:
            r.limits.check_array(count)
            endpoints = tuple(EndpointDescriptionStruct.decode(r) for _ in range(count))
        return cls(header, endpoints)


@dataclass
class FindServersRequest:
    TYPE_ID = TYPE_FIND_SERVERS_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    endpoint_url: Optional[str] = None
    locale_ids: Optional[Tuple[Optional[str], ...]] = ()
    server_uris: Optional[Tuple[Optional[str], ...]] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_string(self.endpoint_url)
        _write_string_array(w, self.locale_ids)
        _write_string_array(w, self.server_uris)

    @classmethod
    def decode(cls, r: Reader) -> "FindServersRequest":
        return cls(
            header=RequestHeader.decode(r),
            endpoint_url=r.read_string(),
            locale_ids=_read_string_array(r),
            server_uris=_read_string_array(r),
        )


@dataclass
class FindServersResponse:
    TYPE_ID = TYPE_FIND_SERVERS_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    servers: Tuple[ApplicationDescription, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.servers))
        for server in self.servers:
            server.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "FindServersResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            servers: Tuple[ApplicationDescription, ...] = ()
        elif count < 0:
            raise Malformed(f"negative server count {count}")
        else:
            r.limits.check_array(count)
            servers = tuple(ApplicationDescription.decode(r) for _ in range(count))
        return cls(header, servers)


# -- Session services --------------------------------------------------------


@dataclass
class CreateSessionRequest:
    TYPE_ID = TYPE_CREATE_SESSION_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    client_description: ApplicationDescription = field(default_factory=ApplicationDescription)
    server_uri: Optional[str] = None
    endpoint_url: Optional[str] = None
    session_name: Optional[str] = None
    client_nonce: Optional[bytes] = None
    client_certificate: Optional[bytes] = None
    requested_session_timeout: float = 3_600_000.0
    max_response_message_size: int = 2**24

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        self.client_description.encode(w)
        w.write_string(self.server_uri)
        w.write_string(self.endpoint_url)
        w.write_string(self.session_name)
        w.write_bytes(self.client_nonce)
        w.write_bytes(self.client_certificate)
        w.write_f64(self.requested_session_timeout)
        w.write_u32(self.max_response_message_size)

    @classmethod
    def decode(cls, r: Reader) -> "CreateSessionRequest":
        return cls(
            header=RequestHeader.decode(r),
            client_description=ApplicationDescription.decode(r),
            server_uri=r.read_string(),
            endpoint_url=r.read_string(),
            session_name=r.read_string(),
            client_nonce=r.read_bytes(),
            client_certificate=r.read_bytes(),
            requested_session_timeout=r.read_f64(),
            max_response_message_size=r.read_u32(),
        )


@dataclass
class CreateSessionResponse:
    TYPE_ID = TYPE_CREATE_SESSION_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    session_id: NodeRef = field(default_factory=NodeRef)
    auth_token: NodeRef = field(default_factory=NodeRef)
    revised_session_timeout: float = 0.0
    server_nonce: Optional[bytes] = None
    server_certificate: Optional[bytes] = None
    server_endpoints: Tuple[EndpointDescriptionStruct, ...] = ()
    server_software_certificates: Tuple[SignedSoftwareCertificate, ...] = ()
    server_signature: SignatureData = field(default_factory=SignatureData)
    max_request_message_size: int = 0

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_noderef(self.session_id)
        w.write_noderef(self.auth_token)
        w.write_f64(self.revised_session_timeout)
        w.write_bytes(self.server_nonce)
        w.write_bytes(self.server_certificate)
        w.write_i32(len(self.server_endpoints))
        for endpoint in self.server_endpoints:
            endpoint.encode(w)
        w.write_i32(len(self.server_software_certificates))
        for cert in self.server_software_certificates:
            cert.encode(w)
        self.server_signature.encode(w)
        w.write_u32(self.max_request_message_size)

    @classmethod
    def decode(cls, r: Reader) -> "CreateSessionResponse":
        header = ResponseHeader.decode(r)
        session_id = r.read_noderef()
        auth_token = r.read_noderef()
        revised_session_timeout = r.read_f64()
        server_nonce = r.read_bytes()
        server_certificate = r.read_bytes()
        count = r.read_i32()
        if count == -1:
            endpoints: Tuple[EndpointDescriptionStruct, ...] = ()
        elif count < 0:
            raise Malformed(f"negative endpoint count {count}")
        else:
            r.limits.check_array(count)
            endpoints = tuple(EndpointDescriptionStruct.decode(r) for _ in range(count))
        count = r.read_i32()
        if count == -1:
            certs: Tuple[SignedSoftwareCertificate, ...] = ()
        elif count < 0:
            raise Malformed(f"negative certificate count {count}")
        else:
            r.limits.check_array(count)
            certs = tuple(SignedSoftwareCertificate.decode(r) for _ in range(count))
        return cls(
            header=header,
            session_id=session_id,
            auth_token=auth_token,
            revised_session_timeout=revised_session_timeout,
            server_nonce=server_nonce,
            server_certificate=server_certificate,
            server_endpoints=endpoints,
            server_software_certificates=certs,
            server_signature=SignatureData.decode(r),
            max_request_message_size=r.read_u32(),
        )


@dataclass
class ActivateSessionRequest:
    TYPE_ID = TYPE_ACTIVATE_SESSION_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    client_signature: SignatureData = field(default_factory=SignatureData)
    client_software_certificates: Tuple[SignedSoftwareCertificate, ...] = ()
    locale_ids: Optional[Tuple[Optional[str], ...]] = ()
    user_identity_token: ExtensionBody = field(default_factory=ExtensionBody)
    user_token_signature: SignatureData = field(default_factory=SignatureData)

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        self.client_signature.encode(w)
        w.write_i32(len(self.client_software_certificates))
        for cert in self.client_software_certificates:
            cert.encode(w)
        _write_string_array(w, self.locale_ids)
        w.write_extension(self.user_identity_token)
        self.user_token_signature.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "ActivateSessionRequest":
        header = RequestHeader.decode(r)
        client_signature = SignatureData.decode(r)
        count = r.read_i32()
        if count == -1:
            certs: Tuple[SignedSoftwareCertificate, ...] = ()
        elif count < 0:
            raise Malformed(f"negative certificate count {count}")
        else:
            r.limits.check_array(count)
            certs = tuple(SignedSoftwareCertificate.decode(r) for _ in range(count))
        return cls(
            header=header,
            client_signature=client_signature,
            client_software_certificates=certs,
            locale_ids=_read_string_array(r),
            user_identity_token=r.read_extension(),
            user_token_signature=SignatureData.decode(r),
        )


@dataclass
class ActivateSessionResponse:
    TYPE_ID = TYPE_ACTIVATE_SESSION_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    server_nonce: Optional[bytes] = None
    results: Tuple[int, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_bytes(self.server_nonce)
        w.write_i32(len(self.results))
        for result in self.results:
            w.write_u32(result)
        w.write_i32(-1)  # no diagnostics

    @classmethod
    def decode(cls, r: Reader) -> "ActivateSessionResponse":
        header = ResponseHeader.decode(r)
        server_nonce = r.read_bytes()
        count = r.read_i32()
        if count == -1:
            results: Tuple[int, ...] = ()
        elif count < 0:
            raise Malformed(f"negative result count {count}")
        else:
            r.limits.check_array(count)
            results = tuple(r.read_u32() for _ in range(count))
        _skip_diagnostic_array(r)
        return cls(header, server_nonce, results)


@dataclass
class CloseSessionRequest:
    TYPE_ID = TYPE_CLOSE_SESSION_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    delete_subscriptions: bool = True

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_bool(self.delete_subscriptions)

    @classmethod
    def decode(cls, r: Reader) -> "CloseSessionRequest":
        return cls(header=RequestHeader.decode(r), delete_subscriptions=r.read_bool())


@dataclass
class CloseSessionResponse:
    TYPE_ID = TYPE_CLOSE_SESSION_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)

    def encode(self, w: Writer) -> None:
        self.header.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "CloseSessionResponse":
        return cls(header=ResponseHeader.decode(r))


# -- Attribute and view services ----------------------------------------------


@dataclass
class BrowseRequest:
    TYPE_ID = TYPE_BROWSE_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    view: ViewDescription = field(default_factory=ViewDescription)
    requested_max_references: int = 0
    nodes_to_browse: Tuple[BrowseDescription, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        self.view.encode(w)
        w.write_u32(self.requested_max_references)
        w.write_i32(len(self.nodes_to_browse))
        for desc in self.nodes_to_browse:
            desc.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseRequest":
        header = RequestHeader.decode(r)
        view = ViewDescription.decode(r)
        requested_max_references = r.read_u32()
        count = r.read_i32()
        if count == -1:
            descs: Tuple[BrowseDescription, ...] = ()
        elif count < 0:
            raise Malformed(f"negative browse count {count}")
        else:
            r.limits.check_array(count)
            descs = tuple(BrowseDescription.decode(r) for _ in range(count))
        return cls(header, view, requested_max_references, descs)


@dataclass
class BrowseResponse:
    TYPE_ID = TYPE_BROWSE_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    results: Tuple[BrowseResult, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.results))
        for result in self.results:
            result.encode(w)
        w.write_i32(-1)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            results: Tuple[BrowseResult, ...] = ()
        elif count < 0:
            raise Malformed(f"negative result count {count}")
        else:
            r.limits.check_array(count)
            results = tuple(BrowseResult.decode(r) for _ in range(count))
        _skip_diagnostic_array(r)
        return cls(header, results)


@dataclass
class BrowseNextRequest:
    TYPE_ID = TYPE_BROWSE_NEXT_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    release_continuation_points: bool = False
    continuation_points: Tuple[bytes, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_bool(self.release_continuation_points)
        w.write_i32(len(self.continuation_points))
        for point in self.continuation_points:
            w.write_bytes(point)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseNextRequest":
        header = RequestHeader.decode(r)
        release = r.read_bool()
        count = r.read_i32()
        if count == -1:
            points: Tuple[bytes, ...] = ()
        elif count < 0:
            raise Malformed(f"negative continuation count {count}")
        else:
            r.limits.check_array(count)
            collected = []
            for _ in range(count):
                point = r.read_bytes()
                if point is None:
                    raise Malformed("null continuation point")
                collected.append(point)
            points = tuple(collected)
        return cls(header, release, points)


@dataclass
class BrowseNextResponse:
    TYPE_ID = TYPE_BROWSE_NEXT_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    results: Tuple[BrowseResult, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.results))
        for result in self.results:
            result.encode(w)
        w.write_i32(-1)

    @classmethod
    def decode(cls, r: Reader) -> "BrowseNextResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            results: Tuple[BrowseResult, ...] = ()
        elif count < 0:
            raise Malformed(f"negative result count {count}")
        else:
            r.limits.check_array(count)
            results = tuple(BrowseResult.decode(r) for _ in range(count))
        _skip_diagnostic_array(r)
        return cls(header, results)


@dataclass
class ReadRequest:
    TYPE_ID = TYPE_READ_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    max_age: float = 0.0
    timestamps_to_return: int = TimestampsToReturn.NEITHER
    nodes_to_read: Tuple[ReadValueId, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_f64(self.max_age)
        w.write_u32(self.timestamps_to_return)
        w.write_i32(len(self.nodes_to_read))
        for rv in self.nodes_to_read:
            rv.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "ReadRequest":
        header = RequestHeader.decode(r)
        max_age = r.read_f64()
        timestamps = r.read_u32()
        count = r.read_i32()
        if count == -1:
            nodes: Tuple[ReadValueId, ...] = ()
        elif count < 0:
            raise Malformed(f"negative read count {count}")
        else:
            r.limits.check_array(count)
            nodes = tuple(ReadValueId.decode(r) for _ in range(count))
        return cls(header, max_age, timestamps, nodes)


@dataclass
class ReadResponse:
    TYPE_ID = TYPE_READ_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    results: Tuple[DataValue, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.results))
        for dv in self.results:
            dv.encode(w)
        w.write_i32(-1)

    @classmethod
    def decode(cls, r: Reader) -> "ReadResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            results: Tuple[DataValue, ...] = ()
        elif count < 0:
            raise Malformed(f"negative result count {count}")
        else:
            r.limits.check_array(count)
            results = tuple(DataValue.decode(r) for _ in range(count))
        _skip_diagnostic_array(r)
        return cls(header, results)


@dataclass
class WriteRequest:
    TYPE_ID = TYPE_WRITE_REQUEST
    header: RequestHeader = field(default_factory=RequestHeader)
    nodes_to_write: Tuple[WriteValue, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.nodes_to_write))
        for wv in self.nodes_to_write:
            wv.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "WriteRequest":
        header = RequestHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            nodes: Tuple[WriteValue, ...] = ()
        elif count < 0:
            raise Malformed(f"negative write count {count}")
        else:
            r.limits.check_array(count)
            nodes = tuple(WriteValue.decode(r) for _ in range(count))
        return cls(header, nodes)


@dataclass
class WriteResponse:
    TYPE_ID = TYPE_WRITE_RESPONSE
    header: ResponseHeader = field(default_factory=ResponseHeader)
    results: Tuple[int, ...] = ()

    def encode(self, w: Writer) -> None:
        self.header.encode(w)
        w.write_i32(len(self.results))
        for result in self.results:
            w.write_u32(result)
        w.write_i32(-1)

    @classmethod
    def decode(cls, r: Reader) -> "WriteResponse":
        header = ResponseHeader.decode(r)
        count = r.read_i32()
        if count == -1:
            results: Tuple[int, ...] = ()
        elif count < 0:
            raise Malformed(f"negative result count {count}")
        else:
            r.limits.check_array(count)
            results = tuple(r.read_u32() for _ in range(count))
        _skip_diagnostic_array(r)
        return cls(header, results)


@dataclass
class ServiceFaultBody:
    TYPE_ID = TYPE_SERVICE_FAULT
    header: ResponseHeader = field(default_factory=ResponseHeader)

    def encode(self, w: Writer) -> None:
        self.header.encode(w)

    @classmethod
    def decode(cls, r: Reader) -> "ServiceFaultBody":
        return cls(header=ResponseHeader.decode(r))


_REQUEST_TYPES = {
    cls.TYPE_ID: cls
    for cls in (
        OpenChannelRequest,
        CloseChannelRequest,
        GetEndpointsRequest,
        FindServersRequest,
        CreateSessionRequest,
        ActivateSessionRequest,
        CloseSessionRequest,
        BrowseRequest,
        BrowseNextRequest,
        ReadRequest,
        WriteRequest,
    )
}

_RESPONSE_TYPES = {
    cls.TYPE_ID: cls
    for cls in (
        OpenChannelResponse,
        CloseChannelResponse,
        GetEndpointsResponse,
        FindServersResponse,
        CreateSessionResponse,
        ActivateSessionResponse,
        CloseSessionResponse,
        BrowseResponse,
        BrowseNextResponse,
        ReadResponse,
        WriteResponse,
        ServiceFaultBody,
    )
}

RESPONSE_TYPE_FOR = {
    TYPE_OPEN_CHANNEL_REQUEST: TYPE_OPEN_CHANNEL_RESPONSE,
    TYPE_CLOSE_CHANNEL_REQUEST: TYPE_CLOSE_CHANNEL_RESPONSE,
    TYPE_GET_ENDPOINTS_REQUEST: TYPE_GET_ENDPOINTS_RESPONSE,
    TYPE_FIND_SERVERS_REQUEST: TYPE_FIND_SERVERS_RESPONSE,
    TYPE_CREATE_SESSION_REQUEST: TYPE_CREATE_SESSION_RESPONSE,
    TYPE_ACTIVATE_SESSION_REQUEST: TYPE_ACTIVATE_SESSION_RESPONSE,
    TYPE_CLOSE_SESSION_REQUEST: TYPE_CLOSE_SESSION_RESPONSE,
    TYPE_BROWSE_REQUEST: TYPE_BROWSE_RESPONSE,
    TYPE_BROWSE_NEXT_REQUEST: TYPE_BROWSE_NEXT_RESPONSE,
    TYPE_READ_REQUEST: TYPE_READ_RESPONSE,
    TYPE_WRITE_REQUEST: TYPE_WRITE_RESPONSE,
}


def encode_request(body) -> bytes:
    """Message-body octets: four-byte type id node, then the request fields."""
    type_id = getattr(type(body), "TYPE_ID", None)
    if type_id not in _REQUEST_TYPES or not isinstance(body, _REQUEST_TYPES[type_id]):
        raise UnsupportedService(f"not a supported request body: {type(body).__name__}")
    w = Writer()
    w.write_noderef(NodeRef(0, type_id))
    body.encode(w)
    return w.data()


def encode_response(body) -> bytes:
    type_id = getattr(type(body), "TYPE_ID", None)
    if type_id not in _RESPONSE_TYPES or not isinstance(body, _RESPONSE_TYPES[type_id]):
        raise UnsupportedService(f"not a supported response body: {type(body).__name__}")
    w = Writer()
    w.write_noderef(NodeRef(0, type_id))
    body.encode(w)
    return w.data()


def decode_request(buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS):
    """Server-side decode of a request body."""
    r = Reader(buf, limits)
    type_ref = r.read_noderef()
    if type_ref.namespace_index != 0 or not isinstance(type_ref.identifier, int):
        raise UnsupportedService(f"unknown request type {type_ref}")
    cls = _REQUEST_TYPES.get(type_ref.identifier)
    if cls is None:
        raise UnsupportedService(f"unsupported service id {type_ref.identifier}")
    return cls.decode(r)


def decode_response(buf: bytes, limits: DecodeLimits = DEFAULT_LIMITS):
    """Client-side decode; faults and bad service results raise ServiceFaultError."""
    r = Reader(buf, limits)
    type_ref = r.read_noderef()
    if type_ref.namespace_index != 0 or not isinstance(type_ref.identifier, int):
        raise UnsupportedService(f"unknown response type {type_ref}")
    cls = _RESPONSE_TYPES.get(type_ref.identifier)
    if cls is None:
        raise UnsupportedService(f"unsupported service id {type_ref.identifier}")
    body = cls.decode(r)
    result = body.header.service_result
    if isinstance(body, ServiceFaultBody):
        raise ServiceFaultError(result, "service fault")
    if status.is_bad(result):
        raise ServiceFaultError(result, f"{type(body).__name__} failed")
    return body

"""Typed client calls: endpoints, discovery, sessions, read/browse/write.

Translates between assessment-level intents and wire bodies. Batch calls
preserve request order and per-node bad statuses never abort a call; only
whole-call faults raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, List, Optional, Sequence, Tuple

import uascout
from uascout.identity import IdentityToken, X509Token
from uascout.transport import Channel, Phase
from uascout.wire import bodies, node_ids, status
from uascout.wire.errors import Malformed, ServiceFaultError
from uascout.wire.values import LocalizedText, NodeRef, WireValue


class SecurityMode(IntEnum):
    NONE = 1
    SIGN = 2
    SIGN_AND_ENCRYPT = 3


class TokenType(IntEnum):
    ANONYMOUS = 0
    USER_NAME = 1
    CERTIFICATE = 2
    ISSUED_TOKEN = 3


class SessionNotActivated(Exception):
    """Read/Browse/Write called on a handle that was never activated."""


class AuthRejected(Exception):
    """Server rejected the identity token; the exact code is preserved."""

    REJECTION_CODES = frozenset(
        {
            status.BAD_USER_ACCESS_DENIED,
            status.BAD_IDENTITY_TOKEN_REJECTED,
            status.BAD_IDENTITY_TOKEN_INVALID,
        }
    )

    def __init__(self, code: int):
        self.code = code
        self.status_name = status.name_of(code)
        super().__init__(f"authentication rejected: {self.status_name}")


@dataclass(frozen=True)
class UserTokenPolicy:
    policy_id: str
    token_type: TokenType
    security_policy_uri: str = ""  # empty inherits the endpoint policy


@dataclass(frozen=True)
class EndpointDescriptor:
    """One advertised endpoint, order and values exactly as the server sent them."""

    endpoint_url: str
    application_uri: str
    product_uri: str
    server_certificate: bytes
    security_policy_uri: str
    message_security_mode: SecurityMode
    security_level: int
    user_token_policies: Tuple[UserTokenPolicy, ...] = ()

    def policies_of_type(self, token_type: TokenType) -> Tuple[UserTokenPolicy, ...]:
        return tuple(p for p in self.user_token_policies if p.token_type == token_type)


@dataclass(frozen=True)
class ApplicationRecord:
    application_uri: str
    product_uri: str
    discovery_urls: Tuple[str, ...] = ()


@dataclass
class SessionHandle:
    channel: Channel
    session_id: NodeRef
    auth_token: NodeRef
    server_nonce: bytes
    server_certificate: bytes
    activated: bool = False
    nonce_length: int = 0  # as observed at creation; < 32 becomes a finding


def _client_description() -> bodies.ApplicationDescription:
    return bodies.ApplicationDescription(
        application_uri=uascout.APPLICATION_URI,
        product_uri=uascout.PRODUCT_URI,
        application_name=LocalizedText(None, uascout.APPLICATION_NAME),
        application_type=1,  # client
        discovery_urls=None,
    )


def _descriptor_from_struct(struct: bodies.EndpointDescriptionStruct) -> EndpointDescriptor:
    token_policies = []
    for tp in struct.user_identity_tokens:
        try:
            token_type = TokenType(tp.token_type)
        except ValueError:
            raise Malformed(f"unknown token type {tp.token_type}") from None
        token_policies.append(
            UserTokenPolicy(
                policy_id=tp.policy_id or "",
                token_type=token_type,
                security_policy_uri=tp.security_policy_uri or "",
            )
        )
    return EndpointDescriptor(
        endpoint_url=struct.endpoint_url or "",
        application_uri=struct.server.application_uri or "",
        product_uri=struct.server.product_uri or "",
        server_certificate=struct.server_certificate or b"",
        security_policy_uri=struct.security_policy_uri or "",
        message_security_mode=SecurityMode(struct.security_mode),
        security_level=struct.security_level,
        user_token_policies=tuple(token_policies),
    )


def get_endpoints(channel: Channel) -> List[EndpointDescriptor]:
    """Every advertised endpoint, order preserved."""
    request = bodies.GetEndpointsRequest(
        header=channel.request_header(),
        endpoint_url=channel.endpoint_url,
    )
    response = channel.invoke(request)
    return [_descriptor_from_struct(ep) for ep in response.endpoints]


def find_servers(channel: Channel) -> Tuple[List[ApplicationRecord], bool]:
    """Known applications plus a warning flag when the call was refused.

    Many servers restrict this service; a fault degrades to an empty result
    so discovery can still widen the target set where it is allowed.
    """
    request = bodies.FindServersRequest(
        header=channel.request_header(),
        endpoint_url=channel.endpoint_url,
    )
    try:
        response = channel.invoke(request)
    except ServiceFaultError:
        return [], True
    records = [
        ApplicationRecord(
            application_uri=server.application_uri or "",
            product_uri=server.product_uri or "",
            discovery_urls=tuple(u for u in (server.discovery_urls or ()) if u),
        )
        for server in response.servers
    ]
    return records, False


def create_session(channel: Channel, session_name: str = "uascout session") -> SessionHandle:
    """New unactivated session. Bad_TooManySessions faults pass through."""
    request = bodies.CreateSessionRequest(
        header=channel.request_header(),
        client_description=_client_description(),
        endpoint_url=channel.endpoint_url,
        session_name=session_name,
        client_nonce=None,
        client_certificate=None,
        requested_session_timeout=120_000.0,
        max_response_message_size=2**24,
    )
    response = channel.invoke(request)
    nonce = response.server_nonce or b""
    return SessionHandle(
        channel=channel,
        session_id=response.session_id,
        auth_token=response.auth_token,
        server_nonce=nonce,
        server_certificate=response.server_certificate or b"",
        activated=False,
        nonce_length=len(nonce),
    )


def activate_session(handle: SessionHandle, token: IdentityToken) -> SessionHandle:
    """Activate (or re-activate with a different token). AuthRejected on refusal."""
    user_token_signature = bodies.SignatureData(None, None)
    if isinstance(token, X509Token):
        user_token_signature = token.token_signature()
    request = bodies.ActivateSessionRequest(
        header=handle.channel.request_header(auth_token=handle.auth_token),
        user_identity_token=token.to_extension(),
        user_token_signature=user_token_signature,
    )
    try:
        response = handle.channel.invoke(request)
    except ServiceFaultError as exc:
        if exc.code in AuthRejected.REJECTION_CODES:
            raise AuthRejected(exc.code) from None
        raise
    handle.activated = True
    handle.server_nonce = response.server_nonce or b""
    return handle


def read_attributes(
    handle: SessionHandle, nodes: Sequence[Tuple[NodeRef, int]]
) -> List[Tuple[int, Optional[WireValue]]]:
    """One (status, value) per requested (node, attribute), order preserved."""
    _require_activated(handle)
    request = bodies.ReadRequest(
        header=handle.channel.request_header(auth_token=handle.auth_token),
        timestamps_to_return=bodies.TimestampsToReturn.NEITHER,
        nodes_to_read=tuple(
            bodies.ReadValueId(node=node, attribute_id=attribute) for node, attribute in nodes
        ),
    )
    response = handle.channel.invoke(request)
    if len(response.results) != len(request.nodes_to_read):
        raise Malformed(
            f"read returned {len(response.results)} results for {len(request.nodes_to_read)} nodes"
        )
    return [(dv.status_or_good, dv.value) for dv in response.results]


def read_value(handle: SessionHandle, node: NodeRef) -> Tuple[int, Optional[WireValue]]:
    return read_attributes(handle, [(node, bodies.AttributeId.VALUE)])[0]


@dataclass(frozen=True)
class BrowseEntry:
    node: NodeRef
    display_name: str
    node_class: int


def browse(
    handle: SessionHandle, start: NodeRef, max_refs: int = 1000
) -> Tuple[List[BrowseEntry], bool]:
    """Forward hierarchical children of one node.

    Internally follows continuation points until exhausted or max_refs is
    reached; the flag reports whether the listing was truncated at max_refs.
    """
    _require_activated(handle)
    per_call = min(max_refs, 1000) if max_refs else 1000
    request = bodies.BrowseRequest(
        header=handle.channel.request_header(auth_token=handle.auth_token),
        requested_max_references=per_call,
        nodes_to_browse=(bodies.BrowseDescription(node=start),),
    )
    response = handle.channel.invoke(request)
    if not response.results:
        return [], False
    result = response.results[0]
    entries: List[BrowseEntry] = []
    truncated = False
    if status.is_bad(result.status_code):
        return [], False
    entries.extend(_entries_from(result))
    continuation = result.continuation_point
    while continuation:
        if max_refs and len(entries) >= max_refs:
            truncated = True
            _release_continuation(handle, continuation)
            break
        request_next = bodies.BrowseNextRequest(
            header=handle.channel.request_header(auth_token=handle.auth_token),
            release_continuation_points=False,
            continuation_points=(continuation,),
        )
        response_next = handle.channel.invoke(request_next)
        if not response_next.results:
            break
        result = response_next.results[0]
        if status.is_bad(result.status_code):
            break
        entries.extend(_entries_from(result))
        continuation = result.continuation_point
    if max_refs and len(entries) > max_refs:
        entries = entries[:max_refs]
        truncated = True
    return entries, truncated


def _entries_from(result: bodies.BrowseResult) -> List[BrowseEntry]:
    return [
        BrowseEntry(
            node=ref.node,
            display_name=ref.display_name.text or (ref.browse_name.name or ""),
            node_class=ref.node_class,
        )
        for ref in result.references
    ]


def _release_continuation(handle: SessionHandle, continuation: bytes) -> None:
    request = bodies.BrowseNextRequest(
        header=handle.channel.request_header(auth_token=handle.auth_token),
        release_continuation_points=True,
        continuation_points=(continuation,),
    )
    try:
        handle.channel.invoke(request)
    except ServiceFaultError:
        pass


@dataclass(frozen=True)
class WalkLimits:
    max_nodes: int = 10_000
    max_depth: int = 32
    refs_per_call: int = 1000


@dataclass(frozen=True)
class WalkedNode:
    entry: BrowseEntry
    depth: int


def walk(
    handle: SessionHandle,
    start: Optional[NodeRef] = None,
    limits: WalkLimits = WalkLimits(),
) -> Iterable[WalkedNode]:
    """Breadth-first traversal of hierarchical references.

    A visited set on the node reference survives cycles; depth and node-count
    caps keep assessment time bounded on large servers.
    """
    start = start if start is not None else NodeRef(0, node_ids.OBJECTS_FOLDER)
    visited = {start}
    queue: List[Tuple[NodeRef, int]] = [(start, 0)]
    yielded = 0
    while queue:
        ref, depth = queue.pop(0)
        if depth >= limits.max_depth:
            continue
        entries, _truncated = browse(handle, ref, limits.refs_per_call)
        for entry in entries:
            if entry.node in visited:
                continue
            visited.add(entry.node)
            yield WalkedNode(entry, depth + 1)
            yielded += 1
            if yielded >= limits.max_nodes:
                return
            queue.append((entry.node, depth + 1))


def write_value(handle: SessionHandle, node: NodeRef, value: WireValue) -> int:
    """Write one Value attribute; the server's status comes back verbatim."""
    _require_activated(handle)
    request = bodies.WriteRequest(
        header=handle.channel.request_header(auth_token=handle.auth_token),
        nodes_to_write=(
            bodies.WriteValue(node=node, value=bodies.DataValue(value=value)),
        ),
    )
    response = handle.channel.invoke(request)
    if not response.results:
        raise Malformed("write returned no results")
    return response.results[0]


def close_session(handle: SessionHandle, close_channel: bool = True) -> None:
    """Best effort: close the session, then (optionally) its channel."""
    if handle.channel.phase is Phase.CHANNEL_OPEN:
        try:
            request = bodies.CloseSessionRequest(
                header=handle.channel.request_header(auth_token=handle.auth_token),
                delete_subscriptions=True,
            )
            handle.channel.invoke(request)
        except Exception:
            pass
    handle.activated = False
    if close_channel:
        handle.channel.close()


def _require_activated(handle: SessionHandle) -> None:
    if not handle.activated:
        raise SessionNotActivated("operation requires an activated session")


@dataclass
class ServerInfo:
    """Security-relevant identity read from the standard server nodes."""

    application_uri: str = ""
    product_uri: str = ""
    product_name: str = ""
    software_version: str = ""
    build_number: str = ""
    build_date: str = ""
    namespace_array: Tuple[str, ...] = ()
    server_array: Tuple[str, ...] = ()
    known_servers: Tuple[ApplicationRecord, ...] = ()
    find_servers_restricted: bool = False
    read_statuses: dict = field(default_factory=dict)


def gather_server_info(handle: SessionHandle, endpoint: Optional[EndpointDescriptor] = None) -> ServerInfo:
    """Read the standard identity nodes; partial results are fine.

    Per-node failures land in read_statuses instead of raising, and the
    known-server list degrades to empty when the server restricts discovery.
    """
    info = ServerInfo()
    if endpoint is not None:
        info.application_uri = endpoint.application_uri
        info.product_uri = endpoint.product_uri

    wanted = [
        ("server_array", node_ids.SERVER_ARRAY),
        ("namespace_array", node_ids.NAMESPACE_ARRAY),
        ("product_name", node_ids.BUILD_INFO_PRODUCT_NAME),
        ("product_uri_node", node_ids.BUILD_INFO_PRODUCT_URI),
        ("software_version", node_ids.BUILD_INFO_SOFTWARE_VERSION),
        ("build_number", node_ids.BUILD_INFO_BUILD_NUMBER),
        ("build_date", node_ids.BUILD_INFO_BUILD_DATE),
    ]
    results = read_attributes(
        handle, [(NodeRef(0, num), bodies.AttributeId.VALUE) for _name, num in wanted]
    )
    for (name, _num), (code, value) in zip(wanted, results):
        info.read_statuses[name] = status.name_of(code)
        if status.is_bad(code) or value is None:
            continue
        plain = value.python_value()
        if name == "server_array" and isinstance(plain, tuple):
            info.server_array = tuple(s for s in plain if s)
        elif name == "namespace_array" and isinstance(plain, tuple):
            info.namespace_array = tuple(s for s in plain if s is not None)
        elif name == "product_name":
            info.product_name = plain or ""
        elif name == "product_uri_node":
            if plain and not info.product_uri:
                info.product_uri = plain
        elif name == "software_version":
            info.software_version = plain or ""
        elif name == "build_number":
            info.build_number = plain or ""
        elif name == "build_date":
            info.build_date = str(plain or "")

    records, restricted = find_servers(handle.channel)
    info.known_servers = tuple(records)
    info.find_servers_restricted = restricted
    return info

"""Scenario-driven protocol server.

Serves hello/acknowledge, plaintext channel open/renew/close, endpoint and
server discovery, sessions with credential/anonymous/certificate checks and
a hard session cap, plus browse/read/write over the configured node set with
access-bit enforcement. Every observable action lands in an ordered event
log, and a live-session gauge lets tests prove that assessments leave no
residue. Channels with any policy other than None are answered with an ERR
frame: the endpoints may advertise Sign and SignAndEncrypt for classification
tests, but this server never speaks them.
"""

from __future__ import annotations

import argparse
import json
import secrets
import socket
import struct
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from uascout import identity, policies
from uascout.mock.scenario import ScenarioConfig
from uascout.wire import bodies, node_ids, status
from uascout.wire.codec import DecodeLimits, Reader, Writer
from uascout.wire.errors import CodecError, UnsupportedService
from uascout.wire.frames import ChunkFlag, HEADER_SIZE, MessageType, peek_frame_size
from uascout.wire.values import LocalizedText, NodeRef, ValueKind, WireValue

MAX_FRAME = 65535
_CHUNK_OVERHEAD = HEADER_SIZE + 16


class PortInUse(Exception):
    pass


@dataclass(frozen=True)
class MockEvent:
    seq: int
    kind: str
    detail: dict


@dataclass
class MockNode:
    ref: NodeRef
    display_name: str
    node_class: int
    kind: Optional[ValueKind] = None
    value: Optional[WireValue] = None
    access_level: int = bodies.ACCESS_READ_BIT
    user_access_level: int = bodies.ACCESS_READ_BIT
    anonymous_visible: bool = True
    children: List[NodeRef] = field(default_factory=list)


@dataclass
class MockSession:
    session_id: NodeRef
    auth_token: NodeRef
    nonce: bytes
    activated: bool = False
    anonymous: bool = True
    identity: str = ""


class _ConnectionGone(Exception):
    """Internal: close this connection immediately, nothing else to say."""


class MockServer:
    """One listening server driven by a ScenarioConfig."""

    def __init__(self, scenario: ScenarioConfig, host: str = "127.0.0.1"):
        self.scenario = scenario
        self.host = host
        self.port = 0
        self.control_port = 0
        self._lock = threading.RLock()
        self._events: List[MockEvent] = []
        self._event_seq = 0
        self._sessions: Dict[NodeRef, MockSession] = {}
        self._session_counter = 0
        self._channel_counter = 0
        self._failed_logins = 0
        self._continuations: Dict[bytes, Tuple[List[bodies.ReferenceDescription], int]] = {}
        self._nodes: Dict[NodeRef, MockNode] = {}
        self._listener: Optional[socket.socket] = None
        self._control: Optional[socket.socket] = None
        self._threads: List[threading.Thread] = []
        self._stopping = threading.Event()
        self._limits = DecodeLimits()
        self.certificate_der, self.private_key = identity.generate_self_signed(
            subject=scenario.application_name,
            application_uri=scenario.application_uri,
            hostname=host,
        )
        self._build_address_space()

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "MockServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((self.host, self.scenario.listen_port))
        except OSError as exc:
            listener.close()
            raise PortInUse(f"cannot bind {self.host}:{self.scenario.listen_port}: {exc}") from None
        listener.listen(64)
        self._listener = listener
        self.port = listener.getsockname()[1]

        control = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        control.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        control.bind((self.host, 0))
        control.listen(8)
        self._control = control
        self.control_port = control.getsockname()[1]

        for target in (self._accept_loop, self._control_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)
        return self

    def stop(self) -> None:
        if self._stopping.is_set():
            return
        self._stopping.set()
        for sock in (self._listener, self._control):
            if sock is not None:
                try:
                    sock.close()
                except OSError:
                    pass
        for thread in self._threads:
            thread.join(timeout=2.0)

    def __enter__(self) -> "MockServer":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def endpoint_url(self) -> str:
        return f"opc.tcp://{self.host}:{self.port}/"

    # -- introspection ---------------------------------------------------------

    def event_log(self) -> List[MockEvent]:
        with self._lock:
            return list(self._events)

    def events_of_kind(self, kind: str) -> List[MockEvent]:
        return [e for e in self.event_log() if e.kind == kind]

    def live_sessions(self) -> int:
        with self._lock:
            return len(self._sessions)

    def node_value(self, ref: NodeRef) -> Optional[WireValue]:
        with self._lock:
            node = self._nodes.get(ref)
            return node.value if node else None

    def node_snapshot(self) -> Dict[str, WireValue]:
        with self._lock:
            return {
                str(ref): node.value
                for ref, node in self._nodes.items()
                if node.value is not None
            }

    def _event(self, kind: str, **detail) -> None:
        with self._lock:
            self._event_seq += 1
            self._events.append(MockEvent(self._event_seq, kind, detail))

    # -- address space ---------------------------------------------------------

    def _build_address_space(self) -> None:
        ns0 = lambda num: NodeRef(0, num)
        scenario = self.scenario

        def add(node: MockNode) -> MockNode:
            self._nodes[node.ref] = node
            return node

        objects = add(
            MockNode(ns0(node_ids.OBJECTS_FOLDER), "Objects", bodies.NodeClass.OBJECT)
        )
        server = add(MockNode(ns0(node_ids.SERVER), "Server", bodies.NodeClass.OBJECT))
        objects.children.append(server.ref)

        namespace_array = (
            node_ids.STANDARD_NAMESPACE_URI,
            scenario.application_uri,
            f"{scenario.application_uri}:nodes",
        )

        def add_var(num: int, name: str, value: WireValue) -> None:
            node = add(
                MockNode(
                    ns0(num),
                    name,
                    bodies.NodeClass.VARIABLE,
                    kind=value.kind,
                    value=value,
                )
            )
            server.children.append(node.ref)

        add_var(
            node_ids.SERVER_ARRAY,
            "ServerArray",
            WireValue.string_array((scenario.application_uri,)),
        )
        add_var(
            node_ids.NAMESPACE_ARRAY,
            "NamespaceArray",
            WireValue.string_array(namespace_array),
        )

        build_info = add(
            MockNode(ns0(node_ids.SERVER_STATUS_BUILD_INFO), "BuildInfo", bodies.NodeClass.OBJECT)
        )
        server.children.append(build_info.ref)
        for num, name, text in (
            (node_ids.BUILD_INFO_PRODUCT_NAME, "ProductName", scenario.build_info.product_name),
            (node_ids.BUILD_INFO_PRODUCT_URI, "ProductUri", scenario.product_uri),
            (node_ids.BUILD_INFO_SOFTWARE_VERSION, "SoftwareVersion", scenario.build_info.software_version),
            (node_ids.BUILD_INFO_BUILD_NUMBER, "BuildNumber", scenario.build_info.build_number),
            (node_ids.BUILD_INFO_BUILD_DATE, "BuildDate", scenario.build_info.build_date),
        ):
            node = add(
                MockNode(
                    ns0(num),
                    name,
                    bodies.NodeClass.VARIABLE,
                    kind=ValueKind.UTF_STRING,
                    value=WireValue.string(text),
                )
            )
            build_info.children.append(node.ref)

        for spec in scenario.nodes:
            node = add(
                MockNode(
                    spec.ref,
                    spec.display_name,
                    bodies.NodeClass.VARIABLE,
                    kind=spec.kind,
                    value=spec.value,
                    access_level=spec.access_level,
                    user_access_level=spec.user_access_level,
                    anonymous_visible=spec.anonymous_visible,
                )
            )
            objects.children.append(node.ref)

    # -- socket loops ------------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            thread = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _control_loop(self) -> None:
        assert self._control is not None
        while not self._stopping.is_set():
            try:
                conn, _addr = self._control.accept()
            except OSError:
                return
            try:
                with conn:
                    data = conn.makefile("r", encoding="utf-8").readline()
                    request = json.loads(data) if data.strip() else {}
                    cmd = request.get("cmd", "live_sessions")
                    if cmd == "live_sessions":
                        reply = {"live_sessions": self.live_sessions()}
                    elif cmd == "events":
                        reply = {
                            "events": [
                                {"seq": e.seq, "kind": e.kind, "detail": e.detail}
                                for e in self.event_log()
                            ]
                        }
                    else:
                        reply = {"error": f"unknown command {cmd!r}"}
                    conn.sendall((json.dumps(reply) + "\n").encode("utf-8"))
            except (OSError, ValueError):
                continue

    # -- frame plumbing ------------------------------------------------------------

    def _recv_exact(self, conn: socket.socket, n: int) -> bytes:
        data = bytearray()
        while len(data) < n:
            piece = conn.recv(n - len(data))
            if not piece:
                raise _ConnectionGone()
            data += piece
        return bytes(data)

    def _recv_frame(self, conn: socket.socket) -> Tuple[MessageType, ChunkFlag, bytes]:
        header = self._recv_exact(conn, HEADER_SIZE)
        total = peek_frame_size(header, MAX_FRAME)
        body = self._recv_exact(conn, total - HEADER_SIZE) if total > HEADER_SIZE else b""
        message_type = MessageType(header[0:3])
        chunk_flag = ChunkFlag(header[3:4])
        self._event("frame", tag=message_type.value.decode(), flag=chunk_flag.value.decode())
        return message_type, chunk_flag, body

    @staticmethod
    def _frame(message_type: MessageType, flag: ChunkFlag, body: bytes) -> bytes:
        size = HEADER_SIZE + len(body)
        return message_type.value + flag.value + size.to_bytes(4, "little") + body

    def _send_error(self, conn: socket.socket, code: int, reason: str) -> None:
        body = bodies.ErrorBody(code, reason).encode()
        self._event("error_sent", code=status.name_of(code), reason=reason)
        try:
            conn.sendall(self._frame(MessageType.ERROR, ChunkFlag.FINAL, body))
        except OSError:
            pass

    # -- per-connection state machine ----------------------------------------------

    def _serve_connection(self, conn: socket.socket) -> None:
        state = _ConnState()
        try:
            with conn:
                conn.settimeout(30.0)
                self._handshake(conn, state)
                while not self._stopping.is_set():
                    message_type, flag, body = self._recv_frame(conn)
                    if message_type == MessageType.OPEN_CHANNEL:
                        self._handle_open_channel(conn, state, body)
                        continue
                    if message_type not in (MessageType.MESSAGE, MessageType.CLOSE_CHANNEL):
                        self._send_error(
                            conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "unexpected frame"
                        )
                        return
                    payload = self._collect_chunks(conn, state, message_type, flag, body)
                    if payload is None:
                        continue  # aborted message
                    request_id, request_body = payload
                    if message_type == MessageType.CLOSE_CHANNEL:
                        self._event("channel_close", channel_id=state.channel_id)
                        return
                    self._dispatch(conn, state, request_id, request_body)
        except _ConnectionGone:
            pass
        except (socket.timeout, OSError):
            pass
        except CodecError as exc:
            self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, str(exc))

    def _handshake(self, conn: socket.socket, state: "_ConnState") -> None:
        message_type, _flag, body = self._recv_frame(conn)
        if message_type != MessageType.HELLO:
            self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "expected hello")
            raise _ConnectionGone()
        hello = bodies.HelloBody.decode(body, self._limits)
        self._event("hello", endpoint_url=hello.endpoint_url or "")
        if self.scenario.reject_hello_url:
            self._send_error(conn, status.BAD_TCP_ENDPOINT_URL_INVALID, "endpoint url rejected")
            raise _ConnectionGone()
        state.client_receive_buffer = max(hello.receive_buffer_size, 8192)
        ack = bodies.AcknowledgeBody(
            receive_buffer_size=MAX_FRAME,
            send_buffer_size=MAX_FRAME,
            max_message_size=2**24,
            max_chunk_count=4096,
        )
        conn.sendall(self._frame(MessageType.ACKNOWLEDGE, ChunkFlag.FINAL, ack.encode()))

    def _handle_open_channel(self, conn: socket.socket, state: "_ConnState", body: bytes) -> None:
        r = Reader(body, self._limits)
        r.read_u32()  # secure channel id from the client (0 on issue)
        policy = r.read_string()
        r.read_bytes()
        r.read_bytes()
        sequence = r.read_u32()
        request_id = r.read_u32()
        if policy != policies.POLICY_NONE:
            # Advertised secure endpoints exist for classification only.
            self._send_error(conn, status.BAD_SECURITY_POLICY_REJECTED, "only policy None is served")
            raise _ConnectionGone()
        request = bodies.decode_request(body[r.consumed :], self._limits)
        if not isinstance(request, bodies.OpenChannelRequest):
            self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "expected channel request")
            raise _ConnectionGone()
        if request.request_type == bodies.ChannelRequestType.ISSUE:
            with self._lock:
                self._channel_counter += 1
                state.channel_id = self._channel_counter
            state.token_id = 1
            self._event("channel_open", channel_id=state.channel_id)
        else:
            state.token_id += 1
            self._event("channel_renew", channel_id=state.channel_id, token_id=state.token_id)
        response = bodies.OpenChannelResponse(
            header=self._response_header(request.header),
            security_token=bodies.ChannelSecurityToken(
                channel_id=state.channel_id,
                token_id=state.token_id,
                created_at=0,
                revised_lifetime=min(
                    request.requested_lifetime or self.scenario.token_lifetime_ms,
                    self.scenario.token_lifetime_ms,
                ),
            ),
            server_nonce=None,
        )
        w = Writer()
        w.write_u32(state.channel_id)
        w.write_string(policies.POLICY_NONE)
        w.write_bytes(None)
        w.write_bytes(None)
        w.write_u32(state.next_sequence())
        w.write_u32(request_id)
        w.write_raw(bodies.encode_response(response))
        conn.sendall(self._frame(MessageType.OPEN_CHANNEL, ChunkFlag.FINAL, w.data()))

    def _collect_chunks(
        self,
        conn: socket.socket,
        state: "_ConnState",
        first_type: MessageType,
        first_flag: ChunkFlag,
        first_body: bytes,
    ) -> Optional[Tuple[int, bytes]]:
        """Reassemble a possibly chunked request; returns (request id, body)."""
        parts = bytearray()
        message_type, flag, body = first_type, first_flag, first_body
        request_id = None
        while True:
            if len(body) < 16:
                self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "short chunk")
                raise _ConnectionGone()
            _channel, _token, _seq, chunk_request = struct.unpack_from("<IIII", body)
            if request_id is None:
                request_id = chunk_request
            elif chunk_request != request_id:
                self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "interleaved request")
                raise _ConnectionGone()
            if flag == ChunkFlag.ABORT:
                return None
            parts += body[16:]
            if flag == ChunkFlag.FINAL:
                return request_id, bytes(parts)
            message_type, flag, body = self._recv_frame(conn)
            if message_type != first_type:
                self._send_error(conn, status.BAD_TCP_MESSAGE_TYPE_INVALID, "mixed chunk types")
                raise _ConnectionGone()

    def _send_response(
        self, conn: socket.socket, state: "_ConnState", request_id: int, body
    ) -> None:
        payload = bodies.encode_response(body)
        budget = (self.scenario.chunk_size_override or (state.client_receive_buffer - _CHUNK_OVERHEAD))
        pieces = [payload[i : i + budget] for i in range(0, len(payload), budget)] or [b""]
        for index, piece in enumerate(pieces):
            final = index == len(pieces) - 1
            w = Writer()
            w.write_u32(state.channel_id)
            w.write_u32(state.token_id)
            w.write_u32(state.next_sequence())
            w.write_u32(request_id)
            w.write_raw(piece)
            flag = ChunkFlag.FINAL if final else ChunkFlag.INTERMEDIATE
            conn.sendall(self._frame(MessageType.MESSAGE, flag, w.data()))

    def _response_header(self, request_header: bodies.RequestHeader, code: int = status.GOOD):
        return bodies.ResponseHeader(
            timestamp=request_header.timestamp,
            request_handle=request_header.request_handle,
            service_result=code,
        )

    def _fault(self, conn, state, request_id, request_header, code: int) -> None:
        self._event("fault_sent", code=status.name_of(code))
        body = bodies.ServiceFaultBody(header=self._response_header(request_header, code))
        self._send_response(conn, state, request_id, body)

    # -- service dispatch -----------------------------------------------------------

    def _dispatch(self, conn, state, request_id: int, request_body: bytes) -> None:
        try:
            request = bodies.decode_request(request_body, self._limits)
        except UnsupportedService:
            header = _header_of(request_body, self._limits)
            self._fault(conn, state, request_id, header, status.BAD_SERVICE_UNSUPPORTED)
            return
        except CodecError as exc:
            self._send_error(conn, status.BAD_DECODING_ERROR, str(exc))
            raise _ConnectionGone()

        if isinstance(request, bodies.CloseChannelRequest):
            self._event("channel_close", channel_id=state.channel_id)
            raise _ConnectionGone()

        handlers = {
            bodies.GetEndpointsRequest: self._on_get_endpoints,
            bodies.FindServersRequest: self._on_find_servers,
            bodies.CreateSessionRequest: self._on_create_session,
            bodies.ActivateSessionRequest: self._on_activate_session,
            bodies.CloseSessionRequest: self._on_close_session,
            bodies.BrowseRequest: self._on_browse,
            bodies.BrowseNextRequest: self._on_browse_next,
            bodies.ReadRequest: self._on_read,
            bodies.WriteRequest: self._on_write,
        }
        handler = handlers.get(type(request))
        if handler is None:
            self._fault(conn, state, request_id, request.header, status.BAD_SERVICE_UNSUPPORTED)
            return
        handler(conn, state, request_id, request)

    # -- discovery services -----------------------------------------------------------

    def _application_description(self) -> bodies.ApplicationDescription:
        return bodies.ApplicationDescription(
            application_uri=self.scenario.application_uri,
            product_uri=self.scenario.product_uri,
            application_name=LocalizedText(None, self.scenario.application_name),
            application_type=0,
            discovery_urls=(self.endpoint_url,),
        )

    def _endpoint_structs(self) -> Tuple[bodies.EndpointDescriptionStruct, ...]:
        app = self._application_description()
        out = []
        for ep in self.scenario.endpoints:
            tokens = tuple(
                bodies.UserTokenPolicyStruct(
                    policy_id=tp.policy_id,
                    token_type=int(tp.token_type),
                    security_policy_uri=tp.security_policy_uri or None,
                )
                for tp in ep.token_policies
            )
            out.append(
                bodies.EndpointDescriptionStruct(
                    endpoint_url=self.endpoint_url,
                    server=app,
                    server_certificate=self.certificate_der,
                    security_mode=ep.mode,
                    security_policy_uri=ep.security_policy_uri,
                    user_identity_tokens=tokens,
                    transport_profile_uri=policies.TRANSPORT_PROFILE_BINARY,
                    security_level=ep.security_level,
                )
            )
        return tuple(out)

    def _on_get_endpoints(self, conn, state, request_id, request) -> None:
        response = bodies.GetEndpointsResponse(
            header=self._response_header(request.header),
            endpoints=self._endpoint_structs(),
        )
        self._send_response(conn, state, request_id, response)

    def _on_find_servers(self, conn, state, request_id, request) -> None:
        if self.scenario.disable_find_servers:
            self._fault(conn, state, request_id, request.header, status.BAD_SERVICE_UNSUPPORTED)
            return
        servers = [self._application_description()]
        for known in self.scenario.known_servers:
            servers.append(
                bodies.ApplicationDescription(
                    application_uri=known.application_uri,
                    product_uri=known.product_uri or None,
                    application_name=LocalizedText(None, known.application_uri),
                    application_type=0,
                    discovery_urls=tuple(known.discovery_urls) or None,
                )
            )
        response = bodies.FindServersResponse(
            header=self._response_header(request.header), servers=tuple(servers)
        )
        self._send_response(conn, state, request_id, response)

    # -- session services ----------------------------------------------------------------

    def _on_create_session(self, conn, state, request_id, request) -> None:
        with self._lock:
            if len(self._sessions) >= self.scenario.max_sessions:
                over_cap = True
            else:
                over_cap = False
                self._session_counter += 1
                session = MockSession(
                    session_id=NodeRef(1, self._session_counter),
                    auth_token=NodeRef(1, secrets.token_bytes(16)),
                    nonce=secrets.token_bytes(self.scenario.nonce_length),
                )
                self._sessions[session.auth_token] = session
        if over_cap:
            self._event("session_refused", reason="too_many_sessions")
            self._fault(conn, state, request_id, request.header, status.BAD_TOO_MANY_SESSIONS)
            return
        self._event("session_created", session=str(session.session_id))
        response = bodies.CreateSessionResponse(
            header=self._response_header(request.header),
            session_id=session.session_id,
            auth_token=session.auth_token,
            revised_session_timeout=request.requested_session_timeout or 3_600_000.0,
            server_nonce=session.nonce,
            server_certificate=self.certificate_der,
            server_endpoints=self._endpoint_structs(),
            server_signature=bodies.SignatureData(None, None),
            max_request_message_size=2**24,
        )
        self._send_response(conn, state, request_id, response)

    def _session_for(self, header: bodies.RequestHeader) -> Optional[MockSession]:
        with self._lock:
            return self._sessions.get(header.auth_token)

    def _on_activate_session(self, conn, state, request_id, request) -> None:
        session = self._session_for(request.header)
        if session is None:
            self._fault(conn, state, request_id, request.header, status.BAD_SESSION_ID_INVALID)
            return
        with self._lock:
            locked_out = (
                self.scenario.lockout_after > 0
                and self._failed_logins >= self.scenario.lockout_after
            )
        if locked_out:
            # Simulated lockout: slam the door without an answer.
            self._event("auth_attempt", outcome="lockout_drop", token="any")
            raise _ConnectionGone()

        outcome, detail = self._check_identity(session, request)
        self._event("auth_attempt", outcome="accepted" if outcome == status.GOOD else status.name_of(outcome), **detail)
        if outcome != status.GOOD:
            with self._lock:
                self._failed_logins += 1
            self._fault(conn, state, request_id, request.header, outcome)
            return
        new_nonce = secrets.token_bytes(self.scenario.nonce_length)
        with self._lock:
            session.activated = True
            session.nonce = new_nonce
        self._event("session_activated", session=str(session.session_id), identity=session.identity)
        response = bodies.ActivateSessionResponse(
            header=self._response_header(request.header),
            server_nonce=new_nonce,
            results=(status.GOOD,),
        )
        self._send_response(conn, state, request_id, response)

    def _advertised_token_types(self) -> set:
        return {
            tp.token_type for ep in self.scenario.endpoints for tp in ep.token_policies
        }

    def _check_identity(self, session: MockSession, request) -> Tuple[int, dict]:
        """Returns (status code, event detail); GOOD mutates session identity."""
        ext = request.user_identity_token
        type_id = ext.type_id.identifier if ext.type_id.namespace_index == 0 else None
        scenario = self.scenario
        try:
            r = Reader(ext.payload or b"", self._limits)
            if type_id == bodies.TYPE_ANONYMOUS_TOKEN:
                r.read_string()  # policy id, not validated beyond parse
                if scenario.accept_anonymous or scenario.misdeclare_anonymous:
                    session.anonymous = True
                    session.identity = "anonymous"
                    return status.GOOD, {"token": "anonymous"}
                return status.BAD_IDENTITY_TOKEN_REJECTED, {"token": "anonymous"}

            if type_id == bodies.TYPE_USERNAME_TOKEN:
                r.read_string()  # policy id
                username = r.read_string() or ""
                password_blob = r.read_bytes() or b""
                algorithm = r.read_string() or ""
                if bodies.UserTokenType.USER_NAME not in self._advertised_token_types():
                    return status.BAD_IDENTITY_TOKEN_REJECTED, {"token": "username", "username": username}
                if algorithm:
                    try:
                        password_bytes, nonce = identity.decrypt_legacy_password(
                            password_blob,
                            self.private_key,
                            algorithm,
                            scenario.nonce_length,
                        )
                    except (ValueError, identity.IdentityError):
                        return status.BAD_IDENTITY_TOKEN_INVALID, {"token": "username", "username": username}
                    if nonce != session.nonce:
                        return status.BAD_IDENTITY_TOKEN_INVALID, {"token": "username", "username": username}
                else:
                    password_bytes = password_blob
                password = password_bytes.decode("utf-8", errors="replace")
                for cred in scenario.credentials:
                    if cred.username == username and cred.password == password:
                        session.anonymous = False
                        session.identity = f"username:{username}"
                        return status.GOOD, {"token": "username", "username": username}
                return status.BAD_USER_ACCESS_DENIED, {"token": "username", "username": username}

            if type_id == bodies.TYPE_X509_TOKEN:
                r.read_string()  # policy id
                certificate = r.read_bytes() or b""
                if bodies.UserTokenType.CERTIFICATE not in self._advertised_token_types():
                    return status.BAD_IDENTITY_TOKEN_REJECTED, {"token": "certificate"}
                if not scenario.accept_any_certificate:
                    # Strict trust: nothing is ever in the trust store.
                    return status.BAD_IDENTITY_TOKEN_REJECTED, {"token": "certificate"}
                signature = request.user_token_signature
                if signature.algorithm and signature.signature:
                    from cryptography import x509 as cx509

                    try:
                        cert = cx509.load_der_x509_certificate(certificate)
                    except Exception:
                        return status.BAD_IDENTITY_TOKEN_INVALID, {"token": "certificate"}
                    payload = self.certificate_der + session.nonce
                    if not identity.verify_with_uri(
                        cert.public_key(), payload, signature.signature, signature.algorithm
                    ):
                        return status.BAD_IDENTITY_TOKEN_REJECTED, {"token": "certificate"}
                session.anonymous = False
                session.identity = "certificate"
                return status.GOOD, {"token": "certificate"}
        except CodecError:
            return status.BAD_IDENTITY_TOKEN_INVALID, {"token": "malformed"}
        return status.BAD_IDENTITY_TOKEN_INVALID, {"token": f"type_{type_id}"}

    def _on_close_session(self, conn, state, request_id, request) -> None:
        with self._lock:
            session = self._sessions.pop(request.header.auth_token, None)
        if session is None:
            self._fault(conn, state, request_id, request.header, status.BAD_SESSION_ID_INVALID)
            return
        self._event("session_closed", session=str(session.session_id))
        response = bodies.CloseSessionResponse(header=self._response_header(request.header))
        self._send_response(conn, state, request_id, response)

    # -- address-space services -------------------------------------------------------------

    def _activated_session(self, conn, state, request_id, request) -> Optional[MockSession]:
        session = self._session_for(request.header)
        if session is None:
            self._fault(conn, state, request_id, request.header, status.BAD_SESSION_ID_INVALID)
            return None
        if not session.activated:
            self._fault(conn, state, request_id, request.header, status.BAD_SESSION_NOT_ACTIVATED)
            return None
        return session

    def _visible(self, node: MockNode, session: MockSession) -> bool:
        return node.anonymous_visible or not session.anonymous

    def _on_browse(self, conn, state, request_id, request) -> None:
        session = self._activated_session(conn, state, request_id, request)
        if session is None:
            return
        max_refs = request.requested_max_references
        results = []
        for desc in request.nodes_to_browse:
            results.append(self._browse_one(session, desc.node, max_refs))
        response = bodies.BrowseResponse(
            header=self._response_header(request.header), results=tuple(results)
        )
        self._send_response(conn, state, request_id, response)

    def _browse_one(self, session: MockSession, ref: NodeRef, max_refs: int) -> bodies.BrowseResult:
        with self._lock:
            node = self._nodes.get(ref)
            if node is None or not self._visible(node, session):
                return bodies.BrowseResult(status_code=status.BAD_NODE_ID_UNKNOWN)
            children = [
                self._nodes[child]
                for child in node.children
                if child in self._nodes and self._visible(self._nodes[child], session)
            ]
            references = [
                bodies.ReferenceDescription(
                    reference_type=NodeRef(0, bodies.REF_ORGANIZES
                    if node.node_class == bodies.NodeClass.OBJECT
                    else bodies.REF_HAS_COMPONENT),
                    is_forward=True,
                    node=child.ref,
                    browse_name=bodies.QualifiedName(child.ref.namespace_index, child.display_name),
                    display_name=LocalizedText(None, child.display_name),
                    node_class=child.node_class,
                    type_definition=NodeRef(),
                )
                for child in children
            ]
            self._event("browse", node=str(ref), results=len(references))
            if max_refs and len(references) > max_refs:
                token = secrets.token_bytes(8)
                self._continuations[token] = (references[max_refs:], max_refs)
                return bodies.BrowseResult(
                    continuation_point=token, references=tuple(references[:max_refs])
                )
            return bodies.BrowseResult(references=tuple(references))

    def _on_browse_next(self, conn, state, request_id, request) -> None:
        session = self._activated_session(conn, state, request_id, request)
        if session is None:
            return
        results = []
        with self._lock:
            for token in request.continuation_points:
                stored = self._continuations.pop(token, None)
                if stored is None:
                    results.append(
                        bodies.BrowseResult(status_code=status.BAD_CONTINUATION_POINT_INVALID)
                    )
                    continue
                remaining, max_refs = stored
                if request.release_continuation_points:
                    results.append(bodies.BrowseResult())
                    continue
                if max_refs and len(remaining) > max_refs:
                    new_token = secrets.token_bytes(8)
                    self._continuations[new_token] = (remaining[max_refs:], max_refs)
                    results.append(
                        bodies.BrowseResult(
                            continuation_point=new_token,
                            references=tuple(remaining[:max_refs]),
                        )
                    )
                else:
                    results.append(bodies.BrowseResult(references=tuple(remaining)))
        response = bodies.BrowseNextResponse(
            header=self._response_header(request.header), results=tuple(results)
        )
        self._send_response(conn, state, request_id, response)

    def _on_read(self, conn, state, request_id, request) -> None:
        session = self._activated_session(conn, state, request_id, request)
        if session is None:
            return
        results = tuple(self._read_one(session, rv) for rv in request.nodes_to_read)
        response = bodies.ReadResponse(
            header=self._response_header(request.header), results=results
        )
        self._send_response(conn, state, request_id, response)

    def _read_one(self, session: MockSession, rv: bodies.ReadValueId) -> bodies.DataValue:
        with self._lock:
            node = self._nodes.get(rv.node)
            if node is None or not self._visible(node, session):
                result = bodies.DataValue(status=status.BAD_NODE_ID_UNKNOWN)
                self._event("read", node=str(rv.node), attribute=rv.attribute_id,
                            status=status.name_of(result.status_or_good))
                return result
            attr = rv.attribute_id
            if attr == bodies.AttributeId.VALUE:
                if node.node_class != bodies.NodeClass.VARIABLE:
                    result = bodies.DataValue(status=status.BAD_ATTRIBUTE_ID_INVALID)
                elif not node.access_level & bodies.ACCESS_READ_BIT:
                    result = bodies.DataValue(status=status.BAD_NOT_READABLE)
                elif not node.user_access_level & bodies.ACCESS_READ_BIT:
                    result = bodies.DataValue(status=status.BAD_USER_ACCESS_DENIED)
                else:
                    result = bodies.DataValue(value=node.value)
            elif attr == bodies.AttributeId.ACCESS_LEVEL:
                if node.node_class != bodies.NodeClass.VARIABLE:
                    result = bodies.DataValue(status=status.BAD_ATTRIBUTE_ID_INVALID)
                else:
                    result = bodies.DataValue(value=WireValue.byte(node.access_level))
            elif attr == bodies.AttributeId.USER_ACCESS_LEVEL:
                if node.node_class != bodies.NodeClass.VARIABLE:
                    result = bodies.DataValue(status=status.BAD_ATTRIBUTE_ID_INVALID)
                else:
                    result = bodies.DataValue(value=WireValue.byte(node.user_access_level))
            elif attr == bodies.AttributeId.DISPLAY_NAME:
                result = bodies.DataValue(
                    value=WireValue(ValueKind.LOCALIZED_TEXT, LocalizedText(None, node.display_name))
                )
            elif attr == bodies.AttributeId.NODE_CLASS:
                result = bodies.DataValue(value=WireValue.int32(int(node.node_class)))
            else:
                result = bodies.DataValue(status=status.BAD_ATTRIBUTE_ID_INVALID)
            self._event("read", node=str(rv.node), attribute=rv.attribute_id,
                        status=status.name_of(result.status_or_good))
            return result

    def _on_write(self, conn, state, request_id, request) -> None:
        session = self._activated_session(conn, state, request_id, request)
        if session is None:
            return
        results = tuple(self._write_one(session, wv) for wv in request.nodes_to_write)
        response = bodies.WriteResponse(
            header=self._response_header(request.header), results=results
        )
        self._send_response(conn, state, request_id, response)

    def _write_one(self, session: MockSession, wv: bodies.WriteValue) -> int:
        with self._lock:
            node = self._nodes.get(wv.node)
            if node is None or not self._visible(node, session):
                code = status.BAD_NODE_ID_UNKNOWN
            elif wv.attribute_id != bodies.AttributeId.VALUE:
                code = status.BAD_ATTRIBUTE_ID_INVALID
            elif node.node_class != bodies.NodeClass.VARIABLE:
                code = status.BAD_ATTRIBUTE_ID_INVALID
            elif not node.access_level & bodies.ACCESS_WRITE_BIT:
                code = status.BAD_NOT_WRITABLE
            elif not node.user_access_level & bodies.ACCESS_WRITE_BIT:
                code = status.BAD_USER_ACCESS_DENIED
            else:
                incoming = wv.value.value
                if incoming is None or not self._type_matches(node, incoming):
                    code = status.BAD_TYPE_MISMATCH
                else:
                    node.value = incoming
                    code = status.GOOD
            self._event("write", node=str(wv.node), status=status.name_of(code))
            return code

    @staticmethod
    def _type_matches(node: MockNode, incoming: WireValue) -> bool:
        if node.value is None:
            return False
        if node.value.kind == ValueKind.ARRAY:
            return (
                incoming.kind == ValueKind.ARRAY
                and incoming.element_kind == node.value.element_kind
            )
        return incoming.kind == node.value.kind


class _ConnState:
    def __init__(self):
        self.channel_id = 0
        self.token_id = 0
        self.client_receive_buffer = MAX_FRAME
        self._sequence = 0

    def next_sequence(self) -> int:
        self._sequence += 1
        return self._sequence


def _header_of(request_body: bytes, limits: DecodeLimits) -> bodies.RequestHeader:
    """Best-effort request header extraction for faulting unknown services."""
    try:
        r = Reader(request_body, limits)
        r.read_noderef()
        return bodies.RequestHeader.decode(r)
    except CodecError:
        return bodies.RequestHeader()


def start(scenario: ScenarioConfig, host: str = "127.0.0.1") -> MockServer:
    """Start a server for the scenario; stop() it when done."""
    return MockServer(scenario, host).start()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uascout-mock", description="Run a scenario-driven mock server"
    )
    parser.add_argument("scenario", help="path to a scenario YAML file")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, help="override the scenario listen port")
    args = parser.parse_args(argv)

    scenario = ScenarioConfig.from_file(args.scenario)
    if args.port is not None:
        scenario.listen_port = args.port
    server = start(scenario, host=args.host)
    print(f"mock scenario {scenario.name!r} listening on {server.endpoint_url}")
    print(f"control socket on {server.host}:{server.control_port}")
    try:
        while True:
            threading.Event().wait(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

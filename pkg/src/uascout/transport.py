"""TCP connection lifecycle for the binary protocol.

A Channel owns one socket and walks the phases Disconnected -> HelloSent ->
Negotiated -> ChannelOpen -> Closed. Channels are plaintext only (security
policy None, mode None): the assessor extracts information and tests logins,
it never needs to speak Sign/SignAndEncrypt itself. One request is in flight
at a time; scanning parallelism lives at the host level.
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from uascout.wire import bodies, status
from uascout.wire.codec import DEFAULT_LIMITS, DecodeLimits, Reader, Writer, ticks_from_unix
from uascout.wire.errors import CodecError, ServiceFaultError
from uascout.wire.frames import (
    ChunkFlag,
    HEADER_SIZE,
    MessageType,
    peek_frame_size,
)

DEFAULT_TOKEN_LIFETIME_MS = 300_000
MAX_FRAME = 65535

# MSG/CLO chunks prepend channel id, token id, sequence number, request id.
_CHUNK_OVERHEAD = HEADER_SIZE + 16


class Phase(Enum):
    DISCONNECTED = "disconnected"
    HELLO_SENT = "hello_sent"
    NEGOTIATED = "negotiated"
    CHANNEL_OPEN = "channel_open"
    CLOSED = "closed"


@dataclass(frozen=True)
class Timeouts:
    connect: float = 3.0
    read: float = 5.0
    write: float = 3.0


@dataclass(frozen=True)
class NegotiatedLimits:
    receive_buffer: int
    send_buffer: int
    max_message_size: int
    max_chunk_count: int


class TransportFailure(Exception):
    """Base class for transport-level errors."""


class ConnectTimeout(TransportFailure):
    """TCP connect failed: refused, unreachable or timed out."""


class NotOpcUa(TransportFailure):
    """Peer answered the hello with something that is not this protocol."""


class TransportError(TransportFailure):
    """Peer sent an ERR frame; carries its status code and reason."""

    def __init__(self, code: int, reason: Optional[str]):
        self.code = code
        self.reason = reason or ""
        super().__init__(f"peer error {status.name_of(code)}: {self.reason}")


class ResponseTimeout(TransportFailure):
    """No (complete) response within the read timeout."""


class ChannelClosedByPeer(TransportFailure):
    """TCP connection dropped while a response was pending."""


class SequenceViolation(TransportFailure):
    """Chunk arrived out of order or for the wrong request."""


class PhaseError(TransportFailure):
    """Operation attempted from a phase that does not permit it."""


@dataclass
class Channel:
    """One plaintext secure channel and its bookkeeping state."""

    host: str
    port: int
    timeouts: Timeouts = field(default_factory=Timeouts)
    limits: DecodeLimits = DEFAULT_LIMITS
    endpoint_url: str = ""
    phase: Phase = Phase.DISCONNECTED
    negotiated: Optional[NegotiatedLimits] = None
    channel_id: int = 0
    token_id: int = 0
    next_sequence: int = 1
    next_request_id: int = 1
    token_deadline: float = 0.0
    token_lifetime: float = 0.0  # seconds
    _sock: Optional[socket.socket] = None
    _expected_remote_sequence: Optional[int] = None

    # -- low-level I/O ------------------------------------------------------

    def _send_raw(self, data: bytes) -> None:
        if self._sock is None:
            raise ChannelClosedByPeer("socket already gone")
        try:
            self._sock.settimeout(self.timeouts.write)
            self._sock.sendall(data)
        except socket.timeout as exc:
            raise ResponseTimeout(f"write timed out: {exc}") from None
        except OSError as exc:
            raise ChannelClosedByPeer(f"send failed: {exc}") from None

    def _recv_exact(self, n: int, deadline: float) -> bytes:
        if self._sock is None:
            raise ChannelClosedByPeer("socket already gone")
        chunks = bytearray()
        while len(chunks) < n:
            budget = deadline - time.monotonic()
            if budget <= 0:
                raise ResponseTimeout(f"no response within {self.timeouts.read}s")
            try:
                self._sock.settimeout(budget)
                piece = self._sock.recv(n - len(chunks))
            except socket.timeout:
                raise ResponseTimeout(f"no response within {self.timeouts.read}s") from None
            except OSError as exc:
                raise ChannelClosedByPeer(f"recv failed: {exc}") from None
            if not piece:
                raise ChannelClosedByPeer("peer closed the connection")
            chunks += piece
        return bytes(chunks)

    def _recv_frame(self) -> tuple[MessageType, ChunkFlag, bytes]:
        deadline = time.monotonic() + self.timeouts.read
        header = self._recv_exact(HEADER_SIZE, deadline)
        total = peek_frame_size(header, MAX_FRAME)
        body = self._recv_exact(total - HEADER_SIZE, deadline) if total > HEADER_SIZE else b""
        message_type = MessageType(header[0:3])
        chunk_flag = ChunkFlag(header[3:4])
        return message_type, chunk_flag, body

    @staticmethod
    def _frame(message_type: MessageType, flag: ChunkFlag, body: bytes) -> bytes:
        size = HEADER_SIZE + len(body)
        return message_type.value + flag.value + size.to_bytes(4, "little") + body

    # -- handshake ----------------------------------------------------------

    def _hello(self) -> None:
        hello = bodies.HelloBody(endpoint_url=self.endpoint_url)
        self._send_raw(self._frame(MessageType.HELLO, ChunkFlag.FINAL, hello.encode()))
        self.phase = Phase.HELLO_SENT
        try:
            message_type, _flag, body = self._recv_frame()
        except (ResponseTimeout, ChannelClosedByPeer):
            raise
        except CodecError as exc:
            raise NotOpcUa(f"response is not a protocol frame: {exc}") from None
        if message_type == MessageType.ERROR:
            err = bodies.ErrorBody.decode(body, self.limits)
            raise TransportError(err.code, err.reason)
        if message_type != MessageType.ACKNOWLEDGE:
            raise NotOpcUa(f"expected acknowledge, got {message_type.value!r}")
        try:
            ack = bodies.AcknowledgeBody.decode(body, self.limits)
        except CodecError as exc:
            raise NotOpcUa(f"acknowledge body malformed: {exc}") from None
        self.negotiated = NegotiatedLimits(
            receive_buffer=ack.receive_buffer_size,
            send_buffer=ack.send_buffer_size,
            max_message_size=ack.max_message_size,
            max_chunk_count=ack.max_chunk_count,
        )
        self.phase = Phase.NEGOTIATED

    def _open_channel(self, request_type: int = bodies.ChannelRequestType.ISSUE) -> None:
        request = bodies.OpenChannelRequest(
            header=self._request_header(),
            request_type=request_type,
            requested_lifetime=DEFAULT_TOKEN_LIFETIME_MS,
        )
        w = Writer()
        w.write_u32(self.channel_id)
        w.write_string("http://opcfoundation.org/UA/SecurityPolicy#None")
        w.write_bytes(None)  # no sender certificate
        w.write_bytes(None)  # no receiver thumbprint
        seq, req_id = self._next_ids()
        w.write_u32(seq)
        w.write_u32(req_id)
        w.write_raw(bodies.encode_request(request))
        self._send_raw(self._frame(MessageType.OPEN_CHANNEL, ChunkFlag.FINAL, w.data()))

        message_type, _flag, body = self._recv_frame()
        if message_type == MessageType.ERROR:
            err = bodies.ErrorBody.decode(body, self.limits)
            raise TransportError(err.code, err.reason)
        if message_type != MessageType.OPEN_CHANNEL:
            raise NotOpcUa(f"expected channel response, got {message_type.value!r}")
        r = Reader(body, self.limits)
        r.read_u32()  # channel id, repeated below in the token
        r.read_string()  # security policy
        r.read_bytes()
        r.read_bytes()
        remote_seq = r.read_u32()
        remote_req = r.read_u32()
        if remote_req != req_id:
            raise SequenceViolation(f"channel response for request {remote_req}, sent {req_id}")
        self._expected_remote_sequence = remote_seq + 1
        response = bodies.decode_response(body[r.consumed :], self.limits)
        if not isinstance(response, bodies.OpenChannelResponse):
            raise NotOpcUa(f"unexpected channel response body {type(response).__name__}")
        self.channel_id = response.security_token.channel_id
        self.token_id = response.security_token.token_id
        self.token_lifetime = response.security_token.revised_lifetime / 1000.0
        self.token_deadline = time.monotonic() + self.token_lifetime
        self.phase = Phase.CHANNEL_OPEN

    def _request_header(self, timeout_ms: int = 10_000) -> bodies.RequestHeader:
        return bodies.RequestHeader(
            timestamp=ticks_from_unix(time.time()),
            request_handle=self.next_request_id,
            timeout_hint=timeout_ms,
        )

    def request_header(self, auth_token=None, timeout_ms: int = 10_000) -> bodies.RequestHeader:
        """Header for the next service call, addressed to the given session."""
        header = self._request_header(timeout_ms)
        if auth_token is not None:
            header.auth_token = auth_token
        return header

    def _next_ids(self) -> tuple[int, int]:
        seq, req_id = self.next_sequence, self.next_request_id
        self.next_sequence += 1
        self.next_request_id += 1
        return seq, req_id

    # -- public operations ----------------------------------------------------

    def invoke(self, request) -> object:
        """Send one request body and return the decoded response body."""
        if self.phase != Phase.CHANNEL_OPEN:
            raise PhaseError(f"invoke requires an open channel, phase is {self.phase.value}")
        if self.token_lifetime and time.monotonic() > self.token_deadline - 0.25 * self.token_lifetime:
            self._open_channel(bodies.ChannelRequestType.RENEW)
        payload = bodies.encode_request(request)
        req_id = self._send_message(payload)
        return self._receive_response(req_id)

    def _send_message(self, payload: bytes) -> int:
        assert self.negotiated is not None
        budget = min(self.negotiated.receive_buffer, MAX_FRAME) - _CHUNK_OVERHEAD
        if budget < 64:
            raise TransportFailure(f"peer receive buffer too small: {self.negotiated.receive_buffer}")
        pieces = [payload[i : i + budget] for i in range(0, len(payload), budget)] or [b""]
        req_id = self.next_request_id
        self.next_request_id += 1
        for index, piece in enumerate(pieces):
            final = index == len(pieces) - 1
            seq = self.next_sequence
            self.next_sequence += 1
            w = Writer()
            w.write_u32(self.channel_id)
            w.write_u32(self.token_id)
            w.write_u32(seq)
            w.write_u32(req_id)
            w.write_raw(piece)
            flag = ChunkFlag.FINAL if final else ChunkFlag.INTERMEDIATE
            self._send_raw(self._frame(MessageType.MESSAGE, flag, w.data()))
        return req_id

    def _receive_response(self, req_id: int) -> object:
        parts = bytearray()
        while True:
            message_type, flag, body = self._recv_frame()
            if message_type == MessageType.ERROR:
                err = bodies.ErrorBody.decode(body, self.limits)
                raise TransportError(err.code, err.reason)
            if message_type not in (MessageType.MESSAGE, MessageType.CLOSE_CHANNEL):
                raise SequenceViolation(f"unexpected {message_type.value!r} frame mid-conversation")
            if len(body) < 16:
                raise SequenceViolation("message chunk too short for its headers")
            channel_id, token_id, seq, chunk_req = struct.unpack_from("<IIII", body)
            if channel_id != self.channel_id:
                raise SequenceViolation(f"chunk for channel {channel_id}, ours is {self.channel_id}")
            if chunk_req != req_id:
                raise SequenceViolation(f"chunk for request {chunk_req}, awaiting {req_id}")
            if self._expected_remote_sequence is not None and seq != self._expected_remote_sequence:
                raise SequenceViolation(
                    f"chunk sequence {seq}, expected {self._expected_remote_sequence}"
                )
            self._expected_remote_sequence = seq + 1
            if flag == ChunkFlag.ABORT:
                r = Reader(body[16:], self.limits)
                code = r.read_u32()
                reason = r.read_string()
                raise TransportError(code, reason)
            parts += body[16:]
            if flag == ChunkFlag.FINAL:
                break
        return bodies.decode_response(bytes(parts), self.limits)

    def close(self) -> None:
        """Best effort: announce channel close when open, then drop the socket."""
        if self.phase == Phase.CLOSED:
            return
        if self.phase == Phase.CHANNEL_OPEN and self._sock is not None:
            try:
                request = bodies.CloseChannelRequest(header=self._request_header())
                payload = bodies.encode_request(request)
                seq, req_id = self._next_ids()
                w = Writer()
                w.write_u32(self.channel_id)
                w.write_u32(self.token_id)
                w.write_u32(seq)
                w.write_u32(req_id)
                w.write_raw(payload)
                self._send_raw(self._frame(MessageType.CLOSE_CHANNEL, ChunkFlag.FINAL, w.data()))
            except (TransportFailure, CodecError):
                pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None
        self.phase = Phase.CLOSED

    def __enter__(self) -> "Channel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def tcp_connect(host: str, port: int, timeout: float) -> socket.socket:
    try:
        return socket.create_connection((host, port), timeout=timeout)
    except socket.timeout as exc:
        raise ConnectTimeout(f"connect to {host}:{port} timed out") from None
    except OSError as exc:
        raise ConnectTimeout(f"connect to {host}:{port} failed: {exc}") from None


def connect(
    host: str,
    port: int,
    timeouts: Optional[Timeouts] = None,
    limits: DecodeLimits = DEFAULT_LIMITS,
    endpoint_url: Optional[str] = None,
) -> Channel:
    """Full client handshake: TCP, hello/acknowledge, plaintext channel open."""
    timeouts = timeouts or Timeouts()
    channel = Channel(
        host=host,
        port=port,
        timeouts=timeouts,
        limits=limits,
        endpoint_url=endpoint_url or f"opc.tcp://{host}:{port}/",
    )
    channel._sock = tcp_connect(host, port, timeouts.connect)
    try:
        channel._hello()
        channel._open_channel()
    except ServiceFaultError as exc:
        channel.close()
        raise TransportError(exc.code, str(exc)) from None
    except Exception:
        channel.close()
        raise
    return channel

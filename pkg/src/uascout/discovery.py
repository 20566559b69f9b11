"""Host/port sweep with protocol verification.

A probe is deliberately light: TCP connect, one hello, and - only when the
peer acknowledged - a close-channel frame. No secure channel, no session, so
probing leaves no trace beyond a connection log entry on the target. An ERR
frame still counts as protocol-verified: only a real stack emits one.
"""

from __future__ import annotations

import ipaddress
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from uascout.wire import bodies, status
from uascout.wire.codec import Writer
from uascout.wire.errors import CodecError
from uascout.wire.frames import ChunkFlag, HEADER_SIZE, MessageType, peek_frame_size

DEFAULT_PORT = 4840
DEFAULT_PARALLELISM = 64
DEFAULT_MATRIX_CAP = 65536
MAX_FRAME = 65535


class Verdict(Enum):
    OPC_UA = "opcua"
    OPEN_NOT_OPC_UA = "open_not_opcua"
    CLOSED = "closed"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ProbeTimeouts:
    connect: float = 3.0
    read: float = 5.0


@dataclass(frozen=True)
class AckLimits:
    receive_buffer: int
    send_buffer: int
    max_message_size: int
    max_chunk_count: int


@dataclass(frozen=True)
class ProbeResult:
    host: str
    port: int
    verdict: Verdict
    ack_limits: Optional[AckLimits] = None
    error_detail: str = ""

    def sort_key(self):
        try:
            addr = (0, int(ipaddress.ip_address(self.host)))
        except ValueError:
            addr = (1, self.host)
        return (*addr, self.port)


class TargetMatrixTooLarge(Exception):
    """host x port expansion exceeds the configured cap."""


@dataclass
class TargetSpec:
    hosts: List[str] = field(default_factory=list)  # addresses, names, CIDR ranges
    ports: List[int] = field(default_factory=lambda: [DEFAULT_PORT])
    parallelism: int = DEFAULT_PARALLELISM
    timeouts: ProbeTimeouts = field(default_factory=ProbeTimeouts)
    matrix_cap: int = DEFAULT_MATRIX_CAP

    def expand(self) -> List[Tuple[str, int]]:
        """The host x port matrix, deduplicated, capped, deterministic order."""
        hosts: List[str] = []
        seen = set()
        for entry in self.hosts:
            for host in _expand_host(entry):
                if host not in seen:
                    seen.add(host)
                    hosts.append(host)
        pairs = [(host, port) for host in hosts for port in self.ports]
        if len(pairs) > self.matrix_cap:
            raise TargetMatrixTooLarge(
                f"{len(pairs)} host/port combinations exceed the cap of {self.matrix_cap}"
            )
        return pairs


def _expand_host(entry: str) -> List[str]:
    entry = entry.strip()
    if "/" in entry:
        network = ipaddress.ip_network(entry, strict=False)
        hosts = list(network.hosts()) or [network.network_address]
        return [str(h) for h in hosts]
    return [entry]


def parse_targets_file(path: Union[str, Path]) -> List[str]:
    """One host, host:port or CIDR per line; ``#`` starts a comment."""
    entries: List[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.append(line)
    return entries


def split_host_port(entry: str, default_port: Optional[int] = None) -> Tuple[str, Optional[int]]:
    """Split host[:port]; bare hosts keep port None (or the given default)."""
    if entry.startswith("["):  # [v6]:port
        host, _, rest = entry[1:].partition("]")
        port = int(rest[1:]) if rest.startswith(":") else default_port
        return host, port
    if entry.count(":") == 1:
        host, _, port_text = entry.partition(":")
        return host, int(port_text)
    return entry, default_port


def _read_exact(sock: socket.socket, n: int, timeout: float) -> bytes:
    sock.settimeout(timeout)
    data = bytearray()
    while len(data) < n:
        piece = sock.recv(n - len(data))
        if not piece:
            raise ConnectionError("peer closed")
        data += piece
    return bytes(data)


def _close_channel_frame() -> bytes:
    """A probe-grade close announcement (channel id 0, token 0)."""
    request = bodies.CloseChannelRequest()
    w = Writer()
    w.write_u32(0)
    w.write_u32(0)
    w.write_u32(1)
    w.write_u32(1)
    w.write_raw(bodies.encode_request(request))
    body = w.data()
    size = HEADER_SIZE + len(body)
    return MessageType.CLOSE_CHANNEL.value + ChunkFlag.FINAL.value + size.to_bytes(4, "little") + body


def probe(host: str, port: int, timeouts: Optional[ProbeTimeouts] = None) -> ProbeResult:
    """Verify protocol presence on one host/port; every outcome is a verdict."""
    timeouts = timeouts or ProbeTimeouts()
    try:
        sock = socket.create_connection((host, port), timeout=timeouts.connect)
    except socket.timeout:
        return ProbeResult(host, port, Verdict.TIMEOUT, error_detail="connect timeout")
    except ConnectionRefusedError:
        return ProbeResult(host, port, Verdict.CLOSED, error_detail="connection refused")
    except OSError as exc:
        return ProbeResult(host, port, Verdict.TIMEOUT, error_detail=str(exc))

    try:
        with sock:
            hello = bodies.HelloBody(endpoint_url=f"opc.tcp://{host}:{port}/")
            frame = (
                MessageType.HELLO.value
                + ChunkFlag.FINAL.value
                + (HEADER_SIZE + len(hello.encode())).to_bytes(4, "little")
                + hello.encode()
            )
            sock.sendall(frame)
            try:
                header = _read_exact(sock, HEADER_SIZE, timeouts.read)
                total = peek_frame_size(header, MAX_FRAME)
                body = (
                    _read_exact(sock, total - HEADER_SIZE, timeouts.read)
                    if total > HEADER_SIZE
                    else b""
                )
            except socket.timeout:
                return ProbeResult(
                    host, port, Verdict.OPEN_NOT_OPC_UA, error_detail="no response to hello"
                )
            except (ConnectionError, OSError) as exc:
                return ProbeResult(host, port, Verdict.OPEN_NOT_OPC_UA, error_detail=str(exc))
            except CodecError as exc:
                return ProbeResult(host, port, Verdict.OPEN_NOT_OPC_UA, error_detail=str(exc))

            tag = header[0:3]
            if tag == MessageType.ACKNOWLEDGE.value:
                try:
                    ack = bodies.AcknowledgeBody.decode(body)
                except CodecError as exc:
                    return ProbeResult(
                        host, port, Verdict.OPEN_NOT_OPC_UA, error_detail=f"bad acknowledge: {exc}"
                    )
                try:
                    sock.sendall(_close_channel_frame())
                except OSError:
                    pass
                return ProbeResult(
                    host,
                    port,
                    Verdict.OPC_UA,
                    ack_limits=AckLimits(
                        receive_buffer=ack.receive_buffer_size,
                        send_buffer=ack.send_buffer_size,
                        max_message_size=ack.max_message_size,
                        max_chunk_count=ack.max_chunk_count,
                    ),
                )
            if tag == MessageType.ERROR.value:
                # A well-formed ERR frame still proves the protocol.
                try:
                    err = bodies.ErrorBody.decode(body)
                    detail = f"peer error {status.name_of(err.code)}"
                except CodecError:
                    detail = "peer error (unparseable)"
                return ProbeResult(host, port, Verdict.OPC_UA, error_detail=detail)
            return ProbeResult(
                host, port, Verdict.OPEN_NOT_OPC_UA, error_detail=f"unexpected frame {tag!r}"
            )
    except OSError as exc:
        return ProbeResult(host, port, Verdict.OPEN_NOT_OPC_UA, error_detail=str(exc))


def sweep(spec: TargetSpec) -> List[ProbeResult]:
    """Probe the whole matrix with bounded concurrency; results are sorted."""
    pairs = spec.expand()
    if not pairs:
        return []
    results: List[ProbeResult] = []
    workers = max(1, min(spec.parallelism, len(pairs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(lambda hp: probe(hp[0], hp[1], spec.timeouts), pairs):
            results.append(result)
    results.sort(key=ProbeResult.sort_key)
    return results

#!/usr/bin/env python3
"""Regenerate the golden wire-capture fixtures in tests/fixtures/golden/.

This script derives every message byte-by-byte with explicit struct.pack
calls following the published binary encoding layout. It deliberately does
NOT import the uascout package: the fixtures are the independent side of the
differential codec test, so they must never be produced by the code they
check.

Regeneration procedure:
    python3 tools/regenerate_golden.py            # rewrite fixture files
    python3 tools/regenerate_golden.py --check    # verify files match

When the `asyncua` package is importable, --verify-asyncua additionally
cross-checks a subset of the fixtures against that stack's encoder.
"""

from __future__ import annotations

import argparse
import struct
import sys
from pathlib import Path

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden"

# 2020-01-01T00:00:00Z in 100 ns ticks since 1601-01-01 (epoch delta
# 11644473600 s, plus 1577836800 s of Unix time, times 10^7).
FIXED_TIMESTAMP = (11644473600 + 1577836800) * 10_000_000

URL = "opc.tcp://testhost:4840/"
POLICY_NONE = "http://opcfoundation.org/UA/SecurityPolicy#None"
TRANSPORT_PROFILE = "http://opcfoundation.org/UA-Profile/Transport/uatcp-uasc-uabinary"


def u8(v):
    return struct.pack("<B", v)


def u16(v):
    return struct.pack("<H", v)


def u32(v):
    return struct.pack("<I", v)


def i32(v):
    return struct.pack("<i", v)


def i64(v):
    return struct.pack("<q", v)


def f64(v):
    return struct.pack("<d", v)


def string(v):
    if v is None:
        return i32(-1)
    raw = v.encode("utf-8")
    return i32(len(raw)) + raw


def bytestring(v):
    if v is None:
        return i32(-1)
    return i32(len(v)) + v


def node_two_byte(num):
    return u8(0x00) + u8(num)


def node_four_byte(ns, num):
    return u8(0x01) + u8(ns) + u16(num)


def node_string(ns, text):
    return u8(0x03) + u16(ns) + string(text)


def localized_text(locale, text):
    mask = (0x01 if locale is not None else 0) | (0x02 if text is not None else 0)
    out = u8(mask)
    if locale is not None:
        out += string(locale)
    if text is not None:
        out += string(text)
    return out


def null_extension():
    # type id two-byte 0, encoding byte 0 (no body)
    return node_two_byte(0) + u8(0x00)


def extension(type_num, payload):
    return node_four_byte(0, type_num) + u8(0x01) + bytestring(payload)


def request_header(handle, auth_token=None, timeout_ms=10_000):
    out = auth_token if auth_token is not None else node_two_byte(0)
    out += i64(FIXED_TIMESTAMP)
    out += u32(handle)
    out += u32(0)  # return diagnostics
    out += string(None)  # audit entry id
    out += u32(timeout_ms)
    out += null_extension()
    return out


def response_header(handle, result=0):
    out = i64(FIXED_TIMESTAMP)
    out += u32(handle)
    out += u32(result)
    out += u8(0x00)  # empty diagnostic info
    out += i32(-1)  # null string table
    out += null_extension()
    return out


def frame(tag, body):
    return tag + b"F" + u32(8 + len(body)) + body


def empty_array():
    return i32(0)


def null_array():
    return i32(-1)


SESSION_AUTH_TOKEN = node_four_byte(1, 7)


def build_fixtures():
    fixtures = {}

    hello_body = (
        u32(0)  # protocol version
        + u32(65535)  # receive buffer
        + u32(65535)  # send buffer
        + u32(16777216)  # max message size
        + u32(4096)  # max chunk count
        + string(URL)
    )
    fixtures["hello.hex"] = (
        frame(b"HEL", hello_body),
        "Hello frame: version 0, 64 KiB buffers, 16 MiB max message,\n"
        "4096 chunks, endpoint url " + URL,
    )

    ack_body = u32(0) + u32(65535) + u32(65535) + u32(16777216) + u32(4096)
    fixtures["acknowledge.hex"] = (
        frame(b"ACK", ack_body),
        "Acknowledge frame mirroring the hello limits",
    )

    error_body = u32(0x80830000) + string("endpoint url rejected")
    fixtures["error.hex"] = (
        frame(b"ERR", error_body),
        "Error frame: Bad_TcpEndpointUrlInvalid plus reason string",
    )

    fixtures["open_secure_channel_request.hex"] = (
        node_four_byte(0, 446)  # OpenSecureChannelRequest type id
        + request_header(1)
        + u32(0)  # client protocol version
        + u32(0)  # request type: issue
        + u32(1)  # security mode: none
        + bytestring(None)  # client nonce
        + u32(300_000),  # requested lifetime ms
        "OpenSecureChannel request body: issue, mode none, null nonce,\n"
        "300 s lifetime, request handle 1",
    )

    fixtures["close_secure_channel_request.hex"] = (
        node_four_byte(0, 452) + request_header(2),
        "CloseSecureChannel request body, request handle 2",
    )

    fixtures["get_endpoints_request.hex"] = (
        node_four_byte(0, 428)
        + request_header(3)
        + string(URL)
        + empty_array()  # locale ids
        + empty_array(),  # profile uris
        "GetEndpoints request body for " + URL + ", empty locale/profile lists",
    )

    fixtures["find_servers_request.hex"] = (
        node_four_byte(0, 422)
        + request_header(4)
        + string(URL)
        + empty_array()
        + empty_array(),
        "FindServers request body for " + URL,
    )

    client_description = (
        string("urn:uascout:client")
        + string("urn:uascout")
        + localized_text(None, "uascout")
        + u32(1)  # application type: client
        + string(None)  # gateway server uri
        + string(None)  # discovery profile uri
        + null_array()  # discovery urls
    )
    fixtures["create_session_request.hex"] = (
        node_four_byte(0, 461)
        + request_header(5)
        + client_description
        + string(None)  # server uri
        + string(URL)
        + string("uascout session")
        + bytestring(None)  # client nonce
        + bytestring(None)  # client certificate
        + f64(120_000.0)  # requested session timeout
        + u32(16777216),  # max response message size
        "CreateSession request body: uascout client description,\n"
        "120 s session timeout, request handle 5",
    )

    anonymous_token = string("anonymous")
    fixtures["activate_session_request.hex"] = (
        node_four_byte(0, 467)
        + request_header(6, auth_token=SESSION_AUTH_TOKEN)
        + string(None)  # client signature algorithm
        + bytestring(None)  # client signature
        + empty_array()  # client software certificates
        + empty_array()  # locale ids
        + extension(321, anonymous_token)  # AnonymousIdentityToken
        + string(None)  # token signature algorithm
        + bytestring(None),  # token signature
        "ActivateSession request body: anonymous token w/ policy id\n"
        '"anonymous", session auth token ns=1;i=7, request handle 6',
    )

    fixtures["close_session_request.hex"] = (
        node_four_byte(0, 473)
        + request_header(7, auth_token=SESSION_AUTH_TOKEN)
        + u8(0x01),  # delete subscriptions: true
        "CloseSession request body, delete subscriptions true",
    )

    browse_description = (
        node_two_byte(85)  # objects folder
        + u32(0)  # browse direction: forward
        + node_two_byte(33)  # hierarchical references
        + u8(0x01)  # include subtypes
        + u32(0)  # node class mask: all
        + u32(63)  # result mask: all
    )
    fixtures["browse_request.hex"] = (
        node_four_byte(0, 527)
        + request_header(8, auth_token=SESSION_AUTH_TOKEN)
        + node_two_byte(0)  # view id: null
        + i64(0)  # view timestamp
        + u32(0)  # view version
        + u32(1000)  # requested max references
        + i32(1)
        + browse_description,
        "Browse request body: objects folder, forward hierarchical\n"
        "references, up to 1000 results",
    )

    fixtures["browse_next_request.hex"] = (
        node_four_byte(0, 533)
        + request_header(9, auth_token=SESSION_AUTH_TOKEN)
        + u8(0x00)  # release: false
        + i32(1)
        + bytestring(bytes.fromhex("deadbeef01020304")),
        "BrowseNext request body continuing one browse",
    )

    read_value_id = (
        node_four_byte(0, 2255)  # namespace array node
        + u32(13)  # value attribute
        + string(None)  # index range
        + u16(0)
        + string(None)  # data encoding: null qualified name
    )
    fixtures["read_request.hex"] = (
        node_four_byte(0, 631)
        + request_header(10, auth_token=SESSION_AUTH_TOKEN)
        + f64(0.0)  # max age
        + u32(3)  # timestamps to return: neither
        + i32(1)
        + read_value_id,
        "Read request body: value of the namespace array node (ns=0;i=2255)",
    )

    write_value = (
        node_string(2, "Setpoint")
        + u32(13)  # value attribute
        + string(None)  # index range
        + u8(0x01)  # data value mask: value only
        + u8(11)  # variant type: double
        + f64(42.0)
    )
    fixtures["write_request.hex"] = (
        node_four_byte(0, 673)
        + request_header(11, auth_token=SESSION_AUTH_TOKEN)
        + i32(1)
        + write_value,
        'Write request body: double 42.0 into ns=2;s="Setpoint"',
    )

    token_policy = (
        string("anonymous")
        + u32(0)  # token type: anonymous
        + string(None)  # issued token type
        + string(None)  # issuer endpoint url
        + string(None)  # security policy uri: inherit
    )
    endpoint_description = (
        string(URL)
        + string("urn:test:server")
        + string("urn:test:product")
        + localized_text(None, "Test")
        + u32(0)  # application type: server
        + string(None)
        + string(None)
        + i32(1)
        + string(URL)  # discovery urls [URL]
        + bytestring(None)  # server certificate
        + u32(1)  # security mode none
        + string(POLICY_NONE)
        + i32(1)
        + token_policy
        + string(TRANSPORT_PROFILE)
        + u8(0)  # security level
    )
    fixtures["get_endpoints_response.hex"] = (
        node_four_byte(0, 431)
        + response_header(3)
        + i32(1)
        + endpoint_description,
        "GetEndpoints response body: one plaintext endpoint with an\n"
        "anonymous token policy (decode differential)",
    )

    fixtures["read_response.hex"] = (
        node_four_byte(0, 634)
        + response_header(10)
        + i32(2)
        + u8(0x03)  # value + status
        + u8(7)  # variant uint32
        + u32(42)
        + u32(0)  # status good
        + u8(0x02)  # status only
        + u32(0x80340000)  # Bad_NodeIdUnknown
        + null_array(),  # diagnostics
        "Read response body: uint32 42 with explicit Good, then a\n"
        "per-node Bad_NodeIdUnknown (decode differential)",
    )

    fixtures["service_fault.hex"] = (
        node_four_byte(0, 397) + response_header(6, result=0x801F0000),
        "ServiceFault body carrying Bad_UserAccessDenied (decode differential)",
    )

    return fixtures


def format_fixture(name, raw, comment):
    lines = [f"# {line}" for line in comment.splitlines()]
    lines.append(f"# {len(raw)} octets")
    for offset in range(0, len(raw), 16):
        lines.append(raw[offset : offset + 16].hex())
    return "\n".join(lines) + "\n"


def parse_fixture(text):
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(bytes.fromhex(line))
    return b"".join(out)


def verify_with_asyncua(fixtures):
    """Cross-check request struct encodings against the asyncua stack."""
    try:
        from asyncua import ua
        from asyncua.ua.ua_binary import struct_to_binary, nodeid_to_binary
    except ImportError:
        print("asyncua not importable; skipping cross-check")
        return True
    import datetime

    fixed_dt = datetime.datetime(2020, 1, 1, tzinfo=datetime.timezone.utc)

    def header(handle, auth=None):
        h = ua.RequestHeader()
        h.AuthenticationToken = auth if auth is not None else ua.NodeId(0, 0)
        h.Timestamp = fixed_dt
        h.RequestHandle = handle
        h.TimeoutHint = 10_000
        return h

    request = ua.GetEndpointsRequest()
    request.Parameters.EndpointUrl = URL
    request.RequestHeader = header(3)
    blob = nodeid_to_binary(ua.FourByteNodeId(428)) + struct_to_binary(request)
    expected = fixtures["get_endpoints_request.hex"][0]
    if blob != expected:
        print("asyncua cross-check FAILED for get_endpoints_request")
        return False
    print("asyncua cross-check passed for get_endpoints_request")
    return True


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true", help="verify, do not rewrite")
    parser.add_argument("--verify-asyncua", action="store_true")
    args = parser.parse_args(argv)

    fixtures = build_fixtures()
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name, (raw, comment) in sorted(fixtures.items()):
        path = GOLDEN_DIR / name
        text = format_fixture(name, raw, comment)
        if args.check:
            if not path.exists() or parse_fixture(path.read_text()) != raw:
                print(f"MISMATCH {name}")
                failures += 1
            else:
                print(f"ok {name}")
        else:
            path.write_text(text)
            print(f"wrote {name} ({len(raw)} octets)")

    if args.verify_asyncua and not verify_with_asyncua(fixtures):
        failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

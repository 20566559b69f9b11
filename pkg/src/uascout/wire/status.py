"""Status codes used by the supported service subset.

Values are the 32-bit codes from the official registry; only the codes the
toolkit emits, matches on, or expects from servers are listed. Unknown codes
still travel through untouched - this table only adds names.
"""

GOOD = 0x00000000

BAD_UNEXPECTED_ERROR = 0x80010000
BAD_INTERNAL_ERROR = 0x80020000
BAD_COMMUNICATION_ERROR = 0x80050000
BAD_ENCODING_ERROR = 0x80060000
BAD_DECODING_ERROR = 0x80070000
BAD_ENCODING_LIMITS_EXCEEDED = 0x80080000
BAD_TIMEOUT = 0x800A0000
BAD_SERVICE_UNSUPPORTED = 0x800B0000
BAD_TOO_MANY_OPERATIONS = 0x80100000
BAD_SECURITY_CHECKS_FAILED = 0x80130000
BAD_USER_ACCESS_DENIED = 0x801F0000
BAD_IDENTITY_TOKEN_INVALID = 0x80200000
BAD_IDENTITY_TOKEN_REJECTED = 0x80210000
BAD_SECURE_CHANNEL_ID_INVALID = 0x80220000
BAD_NONCE_INVALID = 0x80240000
BAD_SESSION_ID_INVALID = 0x80250000
BAD_SESSION_CLOSED = 0x80260000
BAD_SESSION_NOT_ACTIVATED = 0x80270000
BAD_REQUEST_HEADER_INVALID = 0x802A0000
BAD_NODE_ID_INVALID = 0x80330000
BAD_NODE_ID_UNKNOWN = 0x80340000
BAD_ATTRIBUTE_ID_INVALID = 0x80350000
BAD_INDEX_RANGE_INVALID = 0x80360000
BAD_NOT_READABLE = 0x803A0000
BAD_NOT_WRITABLE = 0x803B0000
BAD_NOT_SUPPORTED = 0x803D0000
BAD_NOT_FOUND = 0x803E0000
BAD_CONTINUATION_POINT_INVALID = 0x804A0000
BAD_NO_CONTINUATION_POINTS = 0x804B0000
BAD_REQUEST_TYPE_INVALID = 0x80530000
BAD_SECURITY_MODE_REJECTED = 0x80540000
BAD_SECURITY_POLICY_REJECTED = 0x80550000
BAD_TOO_MANY_SESSIONS = 0x80560000
BAD_TYPE_MISMATCH = 0x80740000
BAD_TCP_SERVER_TOO_BUSY = 0x807D0000
BAD_TCP_MESSAGE_TYPE_INVALID = 0x807E0000
BAD_TCP_SECURE_CHANNEL_UNKNOWN = 0x807F0000
BAD_TCP_MESSAGE_TOO_LARGE = 0x80800000
BAD_TCP_NOT_ENOUGH_RESOURCES = 0x80810000
BAD_TCP_INTERNAL_ERROR = 0x80820000
BAD_TCP_ENDPOINT_URL_INVALID = 0x80830000
BAD_REQUEST_TOO_LARGE = 0x80B80000
BAD_RESPONSE_TOO_LARGE = 0x80B90000
BAD_PROTOCOL_VERSION_UNSUPPORTED = 0x80BE0000

_NAMES = {
    value: name
    for name, value in sorted(globals().items())
    if name.isupper() and isinstance(value, int)
}


def is_good(code: int) -> bool:
    """Severity nibble: 00=good, 01=uncertain, 10=bad."""
    return (code >> 30) == 0


def is_bad(code: int) -> bool:
    return (code >> 30) == 0b10


def name_of(code: int) -> str:
    """Symbolic name, or the hex form for codes outside the table."""
    return _NAMES.get(code, f"0x{code:08X}")

"""Scenario files: declarative mock-server (mis)configurations.

YAML, one document per scenario; the grammar is documented in
scenarios/README.md at the repository root. Everything an assessment can
observe - endpoints, accepted identities, session cap, node permissions -
comes from here, so test expectations trace back to one committed file.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import yaml

from uascout import policies
from uascout.wire.bodies import ACCESS_READ_BIT, ACCESS_WRITE_BIT, UserTokenType
from uascout.wire.values import NodeRef, ValueKind, WireValue


class ScenarioError(Exception):
    """Scenario file is structurally or semantically invalid."""


_KIND_NAMES = {
    "boolean": ValueKind.BOOLEAN,
    "byte": ValueKind.BYTE,
    "int16": ValueKind.INT16,
    "uint16": ValueKind.UINT16,
    "int32": ValueKind.INT32,
    "uint32": ValueKind.UINT32,
    "int64": ValueKind.INT64,
    "uint64": ValueKind.UINT64,
    "double": ValueKind.FLOAT64,
    "string": ValueKind.UTF_STRING,
    "bytes": ValueKind.BYTE_STRING,
    "guid": ValueKind.GUID,
}

_TOKEN_TYPES = {
    "Anonymous": UserTokenType.ANONYMOUS,
    "UserName": UserTokenType.USER_NAME,
    "Certificate": UserTokenType.CERTIFICATE,
    "IssuedToken": UserTokenType.ISSUED_TOKEN,
}

_MODES = {"None": 1, "Sign": 2, "SignAndEncrypt": 3}


def _access_bits(raw) -> int:
    if isinstance(raw, int):
        return raw
    if isinstance(raw, list):
        bits = 0
        for flag in raw:
            if flag == "read":
                bits |= ACCESS_READ_BIT
            elif flag == "write":
                bits |= ACCESS_WRITE_BIT
            else:
                raise ScenarioError(f"unknown access flag {flag!r}")
        return bits
    raise ScenarioError(f"access level must be int or list, got {type(raw).__name__}")


def _to_wire_value(kind: ValueKind, raw) -> WireValue:
    if isinstance(raw, list):
        return WireValue.array(kind, tuple(_scalar(kind, item).value for item in raw))
    return _scalar(kind, raw)


def _scalar(kind: ValueKind, raw) -> WireValue:
    try:
        if kind == ValueKind.BYTE_STRING:
            return WireValue.bytestring(bytes.fromhex(raw) if isinstance(raw, str) else raw)
        if kind == ValueKind.GUID:
            return WireValue(ValueKind.GUID, uuid.UUID(raw) if isinstance(raw, str) else raw)
        if kind == ValueKind.FLOAT64:
            return WireValue.double(float(raw))
        if kind == ValueKind.BOOLEAN:
            return WireValue.boolean(bool(raw))
        return WireValue(kind, raw)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"bad {kind.name} value {raw!r}: {exc}") from None


@dataclass
class ScenarioTokenPolicy:
    policy_id: str
    token_type: UserTokenType
    security_policy_uri: str = ""  # empty inherits the endpoint policy


@dataclass
class ScenarioEndpoint:
    security_policy_uri: str
    mode: int
    security_level: int
    token_policies: List[ScenarioTokenPolicy] = field(default_factory=list)


@dataclass
class ScenarioCredential:
    username: str
    password: str


@dataclass
class ScenarioNode:
    ref: NodeRef
    display_name: str
    kind: ValueKind
    value: WireValue
    access_level: int = ACCESS_READ_BIT
    user_access_level: int = ACCESS_READ_BIT
    anonymous_visible: bool = True


@dataclass
class ScenarioKnownServer:
    application_uri: str
    product_uri: str = ""
    discovery_urls: List[str] = field(default_factory=list)


@dataclass
class ScenarioBuildInfo:
    product_name: str = "MockServer"
    software_version: str = "1.0.0"
    build_number: str = "1"
    build_date: str = "2020-01-01"


@dataclass
class ScenarioConfig:
    name: str = "unnamed"
    listen_port: int = 0  # 0 picks an ephemeral port
    max_sessions: int = 100
    accept_anonymous: bool = False
    accept_any_certificate: bool = False
    misdeclare_anonymous: bool = False
    credentials: List[ScenarioCredential] = field(default_factory=list)
    endpoints: List[ScenarioEndpoint] = field(default_factory=list)
    nodes: List[ScenarioNode] = field(default_factory=list)
    application_uri: str = "urn:mock:server"
    product_uri: str = "urn:mock:server"
    application_name: str = "Mock Server"
    build_info: ScenarioBuildInfo = field(default_factory=ScenarioBuildInfo)
    known_servers: List[ScenarioKnownServer] = field(default_factory=list)
    chunk_size_override: Optional[int] = None
    token_lifetime_ms: int = 300_000
    nonce_length: int = 32
    reject_hello_url: bool = False
    disable_find_servers: bool = False
    lockout_after: int = 0  # close the channel after N failed logins; 0 = off

    def validate(self) -> None:
        if not self.endpoints:
            raise ScenarioError("scenario needs at least one endpoint")
        if self.max_sessions < 1:
            raise ScenarioError("max_sessions must be >= 1")
        refs = [node.ref for node in self.nodes]
        if len(refs) != len(set(refs)):
            raise ScenarioError("node refs must be unique")
        if self.chunk_size_override is not None and self.chunk_size_override < 64:
            raise ScenarioError("chunk_size_override must be >= 64")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        try:
            return cls._build(raw)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from None

    @classmethod
    def _build(cls, raw: dict) -> "ScenarioConfig":
        endpoints = []
        for ep in raw.get("endpoints", []):
            token_policies = []
            for tp in ep.get("token_policies", []):
                token_type = _TOKEN_TYPES.get(tp["type"])
                if token_type is None:
                    raise ScenarioError(f"unknown token type {tp['type']!r}")
                token_policies.append(
                    ScenarioTokenPolicy(
                        policy_id=str(tp["id"]),
                        token_type=token_type,
                        security_policy_uri=policies.canonical_uri(tp["security_policy"])
                        if tp.get("security_policy")
                        else "",
                    )
                )
            mode = _MODES.get(ep.get("mode", "None"))
            if mode is None:
                raise ScenarioError(f"unknown security mode {ep.get('mode')!r}")
            endpoints.append(
                ScenarioEndpoint(
                    security_policy_uri=policies.canonical_uri(ep["security_policy"]),
                    mode=mode,
                    security_level=int(ep.get("security_level", 0)),
                    token_policies=token_policies,
                )
            )

        nodes = []
        for spec in raw.get("nodes", []):
            kind = _KIND_NAMES.get(spec.get("kind", "double"))
            if kind is None:
                raise ScenarioError(f"unknown value kind {spec.get('kind')!r}")
            access = _access_bits(spec.get("access_level", ["read"]))
            user_access = _access_bits(spec.get("user_access_level", spec.get("access_level", ["read"])))
            nodes.append(
                ScenarioNode(
                    ref=NodeRef.parse(str(spec["id"])),
                    display_name=str(spec.get("display_name", spec["id"])),
                    kind=kind,
                    value=_to_wire_value(kind, spec.get("value")),
                    access_level=access,
                    user_access_level=user_access,
                    anonymous_visible=bool(spec.get("anonymous_visible", True)),
                )
            )

        info = raw.get("server_info", {})
        build = info.get("build_info", {})
        config = cls(
            name=str(raw.get("name", "unnamed")),
            listen_port=int(raw.get("listen_port", 0)),
            max_sessions=int(raw.get("max_sessions", 100)),
            accept_anonymous=bool(raw.get("accept_anonymous", False)),
            accept_any_certificate=bool(raw.get("accept_any_certificate", False)),
            misdeclare_anonymous=bool(raw.get("misdeclare_anonymous", False)),
            credentials=[
                ScenarioCredential(str(c["username"]), str(c.get("password", "")))
                for c in raw.get("credentials", [])
            ],
            endpoints=endpoints,
            nodes=nodes,
            application_uri=str(info.get("application_uri", "urn:mock:server")),
            product_uri=str(info.get("product_uri", "urn:mock:server")),
            application_name=str(info.get("application_name", "Mock Server")),
            build_info=ScenarioBuildInfo(
                product_name=str(build.get("product_name", "MockServer")),
                software_version=str(build.get("software_version", "1.0.0")),
                build_number=str(build.get("build_number", "1")),
                build_date=str(build.get("build_date", "2020-01-01")),
            ),
            known_servers=[
                ScenarioKnownServer(
                    application_uri=str(s["application_uri"]),
                    product_uri=str(s.get("product_uri", "")),
                    discovery_urls=[str(u) for u in s.get("discovery_urls", [])],
                )
                for s in raw.get("known_servers", [])
            ],
            chunk_size_override=raw.get("chunk_size_override"),
            token_lifetime_ms=int(raw.get("token_lifetime_ms", 300_000)),
            nonce_length=int(raw.get("nonce_length", 32)),
            reject_hello_url=bool(raw.get("reject_hello_url", False)),
            disable_find_servers=bool(raw.get("disable_find_servers", False)),
            lockout_after=int(raw.get("lockout_after", 0)),
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScenarioConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"cannot parse {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ScenarioError(f"{path} does not contain a scenario mapping")
        return cls.from_dict(raw)

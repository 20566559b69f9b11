"""Assessment logic: endpoint classification, authentication testing,
namespace permission audit, and the session-exhaustion check.

Every result is a Finding with a stable id, so re-running a scan against an
unchanged target yields the identical finding set. Severity and category come
from the committed rubric table (data/severity_rubric.json), never from call
sites; an emission kind missing from the table is a programming error.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from uascout import identity, policies, services, transport
from uascout.identity import Credential, CredentialSource
from uascout.services import EndpointDescriptor, SessionHandle, TokenType
from uascout.wire import bodies, status
from uascout.wire.errors import CodecError, ServiceFaultError
from uascout.wire.values import NodeRef, WireValue


class Severity(Enum):
    CRITICAL = "Critical"
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    INFO = "Info"

    @property
    def rank(self) -> int:
        return {"Critical": 4, "High": 3, "Medium": 2, "Low": 1, "Info": 0}[self.value]


class Category(Enum):
    TRANSPORT = "Transport"
    ENDPOINT_CONFIG = "EndpointConfig"
    AUTHENTICATION = "Authentication"
    ACCESS_CONTROL = "AccessControl"
    AVAILABILITY = "Availability"
    INFO = "Info"


class PolicyClass(Enum):
    INSECURE = "Insecure"
    DEPRECATED = "Deprecated"
    ACCEPTED = "Accepted"
    UNKNOWN = "Unknown"


# Fixed classification: one policy provides no security, two are deprecated,
# the modern AES/SHA-256 suites are accepted, anything else stays Unknown.
POLICY_CLASSES: Dict[str, PolicyClass] = {
    policies.POLICY_NONE: PolicyClass.INSECURE,
    policies.POLICY_BASIC128RSA15: PolicyClass.DEPRECATED,
    policies.POLICY_BASIC256: PolicyClass.DEPRECATED,
    policies.POLICY_BASIC256SHA256: PolicyClass.ACCEPTED,
    policies.POLICY_AES128_SHA256_RSAOAEP: PolicyClass.ACCEPTED,
    policies.POLICY_AES256_SHA256_RSAPSS: PolicyClass.ACCEPTED,
}

_CLASS_STRENGTH = {
    PolicyClass.INSECURE: 0,
    PolicyClass.DEPRECATED: 1,
    PolicyClass.ACCEPTED: 2,
}

MIN_NONCE_LENGTH = 32


def classify_policy(uri: str) -> PolicyClass:
    """Deterministic classification; unknown URIs never pass as Accepted."""
    return POLICY_CLASSES.get(uri, PolicyClass.UNKNOWN)


# -- Severity rubric ----------------------------------------------------------


def _load_rubric() -> dict:
    raw = resources.files("uascout").joinpath("data/severity_rubric.json").read_text("utf-8")
    table = json.loads(raw)
    return table["rules"]


_RUBRIC = _load_rubric()


def rubric() -> dict:
    return dict(_RUBRIC)


@dataclass(frozen=True)
class Finding:
    """One assessment result with a deterministic identity."""

    id: str
    kind: str
    category: Category
    severity: Severity
    host: str
    port: int
    endpoint_url: str
    evidence: Tuple[Tuple[str, str], ...]
    remediation: str

    def evidence_dict(self) -> Dict[str, str]:
        return dict(self.evidence)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "category": self.category.value,
            "severity": self.severity.value,
            "target": {"host": self.host, "port": self.port, "endpoint_url": self.endpoint_url},
            "evidence": self.evidence_dict(),
            "remediation": self.remediation,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Finding":
        target = raw["target"]
        return cls(
            id=raw["id"],
            kind=raw["kind"],
            category=Category(raw["category"]),
            severity=Severity(raw["severity"]),
            host=target["host"],
            port=target["port"],
            endpoint_url=target.get("endpoint_url", ""),
            evidence=tuple(sorted(raw.get("evidence", {}).items())),
            remediation=raw.get("remediation", ""),
        )


def make_finding(kind: str, host: str, port: int, endpoint_url: str = "", **evidence) -> Finding:
    """Build a finding; id hashes (kind, category, target, evidence items).

    Evidence values must be deterministic for a given target configuration -
    no session ids, no timestamps - so that rescans reproduce the same ids.
    """
    rule = _RUBRIC[kind]
    items = tuple(sorted((k, str(v)) for k, v in evidence.items()))
    digest = hashlib.sha256()
    digest.update(kind.encode())
    digest.update(rule["category"].encode())
    digest.update(f"{host}:{port}:{endpoint_url}".encode())
    for key, value in items:
        digest.update(f"|{key}={value}".encode())
    return Finding(
        id=digest.hexdigest()[:12],
        kind=kind,
        category=Category(rule["category"]),
        severity=Severity(rule["severity"]),
        host=host,
        port=port,
        endpoint_url=endpoint_url,
        evidence=items,
        remediation=rule["remediation"],
    )


def dedupe(findings: Iterable[Finding]) -> List[Finding]:
    seen = set()
    out = []
    for finding in findings:
        if finding.id not in seen:
            seen.add(finding.id)
            out.append(finding)
    return out


def sort_findings(findings: Iterable[Finding]) -> List[Finding]:
    return sorted(findings, key=lambda f: (-f.severity.rank, f.kind, f.id))


# -- Stage B/C: endpoint configuration ------------------------------------------


def assess_endpoints(host: str, port: int, endpoints: Sequence[EndpointDescriptor]) -> List[Finding]:
    """Classify what the server offers; emits only rubric-backed findings."""
    findings: List[Finding] = []
    if not endpoints:
        return findings

    for uri in _distinct(e.security_policy_uri for e in endpoints):
        cls = classify_policy(uri)
        if cls == PolicyClass.INSECURE:
            findings.append(make_finding("endpoint.insecure_policy", host, port, policy_uri=uri))
        elif cls == PolicyClass.DEPRECATED:
            findings.append(make_finding("endpoint.deprecated_policy", host, port, policy_uri=uri))

    for uri in _distinct(
        e.security_policy_uri
        for e in endpoints
        if e.message_security_mode == services.SecurityMode.NONE
    ):
        findings.append(make_finding("endpoint.mode_none", host, port, policy_uri=uri))

    modes = {e.message_security_mode for e in endpoints}
    if services.SecurityMode.SIGN in modes and services.SecurityMode.SIGN_AND_ENCRYPT not in modes:
        sign_uris = sorted(
            _distinct(
                e.security_policy_uri
                for e in endpoints
                if e.message_security_mode == services.SecurityMode.SIGN
            )
        )
        findings.append(
            make_finding("endpoint.sign_only", host, port, policy_uris=",".join(sign_uris))
        )

    anon_on_none = [
        e for e in endpoints
        if e.message_security_mode == services.SecurityMode.NONE
        and e.policies_of_type(TokenType.ANONYMOUS)
    ]
    anon_anywhere = [e for e in endpoints if e.policies_of_type(TokenType.ANONYMOUS)]
    if anon_on_none:
        for uri in _distinct(e.security_policy_uri for e in anon_on_none):
            findings.append(
                make_finding("endpoint.anonymous_on_none", host, port, policy_uri=uri)
            )
    elif anon_anywhere:
        uris = sorted(_distinct(e.security_policy_uri for e in anon_anywhere))
        findings.append(
            make_finding("endpoint.anonymous_offered", host, port, policy_uris=",".join(uris))
        )

    findings.extend(_level_inversions(host, port, endpoints))
    return dedupe(findings)


def _distinct(items) -> List[str]:
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def _level_inversions(host, port, endpoints) -> List[Finding]:
    ranked = [
        (endpoint, _CLASS_STRENGTH[classify_policy(endpoint.security_policy_uri)])
        for endpoint in endpoints
        if classify_policy(endpoint.security_policy_uri) != PolicyClass.UNKNOWN
    ]
    findings = []
    for weaker, weaker_rank in ranked:
        for stronger, stronger_rank in ranked:
            if weaker_rank < stronger_rank and weaker.security_level > stronger.security_level:
                findings.append(
                    make_finding(
                        "endpoint.security_level_inversion",
                        host,
                        port,
                        weaker_policy=weaker.security_policy_uri,
                        weaker_level=weaker.security_level,
                        stronger_policy=stronger.security_policy_uri,
                        stronger_level=stronger.security_level,
                    )
                )
    return findings


def plain_endpoints(endpoints: Sequence[EndpointDescriptor]) -> List[EndpointDescriptor]:
    """Endpoints reachable over a None channel (the tool's operating envelope)."""
    return [
        e
        for e in endpoints
        if policies.is_none_policy(e.security_policy_uri)
        and e.message_security_mode == services.SecurityMode.NONE
    ]


def no_plain_endpoint_finding(host: str, port: int, endpoints) -> Finding:
    """Positive observation: every endpoint requires channel security."""
    uris = sorted(_distinct(e.security_policy_uri for e in endpoints))
    return make_finding(
        "transport.no_plain_endpoint", host, port, offered_policies=",".join(uris)
    )


def short_nonce_finding(host: str, port: int, endpoint_url: str, nonce_length: int) -> Finding:
    return make_finding(
        "endpoint.short_server_nonce",
        host,
        port,
        endpoint_url,
        nonce_length=nonce_length,
        minimum=MIN_NONCE_LENGTH,
    )


# -- Stage B: authentication --------------------------------------------------------


@dataclass
class AuthAttemptResult:
    finding: Optional[Finding] = None
    warning: Optional[str] = None
    skipped_reason: Optional[str] = None
    nonce_length: Optional[int] = None


def _open_session(host: str, port: int, timeouts: Optional[transport.Timeouts]):
    channel = transport.connect(host, port, timeouts)
    try:
        handle = services.create_session(channel)
    except Exception:
        channel.close()
        raise
    return channel, handle


def test_anonymous(
    host: str,
    port: int,
    endpoint: EndpointDescriptor,
    timeouts: Optional[transport.Timeouts] = None,
) -> AuthAttemptResult:
    """Try an anonymous session; servers that accept one get a High finding.

    An endpoint that never advertised anonymous still gets probed: a server
    accepting the undeclared token is strictly worse and the evidence says so.
    """
    result = AuthAttemptResult()
    try:
        channel, handle = _open_session(host, port, timeouts)
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        result.warning = f"anonymous probe could not reach {host}:{port}: {exc}"
        return result
    try:
        result.nonce_length = handle.nonce_length
        undeclared = False
        try:
            token = identity.build_anonymous(endpoint)
        except identity.NoSuchPolicy:
            token = identity.AnonymousToken(policy_id="anonymous")
            undeclared = True
        try:
            services.activate_session(handle, token)
        except services.AuthRejected:
            return result
        evidence = {"token_policy_id": token.policy_id, "session_established": "true"}
        if undeclared:
            evidence["undeclared"] = "true"
        result.finding = make_finding(
            "auth.anonymous_session", host, port, endpoint.endpoint_url, **evidence
        )
        return result
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        result.warning = f"anonymous probe against {host}:{port} failed mid-flight: {exc}"
        return result
    finally:
        try:
            services.close_session(handle)
        except Exception:
            channel.close()


@dataclass
class CredentialRunResult:
    hits: List[Tuple[Credential, Finding]] = field(default_factory=list)
    attempts: int = 0
    aborted_lockout: bool = False
    warning: Optional[str] = None
    skipped_reason: Optional[str] = None
    nonce_length: Optional[int] = None


_LOCKOUT_CHANNEL_FAILURES = 3


def test_credentials(
    host: str,
    port: int,
    endpoint: EndpointDescriptor,
    credentials: Sequence[Credential],
    stop_on_first: bool = False,
    timeouts: Optional[transport.Timeouts] = None,
) -> CredentialRunResult:
    """One activation attempt per credential over a reused channel.

    Each attempt gets a fresh session (created, activated, closed) so the
    server's session gauge returns to zero. Lockout heuristics: three
    consecutive channel-level failures, or a streak of security-checks-failed
    faults, aborts the run with an explicit warning.
    """
    result = CredentialRunResult()
    if not credentials:
        return result
    if not endpoint.policies_of_type(TokenType.USER_NAME):
        result.skipped_reason = "endpoint advertises no username token policy"
        return result

    channel: Optional[transport.Channel] = None
    channel_failures = 0
    security_fault_streak = 0
    index = 0
    try:
        while index < len(credentials):
            credential = credentials[index]
            try:
                if channel is None or channel.phase is not transport.Phase.CHANNEL_OPEN:
                    channel = transport.connect(host, port, timeouts)
                handle = services.create_session(channel)
                result.nonce_length = handle.nonce_length
            except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
                channel_failures += 1
                if channel is not None:
                    channel.close()
                    channel = None
                if channel_failures >= _LOCKOUT_CHANNEL_FAILURES:
                    result.aborted_lockout = True
                    result.warning = f"aborted: possible lockout ({exc})"
                    return result
                continue  # retry the same credential on a fresh channel

            channel_failures = 0
            try:
                token = identity.build_username(
                    endpoint, credential, handle.server_certificate, handle.server_nonce
                )
            except identity.PolicyUnsupportedForEncryption as exc:
                result.skipped_reason = str(exc)
                services.close_session(handle, close_channel=False)
                return result
            except identity.IdentityError as exc:
                result.warning = f"cannot build username token: {exc}"
                services.close_session(handle, close_channel=False)
                return result

            try:
                services.activate_session(handle, token)
            except services.AuthRejected as exc:
                result.attempts += 1
                if exc.code == status.BAD_SECURITY_CHECKS_FAILED:
                    security_fault_streak += 1
                    if security_fault_streak >= _LOCKOUT_CHANNEL_FAILURES:
                        result.aborted_lockout = True
                        result.warning = f"aborted: possible lockout ({exc.status_name})"
                        services.close_session(handle, close_channel=False)
                        return result
                else:
                    security_fault_streak = 0
                services.close_session(handle, close_channel=False)
                index += 1
                continue
            except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
                # The attempt itself died at channel level: count it as a
                # failure signal but not as a tested credential.
                channel_failures += 1
                if channel is not None:
                    channel.close()
                    channel = None
                if channel_failures >= _LOCKOUT_CHANNEL_FAILURES:
                    result.aborted_lockout = True
                    result.warning = f"aborted: possible lockout ({exc})"
                    return result
                continue

            result.attempts += 1
            security_fault_streak = 0
            kind = (
                "auth.default_credentials"
                if credential.source == CredentialSource.DEFAULT_LIST
                else "auth.weak_credentials"
            )
            finding = make_finding(
                kind,
                host,
                port,
                endpoint.endpoint_url,
                username=credential.username,
                password=credential.password,
                source=credential.source.value,
            )
            result.hits.append((credential, finding))
            services.close_session(handle, close_channel=False)
            index += 1
            if stop_on_first:
                break
        return result
    finally:
        if channel is not None:
            channel.close()


def test_self_signed(
    host: str,
    port: int,
    endpoint: EndpointDescriptor,
    timeouts: Optional[transport.Timeouts] = None,
    key_bits: int = 2048,
) -> AuthAttemptResult:
    """Present a freshly generated self-signed certificate as identity."""
    result = AuthAttemptResult()
    if not endpoint.policies_of_type(TokenType.CERTIFICATE):
        result.skipped_reason = "endpoint advertises no certificate token policy"
        return result
    certificate_der, private_key = identity.generate_self_signed(key_bits=key_bits)
    try:
        channel, handle = _open_session(host, port, timeouts)
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        result.warning = f"certificate probe could not reach {host}:{port}: {exc}"
        return result
    try:
        result.nonce_length = handle.nonce_length
        try:
            token = identity.build_x509(
                endpoint, certificate_der, private_key,
                handle.server_certificate, handle.server_nonce,
            )
        except identity.PolicyUnsupportedForSigning as exc:
            result.skipped_reason = str(exc)
            return result
        try:
            services.activate_session(handle, token)
        except services.AuthRejected:
            return result
        result.finding = make_finding(
            "auth.self_signed_accepted",
            host,
            port,
            endpoint.endpoint_url,
            token_policy_id=token.policy_id,
            scope="identity-token",
        )
        return result
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        result.warning = f"certificate probe against {host}:{port} failed mid-flight: {exc}"
        return result
    finally:
        try:
            services.close_session(handle)
        except Exception:
            channel.close()


# -- Stage C: namespace audit ----------------------------------------------------


class WriteProbe(Enum):
    OFF = "off"
    WRITE_BACK = "writeback"


@dataclass(frozen=True)
class NodeAccessRecord:
    node: str
    display_name: str
    declared_readable: bool
    declared_writable: bool
    access_level: int
    user_access_level: int
    read_ok: Optional[bool]  # None = untested
    write_ok: Optional[bool]  # None = untested (write probing off or not writable)
    identity_used: str

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "display_name": self.display_name,
            "declared": {"readable": self.declared_readable, "writable": self.declared_writable},
            "access_level": self.access_level,
            "user_access_level": self.user_access_level,
            "observed": {"read_ok": self.read_ok, "write_ok": self.write_ok},
            "identity_used": self.identity_used,
        }


def audit_namespace(
    handle: SessionHandle,
    host: str,
    port: int,
    limits: services.WalkLimits = services.WalkLimits(),
    write_probe: WriteProbe = WriteProbe.OFF,
    identity_used: str = "anonymous",
) -> Tuple[List[NodeAccessRecord], List[Finding]]:
    """Walk the namespace and test what this identity can actually do.

    Write probing, when enabled, writes back the exact value just read, so a
    successful probe leaves the server state untouched. Nodes under the
    standard namespace (index 0) are server metadata and exempt from the
    anonymous-readable finding; write exposure is reported wherever it is.
    """
    anonymous = identity_used == "anonymous"
    records: List[NodeAccessRecord] = []
    findings: List[Finding] = []

    for walked in services.walk(handle, limits=limits):
        entry = walked.entry
        if entry.node_class != bodies.NodeClass.VARIABLE:
            continue
        statuses = services.read_attributes(
            handle,
            [
                (entry.node, bodies.AttributeId.ACCESS_LEVEL),
                (entry.node, bodies.AttributeId.USER_ACCESS_LEVEL),
                (entry.node, bodies.AttributeId.VALUE),
            ],
        )
        (access_code, access_value), (user_code, user_value), (read_code, read_value) = statuses
        access_level = _byte_or_zero(access_code, access_value)
        user_access_level = _byte_or_zero(user_code, user_value)
        declared_readable = bool(
            access_level & bodies.ACCESS_READ_BIT and user_access_level & bodies.ACCESS_READ_BIT
        )
        declared_writable = bool(
            access_level & bodies.ACCESS_WRITE_BIT and user_access_level & bodies.ACCESS_WRITE_BIT
        )
        read_ok = not status.is_bad(read_code)

        write_ok: Optional[bool] = None
        write_status: Optional[int] = None
        if (
            write_probe == WriteProbe.WRITE_BACK
            and declared_writable
            and read_ok
            and read_value is not None
        ):
            write_status = services.write_value(handle, entry.node, read_value)
            write_ok = not status.is_bad(write_status)

        node_text = str(entry.node)
        records.append(
            NodeAccessRecord(
                node=node_text,
                display_name=entry.display_name,
                declared_readable=declared_readable,
                declared_writable=declared_writable,
                access_level=access_level,
                user_access_level=user_access_level,
                read_ok=read_ok,
                write_ok=write_ok,
                identity_used=identity_used,
            )
        )

        in_standard_namespace = entry.node.namespace_index == 0
        if anonymous and read_ok and not in_standard_namespace:
            findings.append(
                make_finding(
                    "access.anonymous_readable",
                    host,
                    port,
                    node=node_text,
                    display_name=entry.display_name,
                )
            )
        if anonymous and declared_writable:
            evidence = {"node": node_text, "display_name": entry.display_name}
            if write_ok is not None:
                evidence["write_back_status"] = status.name_of(write_status)
            findings.append(
                make_finding("access.anonymous_writable", host, port, **evidence)
            )
        if declared_readable and not read_ok:
            findings.append(
                make_finding(
                    "access.declared_mismatch",
                    host,
                    port,
                    node=node_text,
                    expected="readable",
                    observed=status.name_of(read_code),
                )
            )
        if write_ok is False:
            findings.append(
                make_finding(
                    "access.declared_mismatch",
                    host,
                    port,
                    node=node_text,
                    expected="writable",
                    observed=status.name_of(write_status),
                )
            )
    return records, dedupe(findings)


def _byte_or_zero(code: int, value: Optional[WireValue]) -> int:
    if status.is_bad(code) or value is None:
        return 0
    plain = value.python_value()
    return plain if isinstance(plain, int) else 0


# -- Stage D: vulnerability checks --------------------------------------------------


@dataclass
class ExhaustionResult:
    finding: Optional[Finding] = None
    warning: Optional[str] = None
    opened: int = 0


def check_session_exhaustion(
    host: str,
    port: int,
    safety_cap: int = 100,
    timeouts: Optional[transport.Timeouts] = None,
) -> ExhaustionResult:
    """Open sessions until the server refuses or the safety cap is reached.

    Sessions are created without activation (create-before-activate counts
    against the cap on every stack this tool targets) and every one of them
    is closed afterwards, even when the channel died mid-run.
    """
    if safety_cap < 1:
        raise ValueError("safety_cap must be >= 1")
    result = ExhaustionResult()
    handles: List[SessionHandle] = []
    channel: Optional[transport.Channel] = None
    try:
        channel = transport.connect(host, port, timeouts)
        for _ in range(safety_cap):
            try:
                handles.append(services.create_session(channel))
            except ServiceFaultError as exc:
                if exc.code == status.BAD_TOO_MANY_SESSIONS:
                    result.finding = make_finding(
                        "dos.session_exhaustion",
                        host,
                        port,
                        observed_limit=len(handles),
                        safety_cap=safety_cap,
                    )
                else:
                    result.warning = f"session creation failed: {exc}"
                break
            except (transport.TransportFailure, CodecError) as exc:
                result.warning = f"aborted mid-run: {exc}"
                break
        else:
            result.finding = make_finding(
                "dos.limit_not_reached", host, port, safety_cap=safety_cap
            )
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        result.warning = f"exhaustion check could not run: {exc}"
    finally:
        result.opened = len(handles)
        _close_all_sessions(host, port, channel, handles, timeouts)
    return result


def _close_all_sessions(host, port, channel, handles, timeouts) -> None:
    """Cleanup path: close every session, reconnecting if the channel died."""
    if not handles:
        if channel is not None:
            channel.close()
        return
    if channel is None or channel.phase is not transport.Phase.CHANNEL_OPEN:
        try:
            channel = transport.connect(host, port, timeouts)
        except (transport.TransportFailure, ServiceFaultError, CodecError):
            return
    for handle in handles:
        handle.channel = channel
        services.close_session(handle, close_channel=False)
    channel.close()


@dataclass
class CheckContext:
    """Everything a vulnerability check may use."""

    host: str
    port: int
    endpoints: Tuple[EndpointDescriptor, ...] = ()
    safety_cap: int = 100
    timeouts: Optional[transport.Timeouts] = None


CheckFunction = Callable[[CheckContext], List[Finding]]


def _builtin_session_exhaustion(ctx: CheckContext) -> List[Finding]:
    outcome = check_session_exhaustion(ctx.host, ctx.port, ctx.safety_cap, ctx.timeouts)
    if outcome.warning:
        raise RuntimeError(outcome.warning)
    return [outcome.finding] if outcome.finding else []


BUILTIN_CHECKS: Dict[str, CheckFunction] = {
    "session-exhaustion": _builtin_session_exhaustion,
}


def run_checks(
    ctx: CheckContext, registry: Optional[Dict[str, CheckFunction]] = None
) -> Tuple[List[Finding], List[str]]:
    """Run registered checks in isolation; a crashing check becomes a warning."""
    registry = BUILTIN_CHECKS if registry is None else registry
    findings: List[Finding] = []
    warnings: List[str] = []
    for name in sorted(registry):
        try:
            findings.extend(registry[name](ctx))
        except Exception as exc:
            warnings.append(f"check {name!r} failed: {exc}")
    return findings, warnings


def dos_permitted(application_uri: str, allow_list: Sequence[str], override: bool) -> bool:
    """The exhaustion check is disruptive: require an allow-list hit or the
    explicit override flag."""
    return override or (application_uri in allow_list)

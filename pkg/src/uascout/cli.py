"""Command-line frontend: discover, assess, audit, report.

The `full` subcommand chains every stage: sweep the targets, then for each
verified server classify its endpoints, run the authentication battery,
gather configuration, audit permissions, and (only when explicitly allowed)
check session exhaustion. Servers learned through discovery feedback join
the target set until the matrix cap stops the growth.

Exit codes: 0 clean, 1 findings of severity High or above, 2 usage or
runtime error.
"""

from __future__ import annotations

import argparse
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from typing import List, Optional, Sequence, Set, Tuple

from uascout import assessor, discovery, identity, report as report_mod, services, transport
from uascout.assessor import WriteProbe
from uascout.identity import Credential, CredentialSource
from uascout.report import AssessmentReport, SkippedTest, TargetReport
from uascout.services import TokenType
from uascout.wire.errors import CodecError, ServiceFaultError

_STAGES_BY_COMMAND = {
    "discover": frozenset(),
    "endpoints": frozenset({"endpoints"}),
    "auth": frozenset({"auth"}),
    "info": frozenset({"info"}),
    "audit": frozenset({"audit"}),
    "dos": frozenset({"dos"}),
    "full": frozenset({"endpoints", "auth", "info", "audit", "dos"}),
}

_URL_PATTERN = re.compile(r"^opc\.tcp://(?P<host>\[[^\]]+\]|[^/:]+)(?::(?P<port>\d+))?(?:/.*)?$")


def _parse_opc_url(url: str) -> Optional[Tuple[str, int]]:
    m = _URL_PATTERN.match(url.strip())
    if not m:
        return None
    host = m.group("host").strip("[]")
    port = int(m.group("port") or discovery.DEFAULT_PORT)
    return host, port


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uascout",
        description="Network-based security assessment for OPC UA deployments",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    descriptions = {
        "discover": "sweep hosts/ports and verify protocol presence",
        "endpoints": "classify advertised endpoint security",
        "auth": "test anonymous, default/weak credential and self-signed logins",
        "info": "gather server identity, namespaces and known servers",
        "audit": "walk the namespace and audit node permissions",
        "dos": "check session exhaustion (requires explicit permission)",
        "full": "run the whole pipeline in order",
    }
    for command, text in descriptions.items():
        p = sub.add_parser(command, help=text, description=text)
        _add_common_arguments(p)
    return parser


def _add_common_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--targets", action="append", default=[],
                   help="host, host:port or CIDR (repeatable, comma separated ok)")
    p.add_argument("--targets-file", help="file with one host[:port] or CIDR per line")
    p.add_argument("--ports", default=None,
                   help="comma-separated TCP ports (default 4840)")
    p.add_argument("--timeout", type=float, default=None,
                   help="connect/read/write timeout in seconds")
    p.add_argument("--parallelism", type=int, default=discovery.DEFAULT_PARALLELISM,
                   help="concurrent probes/assessments (default 64)")
    p.add_argument("--creds-file",
                   help="username:password list; default: packaged default-credential list")
    p.add_argument("--no-default-creds", action="store_true",
                   help="do not fall back to the packaged default-credential list")
    p.add_argument("--stop-on-first", action="store_true",
                   help="stop the credential run at the first hit")
    p.add_argument("--write-probe", choices=["off", "writeback"], default="off",
                   help="audit write probing; writeback rewrites the value just read")
    p.add_argument("--i-understand-dos", action="store_true",
                   help="allow the disruptive session-exhaustion check on every target")
    p.add_argument("--dos-allow", action="append", default=[],
                   help="ApplicationUri allowed for the exhaustion check (repeatable)")
    p.add_argument("--dos-cap", type=int, default=100,
                   help="session safety cap for the exhaustion check (default 100)")
    p.add_argument("--audit-max-nodes", type=int, default=10_000)
    p.add_argument("--output", choices=["json", "text"], default="text")
    p.add_argument("--report-file", help="write the report here instead of stdout")


class UsageError(Exception):
    pass


def _collect_targets(args) -> List[Tuple[str, int]]:
    entries: List[str] = []
    for chunk in args.targets:
        entries.extend(part.strip() for part in chunk.split(",") if part.strip())
    if args.targets_file:
        entries.extend(discovery.parse_targets_file(args.targets_file))
    if not entries:
        raise UsageError("no targets given (use --targets or --targets-file)")

    default_ports = [int(p) for p in args.ports.split(",")] if args.ports else [discovery.DEFAULT_PORT]
    pairs: List[Tuple[str, int]] = []
    seen: Set[Tuple[str, int]] = set()
    cidr_hosts: List[str] = []
    for entry in entries:
        if "/" in entry and not entry.startswith("opc.tcp://"):
            cidr_hosts.append(entry)
            continue
        if entry.startswith("opc.tcp://"):
            parsed = _parse_opc_url(entry)
            if parsed is None:
                raise UsageError(f"cannot parse target url {entry!r}")
            host, port = parsed
            ports = [port]
        else:
            host, explicit = discovery.split_host_port(entry)
            ports = [explicit] if explicit else default_ports
        for port in ports:
            if (host, port) not in seen:
                seen.add((host, port))
                pairs.append((host, port))
    if cidr_hosts:
        spec = discovery.TargetSpec(hosts=cidr_hosts, ports=default_ports)
        for pair in spec.expand():
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
    if len(pairs) > discovery.DEFAULT_MATRIX_CAP:
        raise UsageError(
            f"{len(pairs)} targets exceed the matrix cap of {discovery.DEFAULT_MATRIX_CAP}"
        )
    return pairs


def _timeouts(args) -> transport.Timeouts:
    if args.timeout is None:
        return transport.Timeouts()
    return transport.Timeouts(connect=args.timeout, read=args.timeout, write=args.timeout)


def _probe_timeouts(args) -> discovery.ProbeTimeouts:
    if args.timeout is None:
        return discovery.ProbeTimeouts()
    return discovery.ProbeTimeouts(connect=args.timeout, read=args.timeout)


def _load_credentials(args) -> List[Credential]:
    if args.creds_file:
        return identity.load_credential_file(args.creds_file, CredentialSource.USER_SUPPLIED)
    if args.no_default_creds:
        return []
    with resources.as_file(
        resources.files("uascout").joinpath("data/default_credentials.txt")
    ) as path:
        return identity.load_credential_file(path, CredentialSource.DEFAULT_LIST)


# -- per-target assessment ------------------------------------------------------


def _assess_target(host: str, port: int, args, stages: frozenset) -> TargetReport:
    target = TargetReport(host=host, port=port)
    timeouts = _timeouts(args)

    try:
        channel = transport.connect(host, port, timeouts)
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        target.warnings.append(f"cannot open a channel: {exc}")
        return target
    try:
        endpoints = services.get_endpoints(channel)
    except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
        target.warnings.append(f"endpoint discovery failed: {exc}")
        channel.close()
        return target
    finally:
        channel.close()

    target.endpoints = [report_mod.endpoint_dict(e) for e in endpoints]

    if "endpoints" in stages:
        target.findings.extend(assessor.assess_endpoints(host, port, endpoints))

    usable = assessor.plain_endpoints(endpoints)
    if not usable:
        if endpoints:
            target.findings.append(
                assessor.no_plain_endpoint_finding(host, port, endpoints)
            )
        for stage in sorted(stages & {"auth", "info", "audit", "dos"}):
            target.skipped_tests.append(
                SkippedTest(stage, "no plaintext endpoint; deeper tests require policy None")
            )
        return target
    endpoint = usable[0]

    working_credential: Optional[Credential] = None
    anonymous_works = False
    nonce_lengths: List[int] = []

    if "auth" in stages:
        anonymous_works, working_credential = _auth_stage(
            host, port, endpoint, args, target, timeouts, nonce_lengths
        )

    session_needed = stages & {"info", "audit"}
    if session_needed:
        handle = _login(host, port, endpoint, args, target, timeouts,
                        working_credential, prefer_anonymous=True)
        if handle is None:
            for stage in sorted(session_needed):
                target.skipped_tests.append(
                    SkippedTest(stage, "no authenticated access available")
                )
        else:
            identity_used = getattr(handle, "_identity_used", "anonymous")
            try:
                if "info" in stages:
                    info = services.gather_server_info(handle, endpoint)
                    target.server_info = report_mod.server_info_dict(info)
                if "audit" in stages:
                    limits = services.WalkLimits(max_nodes=args.audit_max_nodes)
                    records, findings = assessor.audit_namespace(
                        handle,
                        host,
                        port,
                        limits=limits,
                        write_probe=WriteProbe(args.write_probe),
                        identity_used=identity_used,
                    )
                    target.node_access_records = [r.to_dict() for r in records]
                    target.findings.extend(findings)
            except (transport.TransportFailure, ServiceFaultError, CodecError) as exc:
                target.warnings.append(f"session stage failed: {exc}")
            finally:
                services.close_session(handle)

    if "dos" in stages:
        app_uri = endpoint.application_uri
        if assessor.dos_permitted(app_uri, args.dos_allow, args.i_understand_dos):
            ctx = assessor.CheckContext(
                host=host,
                port=port,
                endpoints=tuple(endpoints),
                safety_cap=args.dos_cap,
                timeouts=timeouts,
            )
            findings, warnings = assessor.run_checks(ctx)
            target.findings.extend(findings)
            target.warnings.extend(warnings)
        else:
            target.skipped_tests.append(
                SkippedTest(
                    "dos",
                    "session-exhaustion check requires --i-understand-dos or a --dos-allow match",
                )
            )

    if nonce_lengths and min(nonce_lengths) < assessor.MIN_NONCE_LENGTH:
        target.findings.append(
            assessor.short_nonce_finding(host, port, endpoint.endpoint_url, min(nonce_lengths))
        )

    target.findings = assessor.dedupe(target.findings)
    return target


def _auth_stage(host, port, endpoint, args, target, timeouts, nonce_lengths):
    """Anonymous, credential, and self-signed tests; returns what worked."""
    anonymous_works = False
    working_credential: Optional[Credential] = None

    outcome = assessor.test_anonymous(host, port, endpoint, timeouts)
    if outcome.nonce_length is not None:
        nonce_lengths.append(outcome.nonce_length)
    if outcome.finding:
        target.findings.append(outcome.finding)
        anonymous_works = True
    if outcome.warning:
        target.warnings.append(outcome.warning)

    credentials = _load_credentials(args)
    if not endpoint.policies_of_type(TokenType.USER_NAME):
        target.skipped_tests.append(
            SkippedTest("credentials", "endpoint advertises no username token policy")
        )
    elif not credentials:
        target.skipped_tests.append(SkippedTest("credentials", "no credential list available"))
    else:
        run = assessor.test_credentials(
            host, port, endpoint, credentials, args.stop_on_first, timeouts
        )
        if run.nonce_length is not None:
            nonce_lengths.append(run.nonce_length)
        for credential, finding in run.hits:
            target.findings.append(finding)
            if working_credential is None:
                working_credential = credential
        if run.warning:
            target.warnings.append(run.warning)
        if run.skipped_reason:
            target.skipped_tests.append(SkippedTest("credentials", run.skipped_reason))

    if endpoint.policies_of_type(TokenType.CERTIFICATE):
        outcome = assessor.test_self_signed(host, port, endpoint, timeouts)
        if outcome.nonce_length is not None:
            nonce_lengths.append(outcome.nonce_length)
        if outcome.finding:
            target.findings.append(outcome.finding)
        if outcome.warning:
            target.warnings.append(outcome.warning)
        if outcome.skipped_reason:
            target.skipped_tests.append(SkippedTest("self-signed", outcome.skipped_reason))
    else:
        target.skipped_tests.append(
            SkippedTest("self-signed", "endpoint advertises no certificate token policy")
        )

    token_types = {tp.token_type for tp in endpoint.user_token_policies}
    if token_types == {TokenType.ISSUED_TOKEN}:
        target.skipped_tests.append(
            SkippedTest("auth", "endpoint only accepts issued tokens; no test procedure exists")
        )
    return anonymous_works, working_credential


def _login(host, port, endpoint, args, target, timeouts, known_credential, prefer_anonymous=True):
    """Open an activated session with whatever identity the server accepts."""
    attempts = []
    if prefer_anonymous:
        attempts.append(("anonymous", None))
    if known_credential is not None:
        attempts.append((f"username:{known_credential.username}", known_credential))
    else:
        for credential in _load_credentials(args):
            attempts.append((f"username:{credential.username}", credential))

    for label, credential in attempts:
        channel = None
        handle = None
        try:
            channel = transport.connect(host, port, timeouts)
            handle = services.create_session(channel)
            if credential is None:
                try:
                    token = identity.build_anonymous(endpoint)
                except identity.NoSuchPolicy:
                    token = identity.AnonymousToken(policy_id="anonymous")
            else:
                token = identity.build_username(
                    endpoint, credential, handle.server_certificate, handle.server_nonce
                )
            services.activate_session(handle, token)
            handle._identity_used = label  # noqa: SLF001 - local annotation
            return handle
        except services.AuthRejected:
            services.close_session(handle)
            continue
        except (transport.TransportFailure, ServiceFaultError, CodecError,
                identity.IdentityError) as exc:
            target.warnings.append(f"login as {label} failed: {exc}")
            if handle is not None:
                services.close_session(handle)
            elif channel is not None:
                channel.close()
            continue
    return None


# -- pipeline -----------------------------------------------------------------


def _run(args) -> Tuple[AssessmentReport, int]:
    stages = _STAGES_BY_COMMAND[args.command]
    pairs = _collect_targets(args)
    started = datetime.now(timezone.utc).isoformat()
    report = AssessmentReport(started_at=started)
    report.targets = [f"{host}:{port}" for host, port in pairs]

    probe_spec = discovery.TargetSpec(
        hosts=[], ports=[], parallelism=args.parallelism, timeouts=_probe_timeouts(args)
    )

    # Stage A: verify protocol presence (every command starts here).
    probe_results = _sweep_pairs(pairs, probe_spec)
    report.probe_results = [report_mod.probe_result_dict(r) for r in probe_results]
    servers = [
        (r.host, r.port) for r in probe_results if r.verdict == discovery.Verdict.OPC_UA
    ]

    if stages:
        visited: Set[Tuple[str, int]] = set(pairs)
        queue = list(servers)
        while queue:
            batch, queue = queue, []
            reports = _assess_batch(batch, args, stages)
            report.target_reports.extend(reports)
            if args.command != "full":
                continue
            # Discovery feedback: known servers widen the target set.
            for target in reports:
                for url in _discovered_urls(target):
                    parsed = _parse_opc_url(url)
                    if parsed is None or parsed in visited:
                        continue
                    if len(visited) >= discovery.DEFAULT_MATRIX_CAP:
                        break
                    visited.add(parsed)
                    probe = discovery.probe(parsed[0], parsed[1], _probe_timeouts(args))
                    report.probe_results.append(report_mod.probe_result_dict(probe))
                    if probe.verdict == discovery.Verdict.OPC_UA:
                        queue.append(parsed)

    report.finished_at = datetime.now(timezone.utc).isoformat()
    return report, report_mod.exit_code_for(report)


def _sweep_pairs(pairs, spec: discovery.TargetSpec) -> List[discovery.ProbeResult]:
    if not pairs:
        return []
    workers = max(1, min(spec.parallelism, len(pairs)))
    results: List[discovery.ProbeResult] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(lambda hp: discovery.probe(hp[0], hp[1], spec.timeouts), pairs):
            results.append(result)
    results.sort(key=discovery.ProbeResult.sort_key)
    return results


def _assess_batch(batch, args, stages) -> List[TargetReport]:
    workers = max(1, min(args.parallelism, len(batch)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(
            pool.map(lambda hp: _assess_target(hp[0], hp[1], args, stages), batch)
        )
    reports.sort(key=lambda t: (t.host, t.port))
    return reports


def _discovered_urls(target: TargetReport) -> List[str]:
    urls: List[str] = []
    info = target.server_info or {}
    for record in info.get("known_servers", []):
        urls.extend(record.get("discovery_urls", []))
    return urls


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        report, exit_code = _run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except discovery.TargetMatrixTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rendered = report_mod.render_report(report, args.output)
    if args.report_file:
        with open(args.report_file, "wb") as fh:
            fh.write(rendered)
    else:
        sys.stdout.write(rendered.decode("utf-8"))
    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())

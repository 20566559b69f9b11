"""Assessment report assembly and rendering.

The JSON layout is pinned by data/report_schema.json (schema_version "1",
additive changes only); downstream tooling may rely on it. Text output is for
humans: findings grouped by target, severity descending.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import uascout
from uascout.assessor import Finding, NodeAccessRecord, Severity, sort_findings
from uascout.discovery import ProbeResult

SCHEMA_VERSION = "1"

_SEVERITY_ORDER = ["Critical", "High", "Medium", "Low", "Info"]


@dataclass
class SkippedTest:
    check: str
    reason: str

    def to_dict(self) -> dict:
        return {"check": self.check, "reason": self.reason}


@dataclass
class TargetReport:
    host: str
    port: int
    endpoints: List[dict] = field(default_factory=list)
    server_info: Optional[dict] = None
    findings: List[Finding] = field(default_factory=list)
    node_access_records: List[dict] = field(default_factory=list)
    skipped_tests: List[SkippedTest] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "host": self.host,
            "port": self.port,
            "endpoints": self.endpoints,
            "server_info": self.server_info,
            "findings": [f.to_dict() for f in sort_findings(self.findings)],
            "node_access_records": sorted(self.node_access_records, key=lambda r: r["node"]),
            "skipped_tests": [s.to_dict() for s in sorted(self.skipped_tests, key=lambda s: s.check)],
            "warnings": sorted(self.warnings),
        }


@dataclass
class AssessmentReport:
    tool_version: str = uascout.__version__
    schema_version: str = SCHEMA_VERSION
    started_at: str = ""
    finished_at: str = ""
    targets: List[str] = field(default_factory=list)
    probe_results: List[dict] = field(default_factory=list)
    target_reports: List[TargetReport] = field(default_factory=list)

    def all_findings(self) -> List[Finding]:
        out: List[Finding] = []
        for target in self.target_reports:
            out.extend(target.findings)
        return out

    def summary(self) -> Dict[str, int]:
        counts = {name: 0 for name in _SEVERITY_ORDER}
        for finding in self.all_findings():
            counts[finding.severity.value] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "targets": sorted(self.targets),
            "probe_results": sorted(
                self.probe_results, key=lambda p: (p["host"], p["port"])
            ),
            "target_reports": [
                t.to_dict()
                for t in sorted(self.target_reports, key=lambda t: (t.host, t.port))
            ],
            "summary": self.summary(),
        }


def probe_result_dict(result: ProbeResult) -> dict:
    out = {
        "host": result.host,
        "port": result.port,
        "verdict": result.verdict.value,
        "error_detail": result.error_detail,
    }
    if result.ack_limits is not None:
        out["ack_limits"] = {
            "receive_buffer": result.ack_limits.receive_buffer,
            "send_buffer": result.ack_limits.send_buffer,
            "max_message_size": result.ack_limits.max_message_size,
            "max_chunk_count": result.ack_limits.max_chunk_count,
        }
    return out


def endpoint_dict(endpoint) -> dict:
    return {
        "endpoint_url": endpoint.endpoint_url,
        "security_policy_uri": endpoint.security_policy_uri,
        "message_security_mode": endpoint.message_security_mode.name,
        "security_level": endpoint.security_level,
        "token_policies": [
            {
                "policy_id": tp.policy_id,
                "token_type": tp.token_type.name,
                "security_policy_uri": tp.security_policy_uri,
            }
            for tp in endpoint.user_token_policies
        ],
    }


def server_info_dict(info) -> dict:
    return {
        "application_uri": info.application_uri,
        "product_uri": info.product_uri,
        "build_info": {
            "product_name": info.product_name,
            "software_version": info.software_version,
            "build_number": info.build_number,
            "build_date": info.build_date,
        },
        "namespace_array": list(info.namespace_array),
        "server_array": list(info.server_array),
        "known_servers": [
            {
                "application_uri": rec.application_uri,
                "product_uri": rec.product_uri,
                "discovery_urls": list(rec.discovery_urls),
            }
            for rec in info.known_servers
        ],
        "find_servers_restricted": info.find_servers_restricted,
        "read_statuses": dict(info.read_statuses),
    }


def access_record_dict(record: NodeAccessRecord) -> dict:
    return record.to_dict()


def render_report(report: AssessmentReport, fmt: str) -> bytes:
    if fmt == "json":
        return (
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        ).encode("utf-8")
    if fmt == "text":
        return _render_text(report).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(raw: bytes) -> AssessmentReport:
    """Inverse of render_report(..., "json")."""
    data = json.loads(raw.decode("utf-8"))
    report = AssessmentReport(
        tool_version=data["tool_version"],
        schema_version=data["schema_version"],
        started_at=data["started_at"],
        finished_at=data["finished_at"],
        targets=list(data["targets"]),
        probe_results=list(data["probe_results"]),
    )
    for entry in data["target_reports"]:
        report.target_reports.append(
            TargetReport(
                host=entry["host"],
                port=entry["port"],
                endpoints=list(entry["endpoints"]),
                server_info=entry["server_info"],
                findings=[Finding.from_dict(f) for f in entry["findings"]],
                node_access_records=list(entry["node_access_records"]),
                skipped_tests=[
                    SkippedTest(s["check"], s["reason"]) for s in entry["skipped_tests"]
                ],
                warnings=list(entry["warnings"]),
            )
        )
    return report


def _render_text(report: AssessmentReport) -> str:
    lines: List[str] = []
    lines.append(f"uascout assessment report (tool {report.tool_version})")
    if report.started_at:
        lines.append(f"started:  {report.started_at}")
    if report.finished_at:
        lines.append(f"finished: {report.finished_at}")
    summary = report.summary()
    lines.append(
        "summary:  "
        + "  ".join(f"{name}={summary[name]}" for name in _SEVERITY_ORDER)
    )
    lines.append("")

    if report.probe_results:
        lines.append("discovery:")
        for probe in sorted(report.probe_results, key=lambda p: (p["host"], p["port"])):
            detail = f" ({probe['error_detail']})" if probe.get("error_detail") else ""
            lines.append(f"  {probe['host']}:{probe['port']}  {probe['verdict']}{detail}")
        lines.append("")

    for target in sorted(report.target_reports, key=lambda t: (t.host, t.port)):
        lines.append(f"target {target.host}:{target.port}")
        if target.server_info:
            info = target.server_info
            lines.append(
                f"  server: {info.get('application_uri', '')} "
                f"{info.get('build_info', {}).get('product_name', '')} "
                f"{info.get('build_info', {}).get('software_version', '')}".rstrip()
            )
        for endpoint in target.endpoints:
            lines.append(
                f"  endpoint: {endpoint['security_policy_uri'].rsplit('#', 1)[-1]}"
                f"/{endpoint['message_security_mode']}"
                f" level={endpoint['security_level']}"
            )
        if target.findings:
            lines.append("  findings:")
            for finding in sort_findings(target.findings):
                lines.append(
                    f"    [{finding.severity.value:.1s}] {finding.kind} ({finding.id})"
                )
                for key, value in finding.evidence:
                    lines.append(f"        {key}: {value}")
                if finding.remediation:
                    lines.append(f"        fix: {finding.remediation}")
        else:
            lines.append("  findings: none")
        if target.skipped_tests:
            for skip in sorted(target.skipped_tests, key=lambda s: s.check):
                lines.append(f"  skipped: {skip.check}: {skip.reason}")
        for warning in sorted(target.warnings):
            lines.append(f"  warning: {warning}")
        lines.append("")
    return "\n".join(lines)


def exit_code_for(report: AssessmentReport) -> int:
    """0 = clean, 1 = findings of severity High or above are present."""
    for finding in report.all_findings():
        if finding.severity.rank >= Severity.HIGH.rank:
            return 1
    return 0

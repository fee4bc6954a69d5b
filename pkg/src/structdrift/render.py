"""Report serialization: canonical JSON (with readers), CSV and tables.

CSV is available for matrix-, aggregate- and timeline-shaped reports;
real-valued cells carry three fraction digits, counts and offsets stay
plain integers, and absent cells are left empty. Table output is
fixed-width and carries the same values as the JSON form.
"""

import json
from typing import List, Optional, Sequence

from .analytics import (
    BinaryStats,
    ImpactMatrix,
    ImpactScore,
    StructureVolatility,
    TimelineReport,
    TransitionTable,
    VolatilityStats,
)
from .diff import ChangeCounts, DiffReport, dumps_diff
from .errors import SchemaError
from .profile import Profile, RepositoryIndex, dumps_profile, parse_json_document
from .watch import CapabilityAssessment, ChainReport, TransitionNote

IMPACT_SCHEMA = "structdrift-impact/1"
TIMELINE_SCHEMA = "structdrift-timeline/1"
VOLATILITY_SCHEMA = "structdrift-volatility/1"
STATS_SCHEMA = "structdrift-stats/1"
AGGREGATE_SCHEMA = "structdrift-aggregate/1"
CAPABILITIES_SCHEMA = "structdrift-capabilities/1"
CHAIN_REPORTS_SCHEMA = "structdrift-chain-reports/1"
INDEX_SCHEMA = "structdrift-index/1"

AGGREGATE_CSV_HEADER = (
    "transition,offset_changes,member_additions,member_removals,"
    "structure_removals,total_impact"
)


class UnsupportedFormatError(SchemaError):
    """The requested output format does not exist for this report kind."""


def _dumps(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def transition_label(from_label: str, to_label: str) -> str:
    return f"{from_label}->{to_label}"


# ---------------------------------------------------------------- impact

def _score_to_doc(score: Optional[ImpactScore]):
    if score is None:
        return None
    return {"score": score.score, "factors": dict(score.factors)}


def matrix_to_doc(matrix: ImpactMatrix) -> dict:
    return {
        "schema": IMPACT_SCHEMA,
        "watchlist": matrix.watchlist_name,
        "transitions": [{"from": a, "to": b} for a, b in matrix.transitions],
        "structures": list(matrix.structures),
        "scores": {
            name: [_score_to_doc(s) for s in row]
            for name, row in matrix.scores.items()
        },
    }


def doc_to_matrix(doc: dict) -> ImpactMatrix:
    transitions = [(t["from"], t["to"]) for t in doc.get("transitions", [])]
    structures = list(doc.get("structures", []))
    scores = {}
    for name, row in doc.get("scores", {}).items():
        cells: List[Optional[ImpactScore]] = []
        for cell, transition in zip(row, transitions):
            if cell is None:
                cells.append(None)
            else:
                cells.append(
                    ImpactScore(name, transition, cell["score"], dict(cell["factors"]))
                )
        scores[name] = cells
    return ImpactMatrix(structures, transitions, doc.get("watchlist"), scores)


def loads_matrix(text: str) -> ImpactMatrix:
    return doc_to_matrix(parse_json_document(text, IMPACT_SCHEMA))


def matrix_to_csv(matrix: ImpactMatrix) -> str:
    header = ["structure"] + [transition_label(a, b) for a, b in matrix.transitions]
    lines = [",".join(header)]
    for name in matrix.structures:
        cells = [
            "" if s is None else f"{s.score:.3f}" for s in matrix.scores[name]
        ]
        lines.append(",".join([name] + cells))
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------- timeline

def timeline_to_doc(report: TimelineReport) -> dict:
    return {
        "schema": TIMELINE_SCHEMA,
        "structure": report.structure,
        "member": report.member,
        "points": [
            {"version": version, "value": value} for version, value in report.points
        ],
    }


def doc_to_timeline(doc: dict) -> TimelineReport:
    points = [(p["version"], p["value"]) for p in doc.get("points", [])]
    return TimelineReport(doc.get("structure", ""), doc.get("member"), points)


def loads_timeline(text: str) -> TimelineReport:
    return doc_to_timeline(parse_json_document(text, TIMELINE_SCHEMA))


def timeline_to_csv(report: TimelineReport) -> str:
    lines = ["version,value"]
    for version, value in report.points:
        lines.append(f"{version},{'' if value is None else value}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ volatility

def volatility_to_doc(stats: VolatilityStats) -> dict:
    return {
        "schema": VOLATILITY_SCHEMA,
        "watchlist": stats.watchlist_name,
        "overall_rate": stats.overall_rate,
        "total_surviving": stats.total_surviving,
        "total_moved": stats.total_moved,
        "per_structure": {
            name: {
                "surviving_members": v.surviving_members,
                "members_with_offset_change": v.members_with_offset_change,
                "rate": v.rate,
            }
            for name, v in stats.per_structure.items()
        },
    }


def doc_to_volatility(doc: dict) -> VolatilityStats:
    per_structure = {
        name: StructureVolatility(
            v["surviving_members"], v["members_with_offset_change"], v["rate"]
        )
        for name, v in doc.get("per_structure", {}).items()
    }
    return VolatilityStats(
        per_structure=per_structure,
        overall_rate=doc.get("overall_rate", 0.0),
        total_surviving=doc.get("total_surviving", 0),
        total_moved=doc.get("total_moved", 0),
        watchlist_name=doc.get("watchlist"),
    )


def loads_volatility(text: str) -> VolatilityStats:
    return doc_to_volatility(parse_json_document(text, VOLATILITY_SCHEMA))


# ----------------------------------------------------------------- stats

def stats_to_doc(stats_list: Sequence[BinaryStats]) -> dict:
    return {
        "schema": STATS_SCHEMA,
        "sources": [
            {
                "source": s.source,
                "binary_size_mb": s.binary_size_mb,
                "symbol_count": s.symbol_count,
                "dwarf_versions": list(s.dwarf_versions),
            }
            for s in stats_list
        ],
    }


def loads_stats(text: str) -> List[BinaryStats]:
    doc = parse_json_document(text, STATS_SCHEMA)
    return [
        BinaryStats(
            s["source"], s["binary_size_mb"], s["symbol_count"],
            tuple(s["dwarf_versions"]),
        )
        for s in doc.get("sources", [])
    ]


# ------------------------------------------------------------- aggregate

def _counts_to_doc(counts: ChangeCounts) -> dict:
    return {
        "offset_changes": counts.offset_changes,
        "member_additions": counts.member_additions,
        "member_removals": counts.member_removals,
        "structure_removals": counts.structure_removals,
        "structure_additions": counts.structure_additions,
        "total_impact": counts.total_impact,
    }


def _doc_to_counts(doc: dict) -> ChangeCounts:
    return ChangeCounts(
        offset_changes=doc.get("offset_changes", 0),
        member_additions=doc.get("member_additions", 0),
        member_removals=doc.get("member_removals", 0),
        structure_removals=doc.get("structure_removals", 0),
        structure_additions=doc.get("structure_additions", 0),
        total_impact=doc.get("total_impact", 0),
    )


def aggregate_to_doc(table: TransitionTable) -> dict:
    return {
        "schema": AGGREGATE_SCHEMA,
        "watchlist": table.watchlist_name,
        "rows": [
            dict({"from": frm, "to": to}, **_counts_to_doc(counts))
            for frm, to, counts in table.rows
        ],
        "totals": _counts_to_doc(table.totals),
    }


def doc_to_aggregate(doc: dict) -> TransitionTable:
    rows = [
        (row["from"], row["to"], _doc_to_counts(row)) for row in doc.get("rows", [])
    ]
    return TransitionTable(
        rows, _doc_to_counts(doc.get("totals", {})), doc.get("watchlist")
    )


def loads_aggregate(text: str) -> TransitionTable:
    return doc_to_aggregate(parse_json_document(text, AGGREGATE_SCHEMA))


def aggregate_to_csv(table: TransitionTable) -> str:
    lines = [AGGREGATE_CSV_HEADER]
    for frm, to, c in table.rows:
        lines.append(
            f"{transition_label(frm, to)},{c.offset_changes},{c.member_additions},"
            f"{c.member_removals},{c.structure_removals},{c.total_impact}"
        )
    t = table.totals
    lines.append(
        f"total,{t.offset_changes},{t.member_additions},{t.member_removals},"
        f"{t.structure_removals},{t.total_impact}"
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------- chain reports

def chain_reports_to_doc(reports: Sequence[ChainReport], profile_version: str) -> dict:
    return {
        "schema": CHAIN_REPORTS_SCHEMA,
        "profile_version": profile_version,
        "reports": [
            {
                "chain": r.chain_id,
                "status": r.status,
                "resolved_steps": [
                    {"structure": s, "member": m, "offset": o}
                    for s, m, o in r.resolved_steps
                ],
                "first_failure": None
                if r.first_failure is None
                else {"step": r.first_failure[0], "reason": r.first_failure[1]},
            }
            for r in reports
        ],
    }


def loads_chain_reports(text: str):
    doc = parse_json_document(text, CHAIN_REPORTS_SCHEMA)
    reports = []
    for r in doc.get("reports", []):
        failure = r.get("first_failure")
        reports.append(
            ChainReport(
                chain_id=r["chain"],
                status=r["status"],
                resolved_steps=[
                    (s["structure"], s["member"], s["offset"])
                    for s in r.get("resolved_steps", [])
                ],
                first_failure=None if failure is None
                else (failure["step"], failure["reason"]),
            )
        )
    return doc.get("profile_version", ""), reports


def capabilities_to_doc(assessment: CapabilityAssessment) -> dict:
    return {
        "schema": CAPABILITIES_SCHEMA,
        "versions": list(assessment.versions),
        "capabilities": {
            cap: list(statuses) for cap, statuses in assessment.statuses.items()
        },
        "annotations": [
            {
                "from": n.from_version,
                "to": n.to_version,
                "capability": n.capability,
                "kind": n.kind,
                "detail": n.detail,
            }
            for n in assessment.annotations
        ],
    }


def loads_capabilities(text: str) -> CapabilityAssessment:
    doc = parse_json_document(text, CAPABILITIES_SCHEMA)
    return CapabilityAssessment(
        versions=list(doc.get("versions", [])),
        statuses={c: list(s) for c, s in doc.get("capabilities", {}).items()},
        annotations=[
            TransitionNote(a["from"], a["to"], a["capability"], a["kind"], a["detail"])
            for a in doc.get("annotations", [])
        ],
    )


# ----------------------------------------------------------------- index

def index_to_doc(index: RepositoryIndex) -> dict:
    return {
        "schema": INDEX_SCHEMA,
        "entries": [
            {"platform_version": v, "architecture": a, "path": str(p)}
            for (v, a), p in sorted(index.entries.items())
        ],
        "skipped": [
            {"path": str(p), "reason": reason} for p, reason in index.skipped
        ],
    }


# ----------------------------------------------------------------- table

def _fixed_table(headers: List[str], rows: List[List[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    out = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    out.append("  ".join("-" * w for w in widths))
    for row in rows:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(out) + "\n"


def _profile_table(profile: Profile) -> str:
    meta = profile.meta
    head = (
        f"profile {meta.platform_version}/{meta.architecture} "
        f"({len(profile.structures)} structures, "
        f"{meta.raw_type_die_count} raw type entries)\n"
    )
    rows = [
        [name, str(rec.byte_size), str(len(rec.members))]
        for name, rec in profile.structures.items()
    ]
    return head + _fixed_table(["structure", "size", "members"], rows)


def _diff_table(report: DiffReport) -> str:
    lines = [
        f"diff {report.from_label} -> {report.to_label}",
        f"added:     {', '.join(report.added_structures) or '(none)'}",
        f"removed:   {', '.join(report.removed_structures) or '(none)'}",
        f"modified:  {len(report.modified)}    unchanged: {report.unchanged_count}",
    ]
    rows = []
    for d in report.modified:
        rows.append(
            [d.name, str(d.old_size), str(d.new_size), str(len(d.offset_changes)),
             str(len(d.member_additions)), str(len(d.member_removals))]
        )
    if rows:
        lines.append(
            _fixed_table(
                ["structure", "old_size", "new_size", "moves", "adds", "removes"], rows
            ).rstrip("\n")
        )
    return "\n".join(lines) + "\n"


def _matrix_table(matrix: ImpactMatrix) -> str:
    headers = ["structure"] + [transition_label(a, b) for a, b in matrix.transitions]
    rows = []
    for name in matrix.structures:
        rows.append(
            [name]
            + ["-" if s is None else f"{s.score:.3f}" for s in matrix.scores[name]]
        )
    return _fixed_table(headers, rows)


def _aggregate_table(table: TransitionTable) -> str:
    headers = ["transition", "offset_changes", "member_additions",
               "member_removals", "structure_removals", "total_impact"]
    rows = [
        [transition_label(frm, to), str(c.offset_changes), str(c.member_additions),
         str(c.member_removals), str(c.structure_removals), str(c.total_impact)]
        for frm, to, c in table.rows
    ]
    t = table.totals
    rows.append(["Total", str(t.offset_changes), str(t.member_additions),
                 str(t.member_removals), str(t.structure_removals),
                 str(t.total_impact)])
    return _fixed_table(headers, rows)


def _timeline_table(report: TimelineReport) -> str:
    subject = report.structure + (f".{report.member}" if report.member else "")
    rows = [
        [version, "absent" if value is None else str(value)]
        for version, value in report.points
    ]
    return f"timeline for {subject}\n" + _fixed_table(["version", "value"], rows)


def _volatility_table(stats: VolatilityStats) -> str:
    rows = [
        [name, str(v.surviving_members), str(v.members_with_offset_change),
         f"{v.rate:.3f}"]
        for name, v in stats.per_structure.items()
    ]
    head = (
        f"overall rate {stats.overall_rate:.3f} "
        f"({stats.total_moved}/{stats.total_surviving} surviving members moved)\n"
    )
    return head + _fixed_table(["structure", "surviving", "moved", "rate"], rows)


def _stats_table(stats_list: Sequence[BinaryStats]) -> str:
    rows = [
        [s.source, f"{s.binary_size_mb:.2f}", str(s.symbol_count),
         ",".join(str(v) for v in s.dwarf_versions)]
        for s in stats_list
    ]
    return _fixed_table(["source", "size_mb", "symbols", "dwarf"], rows)


def _chain_reports_table(reports: Sequence[ChainReport], version: str) -> str:
    rows = []
    for r in reports:
        if r.first_failure is None:
            where = "-"
        else:
            where = f"step {r.first_failure[0]}: {r.first_failure[1]}"
        rows.append([r.chain_id, r.status, str(len(r.resolved_steps)), where])
    return (
        f"chains against profile {version}\n"
        + _fixed_table(["chain", "status", "steps_resolved", "failure"], rows)
    )


def _capabilities_table(assessment: CapabilityAssessment) -> str:
    headers = ["capability"] + list(assessment.versions)
    rows = [
        [cap] + list(statuses) for cap, statuses in assessment.statuses.items()
    ]
    body = _fixed_table(headers, rows)
    if assessment.annotations:
        notes = "\n".join(
            f"  [{n.kind}] {transition_label(n.from_version, n.to_version)} "
            f"{n.capability}: {n.detail}"
            for n in assessment.annotations
        )
        body += "annotations:\n" + notes + "\n"
    return body


def _index_table(index: RepositoryIndex) -> str:
    rows = [
        [v, a, str(p)] for (v, a), p in sorted(index.entries.items())
    ]
    body = _fixed_table(["version", "architecture", "path"], rows)
    if index.skipped:
        body += "skipped:\n" + "\n".join(
            f"  {p}: {reason}" for p, reason in index.skipped
        ) + "\n"
    return body


_CSV_RENDERERS = {
    ImpactMatrix: matrix_to_csv,
    TransitionTable: aggregate_to_csv,
    TimelineReport: timeline_to_csv,
}


def render_report(report, fmt: str, context: Optional[dict] = None) -> str:
    """Render any module report; csv only exists for matrix-shaped ones."""
    context = context or {}
    if fmt == "json":
        if isinstance(report, Profile):
            return dumps_profile(report)
        if isinstance(report, DiffReport):
            return dumps_diff(report)
        if isinstance(report, ImpactMatrix):
            return _dumps(matrix_to_doc(report))
        if isinstance(report, TimelineReport):
            return _dumps(timeline_to_doc(report))
        if isinstance(report, VolatilityStats):
            return _dumps(volatility_to_doc(report))
        if isinstance(report, TransitionTable):
            return _dumps(aggregate_to_doc(report))
        if isinstance(report, CapabilityAssessment):
            return _dumps(capabilities_to_doc(report))
        if isinstance(report, RepositoryIndex):
            return _dumps(index_to_doc(report))
        if isinstance(report, list) and all(isinstance(r, BinaryStats) for r in report):
            return _dumps(stats_to_doc(report))
        if isinstance(report, list) and all(isinstance(r, ChainReport) for r in report):
            return _dumps(
                chain_reports_to_doc(report, context.get("profile_version", ""))
            )
        raise UnsupportedFormatError(f"no json renderer for {type(report).__name__}")
    if fmt == "csv":
        renderer = _CSV_RENDERERS.get(type(report))
        if renderer is None:
            raise UnsupportedFormatError(
                f"csv output is not available for {type(report).__name__} reports"
            )
        return renderer(report)
    if fmt == "table":
        if isinstance(report, Profile):
            return _profile_table(report)
        if isinstance(report, DiffReport):
            return _diff_table(report)
        if isinstance(report, ImpactMatrix):
            return _matrix_table(report)
        if isinstance(report, TimelineReport):
            return _timeline_table(report)
        if isinstance(report, VolatilityStats):
            return _volatility_table(report)
        if isinstance(report, TransitionTable):
            return _aggregate_table(report)
        if isinstance(report, CapabilityAssessment):
            return _capabilities_table(report)
        if isinstance(report, RepositoryIndex):
            return _index_table(report)
        if isinstance(report, list) and all(isinstance(r, BinaryStats) for r in report):
            return _stats_table(report)
        if isinstance(report, list) and all(isinstance(r, ChainReport) for r in report):
            return _chain_reports_table(report, context.get("profile_version", ""))
        raise UnsupportedFormatError(f"no table renderer for {type(report).__name__}")
    raise UnsupportedFormatError(f"unknown format {fmt!r}")

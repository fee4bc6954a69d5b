"""Profile comparison: structure add/remove plus member-level changes.

Members are matched by identity (name, ordinal-among-same-name) so that
repeated anonymous members pair up positionally instead of collapsing.
Every structure name in either catalog lands in exactly one of: added,
removed, modified, unchanged.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import SchemaError
from .profile import (
    MemberRecord,
    Profile,
    StructureRecord,
    parse_json_document,
    read_text,
)

DIFF_SCHEMA = "structdrift-diff/1"


@dataclass(frozen=True)
class MemberChange:
    member_name: str
    old_offset: int
    new_offset: int


@dataclass
class StructureDiff:
    name: str
    old_size: int
    new_size: int
    member_additions: List[MemberRecord] = field(default_factory=list)
    member_removals: List[MemberRecord] = field(default_factory=list)
    offset_changes: List[MemberChange] = field(default_factory=list)
    # Denominators for impact scoring; not part of the change taxonomy.
    old_member_count: int = 0
    shared_member_count: int = 0

    def is_change(self) -> bool:
        return bool(
            self.member_additions
            or self.member_removals
            or self.offset_changes
            or self.old_size != self.new_size
        )


@dataclass
class DiffReport:
    from_label: str
    to_label: str
    added_structures: List[str] = field(default_factory=list)
    removed_structures: List[str] = field(default_factory=list)
    modified: List[StructureDiff] = field(default_factory=list)
    unchanged_count: int = 0


@dataclass
class ChangeCounts:
    offset_changes: int = 0
    member_additions: int = 0
    member_removals: int = 0
    structure_removals: int = 0
    structure_additions: int = 0
    total_impact: int = 0


def member_identities(members: Sequence[MemberRecord]) -> List[Tuple[str, int]]:
    """Identity of each member: its name plus ordinal among that name."""
    counts: Dict[str, int] = {}
    identities = []
    for member in members:
        ordinal = counts.get(member.name, 0)
        counts[member.name] = ordinal + 1
        identities.append((member.name, ordinal))
    return identities


def diff_structure(old: StructureRecord, new: StructureRecord) -> StructureDiff:
    if old.name != new.name:
        raise ValueError(f"structure name mismatch: {old.name!r} vs {new.name!r}")
    old_ids = dict(zip(member_identities(old.members), old.members))
    new_ids = dict(zip(member_identities(new.members), new.members))
    diff = StructureDiff(
        name=old.name,
        old_size=old.byte_size,
        new_size=new.byte_size,
        old_member_count=len(old.members),
    )
    for identity, member in new_ids.items():
        if identity not in old_ids:
            diff.member_additions.append(member)
    for identity, member in old_ids.items():
        counterpart = new_ids.get(identity)
        if counterpart is None:
            diff.member_removals.append(member)
            continue
        diff.shared_member_count += 1
        if counterpart.offset != member.offset:
            diff.offset_changes.append(
                MemberChange(member.name, member.offset, counterpart.offset)
            )
    return diff


def diff_profiles(
    old: Profile, new: Profile, scope: Optional[Sequence[str]] = None
) -> DiffReport:
    report = DiffReport(
        from_label=old.meta.platform_version,
        to_label=new.meta.platform_version,
    )
    names = set(old.structures) | set(new.structures)
    if scope is not None:
        names &= set(scope)
    for name in sorted(names):
        in_old = name in old.structures
        in_new = name in new.structures
        if in_old and not in_new:
            report.removed_structures.append(name)
        elif in_new and not in_old:
            report.added_structures.append(name)
        else:
            diff = diff_structure(old.structures[name], new.structures[name])
            if diff.is_change():
                report.modified.append(diff)
            else:
                report.unchanged_count += 1
    return report


def summarize_diff(report: DiffReport) -> ChangeCounts:
    """Aggregate counts; total_impact excludes structure additions."""
    counts = ChangeCounts(
        structure_removals=len(report.removed_structures),
        structure_additions=len(report.added_structures),
    )
    for diff in report.modified:
        counts.offset_changes += len(diff.offset_changes)
        counts.member_additions += len(diff.member_additions)
        counts.member_removals += len(diff.member_removals)
    counts.total_impact = (
        counts.offset_changes
        + counts.member_additions
        + counts.member_removals
        + counts.structure_removals
    )
    return counts


def diff_to_doc(report: DiffReport) -> dict:
    return {
        "schema": DIFF_SCHEMA,
        "from": report.from_label,
        "to": report.to_label,
        "added_structures": list(report.added_structures),
        "removed_structures": list(report.removed_structures),
        "modified": [
            {
                "name": d.name,
                "old_size": d.old_size,
                "new_size": d.new_size,
                "member_additions": [
                    {"name": m.name, "offset": m.offset} for m in d.member_additions
                ],
                "member_removals": [
                    {"name": m.name, "offset": m.offset} for m in d.member_removals
                ],
                "offset_changes": [
                    {"member": c.member_name, "old": c.old_offset, "new": c.new_offset}
                    for c in d.offset_changes
                ],
                "old_member_count": d.old_member_count,
                "shared_member_count": d.shared_member_count,
            }
            for d in report.modified
        ],
        "unchanged_count": report.unchanged_count,
    }


def dumps_diff(report: DiffReport) -> str:
    return json.dumps(diff_to_doc(report), ensure_ascii=False, indent=2) + "\n"


def _member_list(doc, what: str) -> List[MemberRecord]:
    if not isinstance(doc, list):
        raise SchemaError(f"{what} must be a list")
    members = []
    for m in doc:
        if not isinstance(m, dict) or not isinstance(m.get("name"), str) \
                or not isinstance(m.get("offset"), int):
            raise SchemaError(f"malformed member entry in {what}")
        members.append(MemberRecord(m["name"], m["offset"]))
    return members


def doc_to_diff(doc: dict) -> DiffReport:
    for key, ty in (("from", str), ("to", str), ("added_structures", list),
                    ("removed_structures", list), ("modified", list),
                    ("unchanged_count", int)):
        if not isinstance(doc.get(key), ty):
            raise SchemaError(f"diff field {key!r} missing or wrong type")
    report = DiffReport(
        from_label=doc["from"],
        to_label=doc["to"],
        added_structures=[str(n) for n in doc["added_structures"]],
        removed_structures=[str(n) for n in doc["removed_structures"]],
        unchanged_count=doc["unchanged_count"],
    )
    for entry in doc["modified"]:
        if not isinstance(entry, dict):
            raise SchemaError("modified entry is not an object")
        changes = []
        for c in entry.get("offset_changes", []):
            if not isinstance(c, dict) or not isinstance(c.get("member"), str) \
                    or not isinstance(c.get("old"), int) or not isinstance(c.get("new"), int):
                raise SchemaError("malformed offset_changes entry")
            changes.append(MemberChange(c["member"], c["old"], c["new"]))
        report.modified.append(
            StructureDiff(
                name=entry.get("name", ""),
                old_size=entry.get("old_size", 0),
                new_size=entry.get("new_size", 0),
                member_additions=_member_list(
                    entry.get("member_additions"), "member_additions"
                ),
                member_removals=_member_list(
                    entry.get("member_removals"), "member_removals"
                ),
                offset_changes=changes,
                old_member_count=entry.get("old_member_count", 0),
                shared_member_count=entry.get("shared_member_count", 0),
            )
        )
    return report


def loads_diff(text: str) -> DiffReport:
    return doc_to_diff(parse_json_document(text, DIFF_SCHEMA))


def read_diff(source) -> DiffReport:
    return loads_diff(read_text(source))

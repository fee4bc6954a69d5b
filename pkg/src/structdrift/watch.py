"""Forensic traversal chains and their per-version resolvability.

A chain is an ordered list of (structure, member) steps modelling how an
analysis tool walks from one runtime structure to the next. Resolution
checks structural presence only: each step's structure must exist in the
profile and contain the named member. The shipped chain and watchlist
definitions live in data files so deployments can amend them.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import SchemaError
from .profile import Profile, parse_json_document, read_text, version_key

CHAINS_SCHEMA = "structdrift-chains/1"
WATCHLIST_SCHEMA = "structdrift-watchlist/1"

CAPABILITIES = (
    "thread_enumeration",
    "heap_analysis",
    "object_reconstruction",
    "dex_recovery",
)

REASON_STRUCTURE_MISSING = "structure-missing"
REASON_MEMBER_MISSING = "member-missing"
REASON_NOT_APPLICABLE = "chain-not-applicable"

STATUS_RESOLVED = "resolved"
STATUS_BROKEN = "broken"


@dataclass
class WatchlistSpec:
    name: str
    structures: List[str]

    def validate(self) -> None:
        if not self.structures:
            raise SchemaError(f"watchlist {self.name!r} is empty")
        if len(set(self.structures)) != len(self.structures):
            raise SchemaError(f"watchlist {self.name!r} contains duplicates")


@dataclass(frozen=True)
class ChainStep:
    structure: str
    member: str


@dataclass
class ChainSpec:
    id: str
    capability: str
    steps: List[ChainStep]
    min_version: Optional[str] = None
    max_version: Optional[str] = None

    def applies_to(self, version: str) -> bool:
        key = version_key(version)
        if self.min_version is not None and key < version_key(self.min_version):
            return False
        if self.max_version is not None and key > version_key(self.max_version):
            return False
        return True


@dataclass
class ChainReport:
    chain_id: str
    status: str
    resolved_steps: List[Tuple[str, str, int]] = field(default_factory=list)
    first_failure: Optional[Tuple[int, str]] = None  # (step index, reason)


@dataclass
class TransitionNote:
    from_version: str
    to_version: str
    capability: str
    kind: str  # "broke" | "restored" | "maintenance-required"
    detail: str


@dataclass
class CapabilityAssessment:
    versions: List[str]
    # statuses[capability][i] corresponds to versions[i].
    statuses: Dict[str, List[str]]
    annotations: List[TransitionNote] = field(default_factory=list)


def _load_data_file(name: str) -> str:
    return resources.files("structdrift.data").joinpath(name).read_text("utf-8")


def parse_watchlist(text: str) -> WatchlistSpec:
    doc = parse_json_document(text, WATCHLIST_SCHEMA)
    name = doc.get("name")
    structures = doc.get("structures")
    if not isinstance(name, str) or not isinstance(structures, list) \
            or not all(isinstance(s, str) for s in structures):
        raise SchemaError("watchlist requires a name and a list of structure names")
    spec = WatchlistSpec(name, list(structures))
    spec.validate()
    return spec


def load_watchlist(path) -> WatchlistSpec:
    return parse_watchlist(read_text(path))


def default_watchlist() -> WatchlistSpec:
    return parse_watchlist(_load_data_file("watchlist.json"))


def parse_chains(text: str) -> List[ChainSpec]:
    doc = parse_json_document(text, CHAINS_SCHEMA)
    chains_doc = doc.get("chains")
    if not isinstance(chains_doc, list):
        raise SchemaError("chains document requires a 'chains' list")
    chains: List[ChainSpec] = []
    seen_ids = set()
    for entry in chains_doc:
        if not isinstance(entry, dict):
            raise SchemaError("chain entry is not an object")
        chain_id = entry.get("id")
        capability = entry.get("capability")
        steps_doc = entry.get("steps")
        if not isinstance(chain_id, str) or not chain_id:
            raise SchemaError("chain id missing")
        if chain_id in seen_ids:
            raise SchemaError(f"duplicate chain id {chain_id!r}")
        seen_ids.add(chain_id)
        if capability not in CAPABILITIES:
            raise SchemaError(f"chain {chain_id}: unknown capability {capability!r}")
        if not isinstance(steps_doc, list) or not steps_doc:
            raise SchemaError(f"chain {chain_id}: needs at least one step")
        steps = []
        for s in steps_doc:
            if not isinstance(s, dict) or not isinstance(s.get("structure"), str) \
                    or not isinstance(s.get("member"), str):
                raise SchemaError(f"chain {chain_id}: malformed step")
            steps.append(ChainStep(s["structure"], s["member"]))
        versions = entry.get("applicable_versions") or {}
        if not isinstance(versions, dict):
            raise SchemaError(f"chain {chain_id}: applicable_versions must be an object")
        min_v = versions.get("min")
        max_v = versions.get("max")
        if min_v is not None and max_v is not None \
                and version_key(min_v) > version_key(max_v):
            raise SchemaError(f"chain {chain_id}: applicable_versions range is inverted")
        chains.append(ChainSpec(chain_id, capability, steps, min_v, max_v))
    return chains


def load_chains(path) -> List[ChainSpec]:
    return parse_chains(read_text(path))


def default_chains() -> List[ChainSpec]:
    return parse_chains(_load_data_file("chains.json"))


def resolve_chain(profile: Profile, chain: ChainSpec) -> ChainReport:
    """Walk the chain's steps against one profile's structure catalog."""
    if not chain.applies_to(profile.meta.platform_version):
        return ChainReport(chain.id, STATUS_BROKEN,
                           first_failure=(0, REASON_NOT_APPLICABLE))
    report = ChainReport(chain.id, STATUS_RESOLVED)
    for index, step in enumerate(chain.steps):
        record = profile.structures.get(step.structure)
        if record is None:
            report.status = STATUS_BROKEN
            report.first_failure = (index, REASON_STRUCTURE_MISSING)
            return report
        offset = next((m.offset for m in record.members if m.name == step.member), None)
        if offset is None:
            report.status = STATUS_BROKEN
            report.first_failure = (index, REASON_MEMBER_MISSING)
            return report
        report.resolved_steps.append((step.structure, step.member, offset))
    return report


def assess_capabilities(
    profiles: Sequence[Profile], chains: Sequence[ChainSpec]
) -> CapabilityAssessment:
    """Per-version capability status with transition annotations.

    A capability is resolved at a version when at least one applicable
    chain resolves there. Annotations mark status flips between
    consecutive versions, and offset movement inside chains that stay
    resolved (maintenance needed, but not broken).
    """
    if not profiles:
        raise ValueError("sequence too short: need at least 1 profile")
    versions = [p.meta.platform_version for p in profiles]
    capabilities = sorted({c.capability for c in chains})
    reports: Dict[str, List[ChainReport]] = {c.id: [] for c in chains}
    statuses: Dict[str, List[str]] = {cap: [] for cap in capabilities}
    for profile in profiles:
        resolved_caps = set()
        for chain in chains:
            report = resolve_chain(profile, chain)
            reports[chain.id].append(report)
            if report.status == STATUS_RESOLVED:
                resolved_caps.add(chain.capability)
        for cap in capabilities:
            statuses[cap].append(
                STATUS_RESOLVED if cap in resolved_caps else STATUS_BROKEN
            )
    annotations: List[TransitionNote] = []
    for i in range(len(profiles) - 1):
        frm, to = versions[i], versions[i + 1]
        for cap in capabilities:
            before, after = statuses[cap][i], statuses[cap][i + 1]
            if before != after:
                kind = "broke" if after == STATUS_BROKEN else "restored"
                annotations.append(
                    TransitionNote(frm, to, cap, kind,
                                   f"capability {cap} {kind} at {frm}->{to}")
                )
        for chain in chains:
            a, b = reports[chain.id][i], reports[chain.id][i + 1]
            if a.status == STATUS_RESOLVED and b.status == STATUS_RESOLVED:
                shifted = [
                    step_a[0] + "." + step_a[1]
                    for step_a, step_b in zip(a.resolved_steps, b.resolved_steps)
                    if step_a[2] != step_b[2]
                ]
                if shifted:
                    annotations.append(
                        TransitionNote(
                            frm, to, chain.capability, "maintenance-required",
                            f"chain {chain.id}: offsets moved for "
                            + ", ".join(shifted),
                        )
                    )
    return CapabilityAssessment(versions, statuses, annotations)


def chains_to_doc(chains: Sequence[ChainSpec]) -> dict:
    entries = []
    for chain in chains:
        entry: dict = {"id": chain.id, "capability": chain.capability}
        if chain.min_version is not None or chain.max_version is not None:
            versions = {}
            if chain.min_version is not None:
                versions["min"] = chain.min_version
            if chain.max_version is not None:
                versions["max"] = chain.max_version
            entry["applicable_versions"] = versions
        entry["steps"] = [
            {"structure": s.structure, "member": s.member} for s in chain.steps
        ]
        entries.append(entry)
    return {"schema": CHAINS_SCHEMA, "chains": entries}


def dumps_chains(chains: Sequence[ChainSpec]) -> str:
    return json.dumps(chains_to_doc(chains), ensure_ascii=False, indent=2) + "\n"

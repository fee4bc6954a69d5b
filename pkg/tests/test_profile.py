import json

import pytest
from hypothesis import given, settings

from structdrift import (
    InvariantError,
    MemberRecord,
    Profile,
    SchemaError,
    StructureRecord,
    index_repository,
    read_profile,
    write_profile,
)
from structdrift.profile import (
    dumps_profile,
    loads_profile,
    validate_profile,
    version_key,
)

from conftest import make_meta, make_profile, profiles


def test_write_then_read_round_trip(tmp_path):
    profile = make_profile(
        "9",
        {
            "Thread": (2584, [("tls32_", 0), ("name_", 1520)]),
            "Runtime": (2048, [("heap_", 448), ("thread_list_", 512)]),
        },
    )
    path = tmp_path / "a.profile.json"
    write_profile(profile, path)
    assert read_profile(path) == profile


def test_canonical_bytes_stable(tmp_path):
    profile = make_profile("10", {"Heap": (3200, [("region_space_", 728)])})
    path = tmp_path / "b.profile.json"
    write_profile(profile, path)
    original = path.read_bytes()
    write_profile(read_profile(path), path)
    assert path.read_bytes() == original
    assert original.endswith(b"\n")


def test_structure_count_in_file(tmp_path):
    profile = make_profile(
        "9",
        {
            "A": (8, [("x", 0)]),
            "B": (16, [("y", 8)]),
            "C": (4, []),
        },
    )
    path = tmp_path / "c.profile.json"
    write_profile(profile, path)
    doc = json.loads(path.read_text())
    assert len(doc["structures"]) == 3


def test_unsorted_members_rejected_before_write():
    record = StructureRecord("Bad", 32, [MemberRecord("b", 16), MemberRecord("a", 0)])
    profile = Profile(make_meta(), {"Bad": record})
    with pytest.raises(InvariantError):
        dumps_profile(profile)


def test_unsorted_catalog_rejected():
    profile = Profile(
        make_meta(),
        {
            "Zeta": StructureRecord("Zeta", 8, []),
            "Alpha": StructureRecord("Alpha", 8, []),
        },
    )
    with pytest.raises(InvariantError):
        validate_profile(profile)


def test_offset_outside_size_rejected():
    record = StructureRecord("Bad", 8, [MemberRecord("x", 8)])
    with pytest.raises(InvariantError):
        validate_profile(Profile(make_meta(), {"Bad": record}))


def test_zero_size_structure_allows_members():
    record = StructureRecord("Opaque", 0, [MemberRecord("x", 64)])
    validate_profile(Profile(make_meta(), {"Opaque": record}))


def test_unknown_architecture_rejected():
    profile = Profile(make_meta(arch="mips"), {})
    with pytest.raises(InvariantError):
        validate_profile(profile)


def _canonical_text():
    profile = make_profile("9", {"S": (16, [("a", 0), ("b", 8)])})
    return dumps_profile(profile)


def test_duplicate_structure_key_rejected():
    text = _canonical_text()
    body = '"S": {"size": 16, "members": []}'
    mutated = text.replace('"structures": {', '"structures": {' + body + ", ", 1)
    with pytest.raises(SchemaError):
        loads_profile(mutated)


def test_missing_meta_field_rejected():
    doc = json.loads(_canonical_text())
    del doc["meta"]["architecture"]
    with pytest.raises(SchemaError):
        loads_profile(json.dumps(doc))


def test_wrong_type_rejected():
    doc = json.loads(_canonical_text())
    doc["structures"]["S"]["size"] = "16"
    with pytest.raises(SchemaError):
        loads_profile(json.dumps(doc))


def test_boolean_is_not_an_integer():
    doc = json.loads(_canonical_text())
    doc["meta"]["binary_size_bytes"] = True
    with pytest.raises(SchemaError):
        loads_profile(json.dumps(doc))


def test_unsorted_member_document_rejected():
    doc = json.loads(_canonical_text())
    doc["structures"]["S"]["members"].reverse()
    with pytest.raises(InvariantError):
        loads_profile(json.dumps(doc))


def test_wrong_schema_marker_rejected():
    doc = json.loads(_canonical_text())
    doc["schema"] = "something-else/9"
    with pytest.raises(SchemaError):
        loads_profile(json.dumps(doc))


def test_unreadable_file(tmp_path):
    with pytest.raises(SchemaError):
        read_profile(tmp_path / "missing.profile.json")


def test_write_failure_surfaces_as_oserror(tmp_path):
    profile = make_profile("9", {"S": (8, [])})
    with pytest.raises(OSError):
        write_profile(profile, tmp_path / "no_such_dir" / "p.profile.json")


@settings(max_examples=120, deadline=None)
@given(profiles())
def test_round_trip_over_generated_profiles(profile):
    assert loads_profile(dumps_profile(profile)) == profile


@settings(max_examples=60, deadline=None)
@given(profiles())
def test_canonical_text_fixed_point(profile):
    text = dumps_profile(profile)
    assert dumps_profile(loads_profile(text)) == text


# ----------------------------------------------------------------- repository

def test_index_empty_repository(tmp_path):
    root = tmp_path / "repo"
    root.mkdir()
    index = index_repository(root)
    assert index.entries == {}
    assert index.skipped == []


def test_index_full_grid(tmp_repo):
    for version in ["9", "10", "11", "12", "13", "14"]:
        for arch in ["arm32", "arm64", "x86_32", "x86_64"]:
            tmp_repo(make_profile(version, {"S": (8, [("a", 0)])}, arch=arch))
    index = index_repository(tmp_repo.root)
    assert len(index.entries) == 24
    assert index.skipped == []
    assert index.versions("x86_64") == ["9", "10", "11", "12", "13", "14"]


def test_index_isolates_corrupt_files(tmp_repo):
    for version in ["9", "10"]:
        tmp_repo(make_profile(version, {"S": (8, [("a", 0)])}))
    bad = tmp_repo.root / "11" / "x86_64"
    bad.mkdir(parents=True)
    (bad / "broken.profile.json").write_text("{nonsense")
    index = index_repository(tmp_repo.root)
    assert len(index.entries) == 2
    assert len(index.skipped) == 1
    assert "broken.profile.json" in str(index.skipped[0][0])


def test_index_missing_root(tmp_path):
    with pytest.raises(FileNotFoundError):
        index_repository(tmp_path / "nope")


def test_index_flags_duplicates(tmp_repo):
    tmp_repo(make_profile("9", {"S": (8, [])}), stem="one")
    tmp_repo(make_profile("9", {"S": (8, [])}), stem="two")
    index = index_repository(tmp_repo.root)
    assert len(index.entries) == 1
    assert len(index.skipped) == 1
    assert "duplicate" in index.skipped[0][1]


def test_checked_in_fixture_names_core_structures():
    from conftest import FIXTURES

    profile = read_profile(
        FIXTURES / "profiles" / "14" / "x86_64" / "libart.profile.json"
    )
    assert profile.meta.architecture == "x86_64"
    for name in ("Thread", "Runtime", "Heap"):
        assert name in profile.structures


def test_version_ordering():
    labels = ["10", "9", "14", "11"]
    assert sorted(labels, key=version_key) == ["9", "10", "11", "14"]
    assert version_key("9") < version_key("10") < version_key("14")

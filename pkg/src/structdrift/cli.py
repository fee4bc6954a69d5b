"""Command-line front end: extract, store, diff, analyze, report.

Exit codes: 0 success, 1 breaking changes found under --fail-on-break,
2 usage error, 3 unreadable or malformed input.
"""

import argparse
import os
import sys
from typing import List, Optional

from .analytics import (
    aggregate_transitions,
    binary_stats,
    impact_matrix,
    member_offset_timeline,
    size_timeline,
    volatility_stats,
)
from .diff import DiffReport, diff_profiles
from .errors import StructDriftError
from .extract import extract_profile
from .profile import (
    ARCHITECTURES,
    Profile,
    index_repository,
    read_profile,
    version_key,
)
from .render import UnsupportedFormatError, render_report
from .watch import REASON_NOT_APPLICABLE, assess_capabilities, default_chains, \
    default_watchlist, load_chains, load_watchlist, resolve_chain

EXIT_OK = 0
EXIT_BREAKAGE = 1
EXIT_USAGE = 2
EXIT_INPUT = 3


def _add_output_options(parser, formats=("json", "table")):
    parser.add_argument("--out", help="write the report to this path instead of stdout")
    parser.add_argument("--format", choices=formats, default="json",
                        help="output format (default: json)")


def _add_repo_options(parser):
    parser.add_argument("--repo", default=os.environ.get("STRUCTDRIFT_REPO"),
                        help="profile repository root (default: $STRUCTDRIFT_REPO)")
    parser.add_argument("--arch", choices=ARCHITECTURES,
                        help="architecture to select from the repository")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structdrift",
        description="Extract, store, diff and analyze structure layouts "
                    "from DWARF debug information in ELF shared libraries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a layout profile from an ELF binary")
    p.add_argument("binary")
    p.add_argument("--version", dest="platform_version", default="unknown",
                   help="platform version label to record (e.g. 9..14)")
    p.add_argument("--arch", choices=ARCHITECTURES,
                   help="architecture label (default: inferred from the ELF header)")
    p.add_argument("--build-variant", default="unknown")
    _add_output_options(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("diff", help="compare two profiles")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--scope", help="watchlist file restricting the comparison, "
                                   "or 'default' for the built-in list")
    p.add_argument("--fail-on-break", action="store_true",
                   help="exit 1 when the diff contains removals or offset moves")
    _add_output_options(p)
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("score", help="impact scores per structure and transition")
    p.add_argument("profiles", nargs="*", help="profile files in version order")
    p.add_argument("--scope", help="watchlist file or 'default'")
    _add_repo_options(p)
    _add_output_options(p, formats=("json", "csv", "table"))
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("stats", help="binary size and symbol statistics")
    p.add_argument("sources", nargs="+", help="ELF binaries or profile files")
    _add_output_options(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("aggregate", help="change counts per transition with totals")
    p.add_argument("profiles", nargs="*")
    p.add_argument("--scope", help="watchlist file or 'default'")
    _add_repo_options(p)
    _add_output_options(p, formats=("json", "csv", "table"))
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("timeline", help="size or member-offset timeline")
    p.add_argument("structure")
    p.add_argument("profiles", nargs="*")
    p.add_argument("--member", help="member name; omit for the size timeline")
    _add_repo_options(p)
    _add_output_options(p, formats=("json", "csv", "table"))
    p.set_defaults(func=_cmd_timeline)

    p = sub.add_parser("volatility", help="offset-change rates for surviving members")
    p.add_argument("profiles", nargs="*")
    p.add_argument("--scope", help="watchlist file or 'default'")
    _add_repo_options(p)
    _add_output_options(p)
    p.set_defaults(func=_cmd_volatility)

    p = sub.add_parser("chains", help="resolve forensic chains against profiles")
    p.add_argument("profiles", nargs="+")
    p.add_argument("--chains", dest="chains_file", default="default",
                   help="chain spec file, or 'default' for the built-in chains")
    p.add_argument("--fail-on-break", action="store_true",
                   help="exit 1 when any chain or capability is broken")
    _add_output_options(p)
    p.set_defaults(func=_cmd_chains)

    p = sub.add_parser("index", help="catalog a profile repository")
    _add_repo_options(p)
    _add_output_options(p)
    p.set_defaults(func=_cmd_index)

    return parser


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_scope(value: Optional[str]):
    if value is None:
        return None, None
    spec = default_watchlist() if value == "default" else load_watchlist(value)
    return spec.structures, spec.name


def _load_sequence(args) -> List[Profile]:
    if args.profiles:
        profiles = [read_profile(p) for p in args.profiles]
        profiles.sort(key=lambda p: version_key(p.meta.platform_version))
        return profiles
    if not args.repo:
        raise UsageError("give profile files, or --repo (or $STRUCTDRIFT_REPO)")
    if not args.arch:
        raise UsageError("--arch is required when reading a sequence from --repo")
    index = index_repository(args.repo)
    paths = index.sequence(args.arch)
    if not paths:
        raise StructDriftError(
            f"no {args.arch} profiles found under {args.repo}"
        )
    return [read_profile(p) for p in paths]


class UsageError(Exception):
    pass


def _cmd_extract(args) -> int:
    profile = extract_profile(
        args.binary,
        platform_version=args.platform_version,
        architecture=args.arch,
        build_variant=args.build_variant,
    )
    _emit(args, render_report(profile, args.format))
    return EXIT_OK


def _diff_is_breaking(report: DiffReport) -> bool:
    if report.removed_structures:
        return True
    return any(d.offset_changes or d.member_removals for d in report.modified)


def _cmd_diff(args) -> int:
    scope, _ = _load_scope(args.scope)
    report = diff_profiles(read_profile(args.old), read_profile(args.new), scope)
    _emit(args, render_report(report, args.format))
    if args.fail_on_break and _diff_is_breaking(report):
        return EXIT_BREAKAGE
    return EXIT_OK


def _cmd_score(args) -> int:
    profiles = _load_sequence(args)
    scope, scope_name = _load_scope(args.scope)
    if scope is None:
        scope = sorted({name for p in profiles for name in p.structures})
    matrix = impact_matrix(profiles, scope, watchlist_name=scope_name)
    _emit(args, render_report(matrix, args.format))
    return EXIT_OK


def _is_elf(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == b"\x7fELF"
    except OSError as exc:
        raise StructDriftError(f"cannot read {path}: {exc}") from exc


def _cmd_stats(args) -> int:
    results = []
    for source in args.sources:
        if _is_elf(source):
            results.append(binary_stats(source))
        else:
            stats = binary_stats(read_profile(source))
            stats.source = str(source)
            results.append(stats)
    _emit(args, render_report(results, args.format))
    return EXIT_OK


def _cmd_aggregate(args) -> int:
    profiles = _load_sequence(args)
    scope, scope_name = _load_scope(args.scope)
    table = aggregate_transitions(profiles, scope, watchlist_name=scope_name)
    _emit(args, render_report(table, args.format))
    return EXIT_OK


def _cmd_timeline(args) -> int:
    profiles = _load_sequence(args)
    if args.member:
        report = member_offset_timeline(profiles, args.structure, args.member)
    else:
        report = size_timeline(profiles, args.structure)
    _emit(args, render_report(report, args.format))
    return EXIT_OK


def _cmd_volatility(args) -> int:
    profiles = _load_sequence(args)
    scope, scope_name = _load_scope(args.scope)
    stats = volatility_stats(profiles, scope, watchlist_name=scope_name)
    _emit(args, render_report(stats, args.format))
    return EXIT_OK


def _cmd_chains(args) -> int:
    chains = default_chains() if args.chains_file == "default" \
        else load_chains(args.chains_file)
    profiles = [read_profile(p) for p in args.profiles]
    if len(profiles) == 1:
        profile = profiles[0]
        reports = [resolve_chain(profile, chain) for chain in chains]
        context = {"profile_version": profile.meta.platform_version}
        _emit(args, render_report(reports, args.format, context))
        # Chains outside their version range are not breakage.
        broken = any(
            r.first_failure is not None
            and r.first_failure[1] != REASON_NOT_APPLICABLE
            for r in reports
        )
    else:
        profiles.sort(key=lambda p: version_key(p.meta.platform_version))
        assessment = assess_capabilities(profiles, chains)
        _emit(args, render_report(assessment, args.format))
        broken = any(
            "broken" in statuses for statuses in assessment.statuses.values()
        )
    if args.fail_on_break and broken:
        return EXIT_BREAKAGE
    return EXIT_OK


def _cmd_index(args) -> int:
    if not args.repo:
        raise UsageError("--repo (or $STRUCTDRIFT_REPO) is required")
    index = index_repository(args.repo)
    _emit(args, render_report(index, args.format))
    return EXIT_OK


def run(argv: List[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UnsupportedFormatError as exc:
        print(f"structdrift: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"structdrift: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"structdrift: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StructDriftError, OSError) as exc:
        print(f"structdrift: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Corpus-level reporting: duplicates, concentration curves, vulnerability provenance."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import MissingProfileError
from .similarity import SimilarityPair

VULN_TYPES = (
    "reentrancy",
    "overflow",
    "cross_function_race_condition",
    "mismatched_constructor",
    "ownership_takeover",
    "manipulable_suicide_address",
    "erc20_related",
)

SAME_AUTHOR = "same_author"
DIFFERENT_AUTHOR = "different_author"
AUTHOR_RELATIONS = (SAME_AUTHOR, DIFFERENT_AUTHOR)

NEITHER_VULNERABLE = "neither_vulnerable"
BOTH_SAME_BEHAVIOR = "both_same_behavior"
ONE_VULNERABLE = "one_vulnerable"
BOTH_OVERLAPPED = "both_overlapped"
BOTH_NOT_OVERLAPPED = "both_not_overlapped"
BEHAVIORS = (
    NEITHER_VULNERABLE,
    BOTH_SAME_BEHAVIOR,
    ONE_VULNERABLE,
    BOTH_OVERLAPPED,
    BOTH_NOT_OVERLAPPED,
)


@dataclass(frozen=True)
class VulnProfile:
    """Scanner findings for one contract as (type, count) pairs."""

    contract_id: str
    findings: Mapping[str, int] = field(default_factory=dict)

    def normalized(self) -> Counter[str]:
        """Findings with zero counts dropped: absence and count 0 are the same."""
        return +Counter(self.findings)


def classify_pair(
    pair: SimilarityPair,
    v1: VulnProfile | None,
    v2: VulnProfile | None,
    authors: Mapping[str, str],
) -> tuple[str, str]:
    """Place a similar pair into the authorship x vulnerability-behavior grid.

    Two contracts share a behavior only when their findings agree as
    multisets, i.e. the same types with the same counts. Non-equal but
    intersecting type sets count as overlapped.
    """
    if v1 is None or v2 is None:
        missing = pair.a if v1 is None else pair.b
        raise MissingProfileError(f"no vulnerability profile for contract {missing}")
    relation = SAME_AUTHOR if authors[pair.a] == authors[pair.b] else DIFFERENT_AUTHOR
    f1, f2 = v1.normalized(), v2.normalized()
    if not f1 and not f2:
        behavior = NEITHER_VULNERABLE
    elif not f1 or not f2:
        behavior = ONE_VULNERABLE
    elif f1 == f2:
        behavior = BOTH_SAME_BEHAVIOR
    elif set(f1) & set(f2):
        behavior = BOTH_OVERLAPPED
    else:
        behavior = BOTH_NOT_OVERLAPPED
    return relation, behavior


@dataclass
class ProvenanceTable:
    """Pair counts over the 2x5 authorship/behavior grid."""

    cells: dict[tuple[str, str], int]
    total_pairs: int

    def column_totals(self) -> dict[str, int]:
        return {
            behavior: sum(self.cells[(relation, behavior)] for relation in AUTHOR_RELATIONS)
            for behavior in BEHAVIORS
        }

    def headline_share(self) -> float:
        """Percentage of pairs whose members carry exactly the same vulnerabilities."""
        if self.total_pairs == 0:
            return 0.0
        return 100.0 * self.column_totals()[BOTH_SAME_BEHAVIOR] / self.total_pairs

    def rows(self) -> list[tuple[str, ...]]:
        """Rendered rows: one per author relation plus the totals row."""
        out: list[tuple[str, ...]] = []
        for relation in AUTHOR_RELATIONS:
            out.append(
                (relation, *(str(self.cells[(relation, b)]) for b in BEHAVIORS))
            )
        totals = self.column_totals()
        out.append(("total", *(str(totals[b]) for b in BEHAVIORS)))
        return out


def provenance_table(
    pairs: Sequence[SimilarityPair],
    profiles: Mapping[str, VulnProfile],
    authors: Mapping[str, str],
) -> ProvenanceTable:
    """Classify every similar pair; cell counts always sum to the pair count."""
    cells = {(r, b): 0 for r in AUTHOR_RELATIONS for b in BEHAVIORS}
    for pair in pairs:
        cells[classify_pair(pair, profiles.get(pair.a), profiles.get(pair.b), authors)] += 1
    return ProvenanceTable(cells, len(pairs))


@dataclass(frozen=True)
class DuplicateStats:
    """Duplicate-group size table plus the full rank/size series."""

    rows: tuple[tuple[int, int, str, str], ...]  # rank, size, representative, group key
    rank_size: tuple[tuple[int, int], ...]


def _group_key_text(key: object) -> str:
    return key.hex() if isinstance(key, bytes) else str(key)


def duplicate_stats(
    duplicate_groups: Mapping[object, Sequence[str]],
    representatives: Mapping[object, str] | None = None,
    top_n: int = 10,
) -> DuplicateStats:
    """Rank duplicate groups by size, largest first, ties by representative id."""
    entries = []
    for key, members in duplicate_groups.items():
        rep = representatives.get(key) if representatives else None
        if rep is None:
            rep = min(members)
        entries.append((len(members), rep, _group_key_text(key)))
    entries.sort(key=lambda e: (-e[0], e[1]))
    rows = tuple(
        (rank, size, rep, key)
        for rank, (size, rep, key) in enumerate(entries[:top_n], start=1)
    )
    rank_size = tuple((rank, size) for rank, (size, _, _) in enumerate(entries, start=1))
    return DuplicateStats(rows, rank_size)


@dataclass(frozen=True)
class ParetoReport:
    """Cumulative concentration of a size distribution, largest first."""

    series: tuple[tuple[int, float], ...]  # rank, cumulative share in percent
    top_percent_shares: dict[int, float]

    def share_at_top_percent(self, percent: float, cluster_count: int | None = None) -> float:
        count = cluster_count if cluster_count is not None else len(self.series)
        take = max(1, int(count * percent / 100.0))
        return self.series[min(take, len(self.series)) - 1][1]


def pareto_report(sizes: Sequence[int], readouts: Sequence[int] = (1, 20)) -> ParetoReport:
    """Cumulative share per rank, with explicit top-k% readouts.

    The top k% readout covers max(1, floor(k% of the clusters)) clusters, so
    small inputs still report their single largest cluster.
    """
    if not sizes:
        raise ValueError("cannot build a concentration report from zero clusters")
    ordered = sorted(sizes, reverse=True)
    total = sum(ordered)
    series: list[tuple[int, float]] = []
    running = 0
    for rank, size in enumerate(ordered, start=1):
        running += size
        series.append((rank, 100.0 * running / total))
    report = ParetoReport(tuple(series), {})
    for percent in readouts:
        report.top_percent_shares[percent] = report.share_at_top_percent(percent)
    return report

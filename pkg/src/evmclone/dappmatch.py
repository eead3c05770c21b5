"""DApp clone detection: bipartite matching of contract sets and volume impact."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

from .cluster import build_graph, connected_components
from .errors import EmptyMatchingError, MissingFingerprintError, TemplateOnlyError
from .similarity import SimilarityPair, prune_filter, similarity_score

if TYPE_CHECKING:
    from .corpus import FingerprintRecord

DEFAULT_THRESHOLD = 70.0


@dataclass(frozen=True)
class DAppManifest:
    """A named application: its contracts, authors, and market metadata."""

    name: str
    contracts: tuple[str, ...]
    deployers: frozenset[str]
    volume: float
    deployed_at: int
    category: str | None = None

    def __post_init__(self) -> None:
        if not self.contracts:
            raise ValueError(f"DApp {self.name!r} lists no contracts")
        if not self.deployers:
            raise ValueError(f"DApp {self.name!r} lists no deployers")
        if self.volume < 0:
            raise ValueError(f"DApp {self.name!r} has negative volume")


@dataclass(frozen=True)
class MatchResult:
    """Outcome of a maximum-weight bipartite matching."""

    matched_edges: tuple[tuple[int, int, float], ...]
    total_weight: float


@dataclass(frozen=True)
class DAppClonePair:
    """A detected clone relationship, earliest deployment first."""

    original: str
    clone: str
    score: float


@dataclass(frozen=True)
class DAppCloneCluster:
    """A connected component of clone pairs."""

    original: str
    members: tuple[str, ...]

    @property
    def clones(self) -> tuple[str, ...]:
        return tuple(m for m in self.members if m != self.original)


def _hungarian_max(weights: list[list[float]]) -> list[int]:
    """Maximum-weight assignment on a square matrix; returns column per row.

    Classic O(n^3) label-correcting scheme: keep feasible row/column
    potentials, grow one alternating tree per row, and relax potentials by
    the minimum slack until an augmenting path appears.
    """
    n = len(weights)
    lx = [max(row) for row in weights]
    ly = [0.0] * n
    row_match = [-1] * n
    col_match = [-1] * n

    for root in range(n):
        slack = [lx[root] + ly[j] - weights[root][j] for j in range(n)]
        slack_row = [root] * n
        parent_row = [-1] * n
        visited = [False] * n
        tree_rows = [root]

        while True:
            delta = None
            chosen = -1
            for j in range(n):
                if not visited[j] and (delta is None or slack[j] < delta):
                    delta = slack[j]
                    chosen = j
            if delta:
                for r in tree_rows:
                    lx[r] -= delta
                for j in range(n):
                    if visited[j]:
                        ly[j] += delta
                    else:
                        slack[j] -= delta
            visited[chosen] = True
            parent_row[chosen] = slack_row[chosen]

            owner = col_match[chosen]
            if owner == -1:
                # Augment: rematch every row along the tree path.
                col = chosen
                while col != -1:
                    row = parent_row[col]
                    previous = row_match[row]
                    row_match[row] = col
                    col_match[col] = row
                    col = previous
                break
            tree_rows.append(owner)
            for j in range(n):
                if not visited[j]:
                    candidate = lx[owner] + ly[j] - weights[owner][j]
                    if candidate < slack[j]:
                        slack[j] = candidate
                        slack_row[j] = owner
    return row_match


def km_match(weights: Sequence[Sequence[float]]) -> MatchResult:
    """Maximum-weight matching over a rectangular score matrix.

    Rectangular inputs are padded to square with zero-weight dummies, which
    can never displace a positive edge; dummy and zero-weight assignments
    are dropped from the reported edges.
    """
    rows = len(weights)
    cols = len(weights[0]) if rows else 0
    if rows == 0 or cols == 0:
        raise EmptyMatchingError("cannot match an empty weight matrix")
    for row in weights:
        if len(row) != cols:
            raise ValueError("weight matrix must be rectangular")
        for value in row:
            if not 0.0 <= value <= 100.0:
                raise ValueError("weights must lie in [0, 100]")

    n = max(rows, cols)
    padded = [
        [float(weights[i][j]) if i < rows and j < cols else 0.0 for j in range(n)]
        for i in range(n)
    ]
    row_match = _hungarian_max(padded)

    edges: list[tuple[int, int, float]] = []
    total = 0.0
    for i in range(rows):
        j = row_match[i]
        if j < cols and weights[i][j] > 0:
            edges.append((i, j, float(weights[i][j])))
            total += weights[i][j]
    return MatchResult(tuple(edges), total)


def exclude_templates(
    dapp: DAppManifest,
    templates: frozenset[bytes] | set[bytes],
    store: Mapping[str, "FingerprintRecord"],
) -> list[str]:
    """Drop the DApp's contracts whose token hash is a known template.

    An empty result marks the DApp as template-only; such DApps never enter
    matching.
    """
    reduced = []
    for contract in dapp.contracts:
        record = store.get(contract)
        if record is None:
            raise MissingFingerprintError(
                f"contract {contract} of DApp {dapp.name!r} has no fingerprint record"
            )
        if record.token_hash not in templates:
            reduced.append(contract)
    return reduced


def dapp_similarity(
    d1: DAppManifest,
    d2: DAppManifest,
    store: Mapping[str, "FingerprintRecord"],
    templates: frozenset[bytes] | set[bytes] = frozenset(),
) -> float:
    """Score two DApps by optimally pairing their non-template contracts.

    Each direction normalizes the matched weight by its own contract count,
    and the higher direction wins, so a small DApp fully contained in a
    larger one still scores as a full copy.
    """
    reduced1 = exclude_templates(d1, templates, store)
    reduced2 = exclude_templates(d2, templates, store)
    if not reduced1 or not reduced2:
        raise TemplateOnlyError(
            f"DApp pair {d1.name!r} / {d2.name!r} has a template-only side"
        )
    matrix = []
    for a in reduced1:
        rec_a = store[a]
        row = []
        for b in reduced2:
            rec_b = store[b]
            if prune_filter(rec_a.meta, rec_b.meta):
                row.append(similarity_score(rec_a.fingerprint, rec_b.fingerprint))
            else:
                row.append(0.0)
        matrix.append(row)
    total = km_match(matrix).total_weight
    return max(total / len(reduced1), total / len(reduced2))


def _age_key(manifest: DAppManifest) -> tuple[int, str]:
    return (manifest.deployed_at, manifest.name)


def detect_clones(
    dapps: Sequence[DAppManifest],
    store: Mapping[str, "FingerprintRecord"],
    templates: frozenset[bytes] | set[bytes] = frozenset(),
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[list[DAppClonePair], list[DAppCloneCluster]]:
    """Find clone pairs among DApps by different authors and group them.

    A pair qualifies when its similarity reaches the threshold and the two
    deployer sets are disjoint; shared authorship is re-deployment, not
    plagiarism. Clusters are connected components over the qualifying
    pairs, each attributed to its earliest-deployed member.
    """
    by_name = {d.name: d for d in dapps}
    eligible = [
        d
        for d in sorted(dapps, key=lambda m: m.name)
        if exclude_templates(d, templates, store)
    ]
    pairs: list[DAppClonePair] = []
    edges: list[SimilarityPair] = []
    for i, d1 in enumerate(eligible):
        for d2 in eligible[i + 1 :]:
            if d1.deployers & d2.deployers:
                continue
            score = dapp_similarity(d1, d2, store, templates)
            if score >= threshold:
                first, second = sorted((d1, d2), key=_age_key)
                pairs.append(DAppClonePair(first.name, second.name, score))
                edges.append(SimilarityPair(d1.name, d2.name, score))

    graph = build_graph(edges, threshold)
    components, _ = connected_components(graph)
    clusters = []
    for component in components:
        first = min((by_name[name] for name in component.members), key=_age_key)
        clusters.append(DAppCloneCluster(first.name, tuple(component.members)))
    clusters.sort(key=lambda c: (-len(c.members), c.original))
    pairs.sort(key=lambda p: (p.original, p.clone))
    return pairs, clusters


@dataclass(frozen=True)
class VolumeRow:
    """One volume-impact report row."""

    original: str
    clone_count: int
    original_volume: float
    plagiarized_volume: float
    ratio: str


def format_ratio(original_volume: float, plagiarized_volume: float) -> str:
    """Plagiarized-to-original volume as a two-decimal percentage string."""
    if original_volume <= 0:
        return "n/a"
    pct = plagiarized_volume / original_volume * 100.0
    text = f"{pct:.2f}%"
    if text == "0.00%" and plagiarized_volume > 0:
        return "<0.01%"
    return text


def volume_impact(
    clusters: Sequence[DAppCloneCluster],
    manifests: Mapping[str, DAppManifest],
) -> tuple[list[VolumeRow], VolumeRow]:
    """Per-cluster volume comparison between originals and their clones."""
    rows: list[VolumeRow] = []
    total_original = 0.0
    total_plagiarized = 0.0
    total_clones = 0
    for cluster in clusters:
        original = manifests[cluster.original]
        clone_volume = sum(manifests[name].volume for name in cluster.clones)
        rows.append(
            VolumeRow(
                original=original.name,
                clone_count=len(cluster.clones),
                original_volume=original.volume,
                plagiarized_volume=clone_volume,
                ratio=format_ratio(original.volume, clone_volume),
            )
        )
        total_original += original.volume
        total_plagiarized += clone_volume
        total_clones += len(cluster.clones)
    rows.sort(key=lambda r: (-r.clone_count, -r.plagiarized_volume, r.original))
    totals = VolumeRow(
        original="TOTAL",
        clone_count=total_clones,
        original_volume=total_original,
        plagiarized_volume=total_plagiarized,
        ratio=format_ratio(total_original, total_plagiarized),
    )
    return rows, totals

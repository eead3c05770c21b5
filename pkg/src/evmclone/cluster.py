"""Similarity graph construction and connected-component clustering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import UnknownRepresentativeError
from .similarity import SimilarityPair


class UnionFind:
    """Disjoint sets with union by size and path compression."""

    def __init__(self, items: Iterable[str]) -> None:
        self._parent = {item: item for item in items}
        self._size = {item: 1 for item in self._parent}

    def find(self, item: str) -> str:
        root = item
        parent = self._parent
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def groups(self) -> list[list[str]]:
        by_root: dict[str, list[str]] = {}
        for item in self._parent:
            by_root.setdefault(self.find(item), []).append(item)
        return [sorted(members) for members in by_root.values()]


@dataclass(frozen=True)
class SimilarityGraph:
    """Weighted undirected graph over distinct contracts."""

    nodes: frozenset[str]
    edges: dict[tuple[str, str], float]


@dataclass
class ContractCluster:
    """One connected component of the similarity graph."""

    members: list[str]
    total_population: int = 0
    label: str | None = None

    @property
    def size(self) -> int:
        return len(self.members)

    def render_size(self) -> str:
        """Member count with the duplicate-expanded population, e.g. "253 (509)"."""
        return f"{self.size} ({self.total_population})"


def build_graph(
    pairs: Sequence[SimilarityPair],
    threshold: float,
    nodes: Iterable[str] | None = None,
) -> SimilarityGraph:
    """Keep one edge per unordered pair whose score reaches the threshold.

    The node set defaults to every id seen in the pair list; pass the full
    distinct-contract universe to make isolated contracts visible.
    """
    if not 0.0 <= threshold <= 100.0:
        raise ValueError("threshold must lie in [0, 100]")
    node_set = set(nodes) if nodes is not None else set()
    edges: dict[tuple[str, str], float] = {}
    for pair in pairs:
        # pair endpoints always count as nodes, so edges never dangle
        node_set.add(pair.a)
        node_set.add(pair.b)
        if pair.score >= threshold:
            edges[(pair.a, pair.b)] = pair.score
    return SimilarityGraph(frozenset(node_set), edges)


def connected_components(graph: SimilarityGraph) -> tuple[list[ContractCluster], list[str]]:
    """Split the graph into clusters of size >= 2 and isolated singletons.

    Clusters come back sorted by descending size then smallest member id,
    so reports are stable across runs.
    """
    uf = UnionFind(graph.nodes)
    for a, b in graph.edges:
        uf.union(a, b)
    clusters: list[ContractCluster] = []
    singletons: list[str] = []
    for members in uf.groups():
        if len(members) > 1:
            clusters.append(ContractCluster(members=members))
        else:
            singletons.append(members[0])
    clusters.sort(key=lambda c: (-c.size, c.members[0]))
    singletons.sort()
    return clusters, singletons


def expand_with_duplicates(
    clusters: list[ContractCluster],
    duplicate_groups: Mapping[str, Sequence[str]],
) -> list[ContractCluster]:
    """Fill in each cluster's population from its members' duplicate groups."""
    for cluster in clusters:
        population = 0
        for member in cluster.members:
            group = duplicate_groups.get(member)
            if group is None:
                raise UnknownRepresentativeError(
                    f"contract {member} has no duplicate group"
                )
            population += len(group)
        cluster.total_population = population
    return clusters


def label_clusters(
    clusters: list[ContractCluster],
    labels: Mapping[str, str],
) -> list[ContractCluster]:
    """Attach human-supplied labels; a cluster takes its first member's match."""
    for cluster in clusters:
        for member in cluster.members:
            name = labels.get(member)
            if name is not None:
                cluster.label = name
                break
    return clusters

"""Fingerprint similarity scoring and the pruned pair-wise comparison engine."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import DegeneratePairError
from .fingerprint import Fingerprint

PRUNE_RELATIVE_DIFF = 0.30
# With three attributes, "more than 30% of them" means at least two.
PRUNE_MIN_DIFFERING = 2

DEFAULT_THRESHOLD = 70.0


@dataclass(frozen=True)
class MetaAttributes:
    """Cheap per-contract features used to prune hopeless comparisons."""

    opcode_count: int
    block_count: int
    runtime_byte_len: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.opcode_count, self.block_count, self.runtime_byte_len)


@dataclass(frozen=True)
class SimilarityPair:
    """An unordered contract pair with its similarity score."""

    a: str
    b: str
    score: float

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("a similarity pair needs two distinct contracts")
        if self.a > self.b:
            low, high = self.b, self.a
            object.__setattr__(self, "a", low)
            object.__setattr__(self, "b", high)


def _chars(fp: Fingerprint | str) -> str:
    return fp.chars if isinstance(fp, Fingerprint) else fp


def edit_distance(fp1: Fingerprint | str, fp2: Fingerprint | str) -> int:
    """Levenshtein distance with unit-cost insert, delete, and substitute.

    Runs on two rolling rows so memory stays linear in the shorter string.
    """
    s1, s2 = _chars(fp1), _chars(fp2)
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    if not s2:
        return len(s1)
    previous = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1, start=1):
        current = [i]
        append = current.append
        for j, c2 in enumerate(s2, start=1):
            append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (c1 != c2),
                )
            )
        previous = current
    return previous[-1]


def _distance_within(s1: str, s2: str, limit: int) -> int | None:
    """Levenshtein distance, or None as soon as it provably exceeds limit.

    The row minimum of the DP table never decreases, so a row whose minimum
    passes the limit ends the computation early. Exact for all results
    <= limit; callers must treat None as "too far apart".
    """
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    if len(s1) - len(s2) > limit:
        return None
    if not s2:
        return len(s1)
    previous = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1, start=1):
        current = [i]
        append = current.append
        best = i
        for j, c2 in enumerate(s2, start=1):
            value = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (c1 != c2),
            )
            append(value)
            if value < best:
                best = value
        if best > limit:
            return None
        previous = current
    distance = previous[-1]
    return distance if distance <= limit else None


def similarity_score(fp1: Fingerprint | str, fp2: Fingerprint | str) -> float:
    """Map edit distance to [0, 100]; 100 means identical fingerprints."""
    s1, s2 = _chars(fp1), _chars(fp2)
    longest = max(len(s1), len(s2))
    if longest == 0:
        raise DegeneratePairError("cannot score two empty fingerprints")
    # Single division so the result is the correctly rounded exact ratio.
    return 100 * (longest - edit_distance(s1, s2)) / longest


def prune_filter(m1: MetaAttributes, m2: MetaAttributes) -> bool:
    """Decide whether a pair is worth a full fingerprint comparison.

    An attribute counts as different when its relative gap exceeds 30%; the
    pair is skipped once at least two of the three attributes differ.
    """
    differing = 0
    for x, y in zip(m1.as_tuple(), m2.as_tuple()):
        top = max(x, y)
        if top and abs(x - y) / top > PRUNE_RELATIVE_DIFF:
            differing += 1
    return differing < PRUNE_MIN_DIFFERING


Entry = tuple[str, MetaAttributes, Fingerprint]


def _compare_rows(entries: list[Entry], rows: list[int], threshold: float) -> list[SimilarityPair]:
    """Score all pairs (i, j) with i in rows, j > i; keep those at or above threshold."""
    pairs: list[SimilarityPair] = []
    n = len(entries)
    for i in rows:
        id_a, meta_a, fp_a = entries[i]
        chars_a = fp_a.chars
        len_a = len(chars_a)
        for j in range(i + 1, n):
            id_b, meta_b, fp_b = entries[j]
            if not prune_filter(meta_a, meta_b):
                continue
            chars_b = fp_b.chars
            longest = max(len_a, len(chars_b))
            if longest == 0:
                continue
            # Any distance beyond this bound cannot reach the threshold;
            # one slack unit keeps float rounding on the safe side.
            limit = int(longest * (100.0 - threshold) / 100.0) + 1
            distance = _distance_within(chars_a, chars_b, limit)
            if distance is None:
                continue
            score = 100 * (longest - distance) / longest
            if score >= threshold:
                pairs.append(SimilarityPair(id_a, id_b, score))
    return pairs


def pairwise_compare(
    entries: list[Entry],
    threshold: float = DEFAULT_THRESHOLD,
    workers: int = 1,
) -> list[SimilarityPair]:
    """Compare every unordered pair that survives pruning.

    Returns the pairs scoring at or above the threshold, sorted by id. The
    pair space is partitioned over rows, so workers share nothing and their
    outputs merge order-insensitively.
    """
    if not 0.0 <= threshold <= 100.0:
        raise ValueError("threshold must lie in [0, 100]")
    if workers < 1:
        raise ValueError("worker count must be at least 1")
    all_rows = list(range(len(entries)))
    if workers == 1 or len(entries) < 2 * workers:
        pairs = _compare_rows(entries, all_rows, threshold)
    else:
        # Round-robin rows: early rows carry more pairs, so striping keeps
        # the per-worker load roughly even.
        blocks = [all_rows[w::workers] for w in range(workers)]
        pairs = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_compare_rows, [entries] * workers, blocks, [threshold] * workers):
                pairs.extend(chunk)
    pairs.sort(key=lambda p: (p.a, p.b))
    return pairs

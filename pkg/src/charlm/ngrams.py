"""Frequency-filtered character n-gram set with longest-suffix-match lookup.

Each retained n-gram owns a dense context id used to select an output
matrix in the history-conditioned model. Lookup walks a trie keyed by
reversed n-grams, so a query costs one descent of the match length.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

EMPTY_CONTEXT = 0


def count_ngrams(stream, n_max: int) -> Counter:
    """Counts of every contiguous id-subsequence of length 1..n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    seq = tuple(int(c) for c in stream)
    counts: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(seq) - n + 1):
            counts[seq[i:i + n]] += 1
    return counts


class _Node:
    __slots__ = ("children", "context_id")

    def __init__(self):
        self.children: dict[int, _Node] = {}
        self.context_id: int | None = None


@dataclass
class NGramIndex:
    """Retained n-grams with dense context ids; id 0 is the empty context.

    The retained set is closed under taking suffixes and always contains
    every unigram seen in training, so a lookup can never dead-end above
    the unigram level.
    """

    max_order: int
    cutoff: int
    context_of: dict[tuple[int, ...], int]
    counts: dict[tuple[int, ...], int]
    _root: _Node = field(default_factory=_Node, repr=False)

    def __post_init__(self):
        for ngram, cid in self.context_of.items():
            node = self._root
            for c in reversed(ngram):
                node = node.children.setdefault(c, _Node())
            node.context_id = cid

    @property
    def num_contexts(self) -> int:
        """Number of output models, including the empty context."""
        return len(self.context_of) + 1

    def longest_match(self, history) -> int:
        """Context id of the longest retained suffix of ``history``.

        Falls back through shorter suffixes down to the last character's
        unigram; returns the empty context only when that character was
        never seen in training.
        """
        node = self._root
        best = EMPTY_CONTEXT
        for c in reversed(history[-self.max_order:]):
            node = node.children.get(int(c))
            if node is None:
                break
            if node.context_id is not None:
                best = node.context_id
        return best


def build_index(counts: Counter, theta: int, n_max: int) -> NGramIndex:
    """Retain n-grams with count >= theta, plus all unigrams, plus any
    suffixes needed to close the set."""
    if theta < 1:
        raise ValueError(f"cutoff must be >= 1, got {theta}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")

    retained = {ng for ng, c in counts.items()
                if len(ng) <= n_max and c >= theta}
    retained.update(ng for ng in counts if len(ng) == 1)
    # suffix closure: every proper suffix of a retained n-gram is retained
    for ng in list(retained):
        for i in range(1, len(ng)):
            retained.add(ng[i:])

    ordered = sorted(retained, key=lambda ng: (len(ng), ng))
    context_of = {ng: i + 1 for i, ng in enumerate(ordered)}
    kept_counts = {ng: counts.get(ng, 0) for ng in retained}
    return NGramIndex(max_order=n_max, cutoff=theta,
                      context_of=context_of, counts=kept_counts)


def dump_index(index: NGramIndex, path: str) -> None:
    """Inspection dump: one `count<TAB>context-id<TAB>ids` line per n-gram."""
    with open(path, "w", encoding="utf-8") as f:
        for ng in sorted(index.context_of, key=lambda n: (len(n), n)):
            ids = " ".join(str(c) for c in ng)
            f.write(f"{index.counts[ng]}\t{index.context_of[ng]}\t{ids}\n")


def index_to_records(index: NGramIndex) -> list[list]:
    """JSON-friendly form for checkpoint embedding."""
    return [[index.counts[ng], index.context_of[ng], list(ng)]
            for ng in sorted(index.context_of, key=lambda n: (len(n), n))]


def index_from_records(records, theta: int, n_max: int) -> NGramIndex:
    context_of = {tuple(ng): cid for _, cid, ng in records}
    counts = {tuple(ng): cnt for cnt, _, ng in records}
    return NGramIndex(max_order=n_max, cutoff=theta,
                      context_of=context_of, counts=counts)


def contexts_for_stream(index: NGramIndex, chars) -> list[int]:
    """Context id at every position t, from the history ending at t inclusive."""
    out = []
    for t in range(len(chars)):
        lo = max(0, t + 1 - index.max_order)
        out.append(index.longest_match(chars[lo:t + 1]))
    return out

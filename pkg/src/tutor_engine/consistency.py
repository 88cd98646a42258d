"""Self-consistency: sample n feedbacks, cluster near-duplicates, pick the
majority cluster's most central member.

Free-text answers never match exactly at temperature > 0, so equality is
approximate: texts are canonicalized to token sets (code stripped, case and
punctuation dropped) and clustered by single-linkage over pairs whose
Jaccard similarity reaches a threshold (default 0.6). The winner is the
largest cluster, and the returned text is its medoid, verbatim.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace

from .errors import NoCandidates
from .gateway import BatchResult, Gateway, GenerationRequest, GenerationResult, SlotFailure
from .prompting import PromptBundle, render
from .textutil import strip_code

DEFAULT_SIMILARITY_THRESHOLD = 0.6
DEFAULT_SAMPLES = 5

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class VoteOutcome:
    chosen: str
    cluster_size: int
    n: int
    cluster_members: tuple[int, ...]
    total_latency: float = 0.0


@dataclass(frozen=True)
class ConsistencyRound:
    vote: VoteOutcome
    results: tuple[GenerationResult | SlotFailure, ...]
    warnings: tuple[str, ...] = ()
    batch_wall_clock_ms: float = 0.0


def canonicalize(text: str) -> frozenset[str]:
    """Token set of the prose: code stripped, lowercased, punctuation split."""
    prose, _ = strip_code(text)
    return frozenset(tok for tok in _TOKEN_SPLIT.split(prose.lower()) if tok)


def similarity(a: frozenset[str], b: frozenset[str]) -> float:
    """Jaccard index; two empty sets count as identical (all-code answers)."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Root at the smaller index so cluster identity is stable.
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def majority_vote(
    candidates: list[str], threshold: float = DEFAULT_SIMILARITY_THRESHOLD
) -> VoteOutcome:
    """Pick the majority-equivalent answer among the candidates.

    Clusters are single-linkage components of the thresholded similarity
    graph. Largest cluster wins (ties: the one containing the lowest
    index); the chosen text is the cluster medoid, the member with maximal
    mean similarity to the rest (ties: lowest index). The chosen text is
    always one of the inputs, never a synthesis.
    """
    if not candidates:
        raise NoCandidates("majority_vote needs at least one candidate")
    n = len(candidates)
    tokens = [canonicalize(text) for text in candidates]
    sim = [[0.0] * n for _ in range(n)]
    for i in range(n):
        sim[i][i] = 1.0
        for j in range(i + 1, n):
            sim[i][j] = sim[j][i] = similarity(tokens[i], tokens[j])

    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if sim[i][j] >= threshold:
                uf.union(i, j)

    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(uf.find(i), []).append(i)

    members = max(clusters.values(), key=lambda ms: (len(ms), -min(ms)))

    def mean_sim(i: int) -> float:
        others = [sim[i][j] for j in members if j != i]
        return sum(others) / len(others) if others else 1.0

    medoid = max(members, key=lambda i: (mean_sim(i), -i))
    return VoteOutcome(
        chosen=candidates[medoid],
        cluster_size=len(members),
        n=n,
        cluster_members=tuple(members),
    )


def run_self_consistency(
    bundle: PromptBundle,
    n: int,
    gateway: Gateway,
    temperature: float | None = None,
    max_output_tokens: int | None = None,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
    seed_hint: int | None = None,
) -> ConsistencyRound:
    """Generate n candidates for a prompt bundle and majority-vote them.

    Total latency is the batch wall-clock plus voting time. Failed slots
    are tolerated: the vote runs over the survivors and a degraded-vote
    warning records how many were lost (a fully failed batch still raises).
    Vote membership indices refer to the original slot positions.
    """
    request_kwargs: dict = {"prompt_text": render(bundle)}
    if temperature is not None:
        request_kwargs["temperature"] = temperature
    if max_output_tokens is not None:
        request_kwargs["max_output_tokens"] = max_output_tokens
    if seed_hint is not None:
        request_kwargs["seed_hint"] = seed_hint
    request = GenerationRequest(**request_kwargs)

    batch: BatchResult = gateway.generate_batch(request, n)
    survivors = batch.successes()

    vote_start = time.perf_counter()
    vote = majority_vote([result.text for _, result in survivors], threshold=threshold)
    vote_ms = 0.0 if batch.simulated else (time.perf_counter() - vote_start) * 1000.0

    slot_of = [slot for slot, _ in survivors]
    vote = replace(
        vote,
        cluster_members=tuple(slot_of[i] for i in vote.cluster_members),
        total_latency=batch.wall_clock_ms + vote_ms,
    )

    warnings: tuple[str, ...] = ()
    if len(survivors) < n:
        warnings = (
            f"degraded-vote: {len(survivors)} of {n} generations succeeded",
        )
    return ConsistencyRound(
        vote=vote,
        results=batch.slots,
        warnings=warnings,
        batch_wall_clock_ms=batch.wall_clock_ms,
    )

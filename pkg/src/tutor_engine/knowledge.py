"""Tag/ILO-indexed knowledge snippets with weighted-Jaccard retrieval.

Retrieval is deliberately lexical: snippets are indexed under their skill
tags and ILO ids, and scored by tag/ILO overlap with the query. The scorer
sits behind one function so an embedding-based ranker could replace it
without touching the store contract.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateSnippet, InvalidSnippet
from .portfolio import SkillTier

MAX_BODY_CHARS = 2000

TAG_WEIGHT = 0.7
ILO_WEIGHT = 0.3


def _normalize_tags(tags) -> frozenset[str]:
    return frozenset(t.strip().lower() for t in tags if t and t.strip())


@dataclass(frozen=True)
class KnowledgeSnippet:
    snippet_id: str
    subject_code: str
    ilo_ids: frozenset[str]
    skill_tags: frozenset[str]
    body: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "ilo_ids", frozenset(self.ilo_ids))
        object.__setattr__(self, "skill_tags", _normalize_tags(self.skill_tags))
        if not self.snippet_id:
            raise InvalidSnippet("snippet_id must be nonempty")
        if not self.ilo_ids:
            raise InvalidSnippet(f"snippet {self.snippet_id!r} has empty ilo_ids")
        if len(self.body) > MAX_BODY_CHARS:
            raise InvalidSnippet(
                f"snippet {self.snippet_id!r} body exceeds {MAX_BODY_CHARS} characters"
            )


@dataclass(frozen=True)
class RetrievalQuery:
    task_skill_tags: frozenset[str]
    weak_ilo_ids: frozenset[str]
    tier: SkillTier
    k: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "task_skill_tags", _normalize_tags(self.task_skill_tags))
        object.__setattr__(self, "weak_ilo_ids", frozenset(self.weak_ilo_ids))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """Jaccard index; two empty sets score 0 here (no evidence of overlap)."""
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def score(
    snippet: KnowledgeSnippet,
    query: RetrievalQuery,
    tag_weight: float = TAG_WEIGHT,
    ilo_weight: float = ILO_WEIGHT,
) -> float:
    """Relevance in [0, 1]: weighted blend of tag overlap and weak-ILO overlap.

    Task skills dominate (default 0.7/0.3); the query tier is carried for
    future tier-filtered snippet variants and does not affect the score.
    """
    return tag_weight * jaccard(snippet.skill_tags, query.task_skill_tags) + (
        ilo_weight * jaccard(snippet.ilo_ids, query.weak_ilo_ids)
    )


@dataclass
class KnowledgeBase:
    """In-memory snippet store. Writes are serialized; reads see a snapshot."""

    tag_weight: float = TAG_WEIGHT
    ilo_weight: float = ILO_WEIGHT
    _snippets: dict[str, KnowledgeSnippet] = field(default_factory=dict)
    _by_tag: dict[str, set[str]] = field(default_factory=dict)
    _by_ilo: dict[str, set[str]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __len__(self) -> int:
        return len(self._snippets)

    def get(self, snippet_id: str) -> KnowledgeSnippet | None:
        return self._snippets.get(snippet_id)

    def snippets(self) -> list[KnowledgeSnippet]:
        return sorted(self._snippets.values(), key=lambda s: s.snippet_id)

    def add_snippet(self, snippet: KnowledgeSnippet) -> None:
        """Index a snippet under every tag and ILO id it carries."""
        with self._lock:
            if snippet.snippet_id in self._snippets:
                raise DuplicateSnippet(f"snippet id {snippet.snippet_id!r} already stored")
            self._snippets[snippet.snippet_id] = snippet
            for tag in snippet.skill_tags:
                self._by_tag.setdefault(tag, set()).add(snippet.snippet_id)
            for ilo in snippet.ilo_ids:
                self._by_ilo.setdefault(ilo, set()).add(snippet.snippet_id)

    def retrieve(self, query: RetrievalQuery) -> list[tuple[KnowledgeSnippet, float]]:
        """Top-k snippets with score > 0, best first, ties broken by id."""
        candidate_ids: set[str] = set()
        for tag in query.task_skill_tags:
            candidate_ids |= self._by_tag.get(tag, set())
        for ilo in query.weak_ilo_ids:
            candidate_ids |= self._by_ilo.get(ilo, set())

        scored = []
        for snippet_id in candidate_ids:
            snippet = self._snippets[snippet_id]
            s = score(snippet, query, self.tag_weight, self.ilo_weight)
            if s > 0.0:
                scored.append((snippet, s))
        scored.sort(key=lambda pair: (-pair[1], pair[0].snippet_id))
        return scored[: query.k]


def load_snippets_jsonl(path: str | Path) -> list[KnowledgeSnippet]:
    """Bulk-load file: one JSON snippet record per line."""
    snippets = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        snippets.append(
            KnowledgeSnippet(
                snippet_id=raw["snippet_id"],
                subject_code=raw["subject_code"],
                ilo_ids=frozenset(raw["ilo_ids"]),
                skill_tags=frozenset(raw["skill_tags"]),
                body=raw["body"],
            )
        )
    return snippets

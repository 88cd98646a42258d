"""Prompt assembly: tier directives, few-shot exemplars, and rendering.

A tailored prompt has seven sections in fixed order: preamble, portfolio,
knowledge, directives, fewshot, task, response. The untailored baseline
keeps only preamble, task, and response. Directive sets and few-shot
exemplars are instructor data, shipped as files and loaded into a registry
at startup; prompt building is a pure function over that registry.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError, PromptTooLarge
from .knowledge import KnowledgeSnippet
from .portfolio import SkillTier

GENERAL = "general"

SECTION_ORDER = ("preamble", "portfolio", "knowledge", "directives", "fewshot", "task", "response")

DEFAULT_TOKEN_BUDGET = 3000

TAILORED_PREAMBLE = (
    "You are a programming tutor reviewing a student's submission.\n"
    "Use the student profile and the reference material below to shape your reply.\n"
    "Write the feedback as numbered steps, each with a short explanation and, "
    "where useful, a code example.\n"
    "Finish with a section of external links suited to the student's level."
)

GENERAL_PREAMBLE = (
    "You are a programming tutor. Review the student's submission for the task "
    "and reply with feedback on what to fix and what to do next."
)


@dataclass(frozen=True)
class TierDirectiveSet:
    tier: SkillTier
    directives: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.directives:
            raise ConfigurationError(f"directive set for {self.tier.value} is empty")


@dataclass(frozen=True)
class FewShotExample:
    task_statement: str
    student_response: str
    feedback_per_tier: dict[SkillTier, str]

    def __post_init__(self) -> None:
        missing = [t.value for t in SkillTier if t not in self.feedback_per_tier]
        if missing:
            raise ConfigurationError(f"few-shot example missing tiers: {missing}")


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    statement: str
    skill_tags: frozenset[str]
    complexity_rank: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "skill_tags", frozenset(self.skill_tags))
        if not self.skill_tags:
            raise ValueError(f"task {self.task_id!r} needs at least one skill tag")
        if self.complexity_rank < 1:
            raise ValueError("complexity_rank must be >= 1")


@dataclass(frozen=True)
class PromptBundle:
    sections: tuple[tuple[str, str], ...]
    tier: str
    token_estimate: int


def _estimate_tokens(sections: list[tuple[str, str]]) -> int:
    return math.ceil(sum(len(text) for _, text in sections) / 4)


def _knowledge_text(snippets: list[KnowledgeSnippet]) -> str:
    return "\n".join(f"({s.snippet_id}) {s.body}" for s in snippets)


def _fewshot_text(examples: list[FewShotExample], tier: SkillTier) -> str:
    blocks = []
    for ex in examples:
        blocks.append(
            f"Example task: {ex.task_statement}\n"
            f"Example student response:\n{ex.student_response}\n"
            f"Example feedback:\n{ex.feedback_per_tier[tier]}"
        )
    return "\n\n".join(blocks)


def _task_text(task: TaskSpec) -> str:
    return f"Task id: {task.task_id}\n{task.statement}"


@dataclass
class PromptRegistry:
    """Directive sets and few-shot exemplars, replaced atomically on reload."""

    directive_sets: dict[SkillTier, TierDirectiveSet] = field(default_factory=dict)
    fewshot_examples: list[FewShotExample] = field(default_factory=list)
    token_budget: int = DEFAULT_TOKEN_BUDGET

    def directives_for(self, tier: SkillTier) -> TierDirectiveSet:
        try:
            return self.directive_sets[tier]
        except KeyError:
            raise ConfigurationError(f"no directive set registered for tier {tier.value!r}")

    def build_tailored_prompt(
        self,
        task: TaskSpec,
        response_text: str,
        summary: str,
        tier: SkillTier,
        snippets: list[KnowledgeSnippet],
    ) -> PromptBundle:
        """Assemble the full seven-section prompt for a tier.

        Snippets must arrive best-first (retrieval order); under budget
        pressure whole snippets are dropped worst-first, then few-shot
        examples beyond the first. Everything else is non-truncatable.
        """
        directive_set = self.directives_for(tier)
        if not self.fewshot_examples:
            raise ConfigurationError("no few-shot examples registered")

        directives_text = "\n".join(
            f"{i}. {d}" for i, d in enumerate(directive_set.directives, start=1)
        )

        kept_snippets = list(snippets)
        kept_examples = list(self.fewshot_examples)

        def assemble() -> list[tuple[str, str]]:
            return [
                ("preamble", TAILORED_PREAMBLE),
                ("portfolio", summary),
                ("knowledge", _knowledge_text(kept_snippets)),
                ("directives", directives_text),
                ("fewshot", _fewshot_text(kept_examples, tier)),
                ("task", _task_text(task)),
                ("response", response_text),
            ]

        sections = assemble()
        while _estimate_tokens(sections) > self.token_budget and kept_snippets:
            kept_snippets.pop()
            sections = assemble()
        while _estimate_tokens(sections) > self.token_budget and len(kept_examples) > 1:
            kept_examples.pop()
            sections = assemble()
        estimate = _estimate_tokens(sections)
        if estimate > self.token_budget:
            raise PromptTooLarge(
                f"non-truncatable sections estimate {estimate} tokens, "
                f"budget {self.token_budget}"
            )
        return PromptBundle(sections=tuple(sections), tier=tier.value, token_estimate=estimate)

    def build_general_prompt(self, task: TaskSpec, response_text: str) -> PromptBundle:
        """Baseline prompt: no profile, no retrieval, no directives, no examples."""
        sections = [
            ("preamble", GENERAL_PREAMBLE),
            ("task", _task_text(task)),
            ("response", response_text),
        ]
        return PromptBundle(
            sections=tuple(sections), tier=GENERAL, token_estimate=_estimate_tokens(sections)
        )


# -- rendering ----------------------------------------------------------------

_DELIMITER_LINE = re.compile(r"^(\\*)==\[ [a-z]+ \]==$")


def _delimiter(name: str) -> str:
    return f"==[ {name} ]=="


def render(bundle: PromptBundle) -> str:
    """Flatten a bundle to text: each section prefixed by a delimiter line.

    Content lines that would collide with a delimiter are escaped with a
    leading backslash, so parse_rendered() is an exact inverse.
    """
    lines: list[str] = []
    for name, text in bundle.sections:
        lines.append(_delimiter(name))
        for line in text.split("\n"):
            if _DELIMITER_LINE.match(line):
                line = "\\" + line
            lines.append(line)
    return "\n".join(lines)


def parse_rendered(text: str) -> list[tuple[str, str]]:
    """Inverse of render(): recover (section, content) pairs."""
    sections: list[tuple[str, list[str]]] = []
    for line in text.split("\n"):
        match = _DELIMITER_LINE.match(line)
        if match and not match.group(1):
            sections.append((line[4:-4], []))
            continue
        if match:
            line = line[1:]
        if not sections:
            raise ValueError("rendered text does not start with a section delimiter")
        sections[-1][1].append(line)
    return [(name, "\n".join(lines)) for name, lines in sections]


# -- default data -------------------------------------------------------------


def _data_root():
    return resources.files("tutor_engine.data")


def load_directive_file(text: str, tier: SkillTier) -> TierDirectiveSet:
    directives = tuple(line for line in text.splitlines() if line.strip())
    return TierDirectiveSet(tier=tier, directives=directives)


def load_fewshot_payload(raw: dict) -> FewShotExample:
    return FewShotExample(
        task_statement=raw["task_statement"],
        student_response=raw["student_response"],
        feedback_per_tier={
            SkillTier(key): value for key, value in raw["feedback_per_tier"].items()
        },
    )


def load_default_registry(token_budget: int = DEFAULT_TOKEN_BUDGET) -> PromptRegistry:
    """Registry with the shipped directive files and few-shot exemplar."""
    registry = PromptRegistry(token_budget=token_budget)
    for tier in SkillTier:
        text = _data_root().joinpath(f"directives/{tier.value}.txt").read_text("utf-8")
        registry.directive_sets[tier] = load_directive_file(text, tier)
    fewshot_dir = _data_root().joinpath("fewshot")
    for entry in sorted(fewshot_dir.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            registry.fewshot_examples.append(load_fewshot_payload(json.loads(entry.read_text("utf-8"))))
    return registry


def load_tasks_file(path: str | Path) -> list[TaskSpec]:
    """Task registry file: a JSON array of task records."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return [_task_from_raw(entry) for entry in raw]


def _task_from_raw(entry: dict) -> TaskSpec:
    return TaskSpec(
        task_id=entry["task_id"],
        statement=entry["statement"],
        skill_tags=frozenset(entry["skill_tags"]),
        complexity_rank=int(entry.get("complexity_rank", 1)),
    )


def load_default_tasks() -> list[TaskSpec]:
    raw = json.loads(_data_root().joinpath("tasks/default-tasks.json").read_text("utf-8"))
    return [_task_from_raw(entry) for entry in raw]

"""Experiment harness: tasks x (three tiers + general baseline).

For each task and tier the harness picks one representative student of
that tier (lowest id), runs the full tailored pipeline with n sampled
generations, and measures the voted feedback; the general arm runs the
untailored baseline prompt. With the scripted fixture backend the whole
run is deterministic, so exported reports are byte-stable and the ordering
checks always see the same numbers.

Ordering checks encode the qualitative claims the harness is meant to
probe; they are observations, not assertions: a claim that fails is
reported as holds=false, never as an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .consistency import DEFAULT_SIMILARITY_THRESHOLD, run_self_consistency
from .errors import GatewayError, IncompleteReport, MissingTier, TutorError
from .gateway import Gateway, ScriptedBackend
from .knowledge import KnowledgeBase, RetrievalQuery, load_snippets_jsonl
from .metrics import MetricReading, measure
from .cohort import CohortStudent
from .portfolio import SkillTier, summarize_for_prompt, weakest_target_ilo
from .prompting import (
    GENERAL,
    PromptRegistry,
    TaskSpec,
    load_default_registry,
    load_default_tasks,
)

CONDITIONS = (
    SkillTier.BELOW_AVERAGE.value,
    SkillTier.AVERAGE.value,
    SkillTier.ABOVE_AVERAGE.value,
    GENERAL,
)

ORDERING_CLAIMS = ("C1", "C2", "C3", "C4")

# Canned student submissions the harness reviews, one per default task.
SAMPLE_RESPONSES = {
    "task-1": (
        "```\nfrom sklearn.linear_model import LinearRegression\n"
        "import pandas as pd\ndata = pd.read_csv('data.csv')\n"
        "model = LinearRegression()\nmodel.fit(X, y)\n```"
    ),
    "task-2": (
        "```\nfrom sklearn.tree import DecisionTreeClassifier\n"
        "clf = DecisionTreeClassifier()\nclf.fit(data, labels)\n"
        "print(clf.score(data, labels))\n```"
    ),
    "task-3": (
        "```\nfrom sklearn.svm import SVC\nmodel = SVC()\n"
        "model.fit(X, y)\nprint(model.score(X, y))\n```"
    ),
}

_FALLBACK_RESPONSE = "```\n# first attempt\n```\nThis is my attempt so far."


def sample_response(task_id: str) -> str:
    return SAMPLE_RESPONSES.get(task_id, _FALLBACK_RESPONSE)


@dataclass(frozen=True)
class ExperimentPlan:
    tasks: tuple[TaskSpec, ...]
    conditions: tuple[str, ...] = CONDITIONS
    samples_per_task: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if not self.tasks:
            raise ValueError("plan needs at least one task")
        if self.samples_per_task < 1:
            raise ValueError("samples_per_task must be >= 1")


@dataclass(frozen=True)
class ArmReading:
    task_id: str
    condition: str
    status: str  # "ok" | "failed"
    reading: MetricReading | None = None
    error: str | None = None
    student_id: str | None = None
    cluster_size: int | None = None
    vote_n: int | None = None
    retrieved_snippet_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExperimentReport:
    plan_tasks: tuple[str, ...]
    conditions: tuple[str, ...]
    samples_per_task: int
    readings: tuple[ArmReading, ...]
    aggregates: dict = field(default_factory=dict)
    ordering_checks: tuple[tuple[str, bool], ...] = ()


def default_plan(samples_per_task: int = 5) -> ExperimentPlan:
    return ExperimentPlan(
        tasks=tuple(load_default_tasks()), samples_per_task=samples_per_task
    )


def default_knowledge_base() -> KnowledgeBase:
    kb = KnowledgeBase()
    with resources.as_file(
        resources.files("tutor_engine.data").joinpath("snippets/default-snippets.jsonl")
    ) as path:
        for snippet in load_snippets_jsonl(path):
            kb.add_snippet(snippet)
    return kb


def representative_students(
    students: list[CohortStudent], conditions: tuple[str, ...]
) -> dict[str, CohortStudent]:
    """Lowest-id student per tier condition; raises MissingTier when absent."""
    reps: dict[str, CohortStudent] = {}
    for condition in conditions:
        if condition == GENERAL:
            continue
        tier = SkillTier(condition)
        matching = [s for s in students if s.tier() is tier]
        if not matching:
            raise MissingTier(condition)
        reps[condition] = min(matching, key=lambda s: s.student_id)
    return reps


def weak_ilo_ids(student: CohortStudent) -> frozenset[str]:
    """The single weakest target ILO, used to steer retrieval."""
    weakest = weakest_target_ilo(student.portfolio())
    return frozenset() if weakest is None else frozenset({weakest})


def run_experiment(
    plan: ExperimentPlan,
    students: list[CohortStudent],
    gateway: Gateway,
    kb: KnowledgeBase | None = None,
    registry: PromptRegistry | None = None,
    retrieval_k: int = 4,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
    temperature: float | None = None,
) -> ExperimentReport:
    """Run every (task, condition) arm and assemble the report.

    Gateway failures mark the arm failed instead of aborting the run; the
    ordering checks then report what they can (or IncompleteReport is
    recorded as all-false claims when an arm they need is missing).
    """
    kb = kb if kb is not None else default_knowledge_base()
    registry = registry if registry is not None else load_default_registry()
    reps = representative_students(students, plan.conditions)

    readings: list[ArmReading] = []
    for task in plan.tasks:
        for condition in plan.conditions:
            readings.append(
                _run_arm(
                    task, condition, reps, gateway, kb, registry,
                    plan.samples_per_task, retrieval_k, threshold, temperature,
                )
            )

    report = ExperimentReport(
        plan_tasks=tuple(t.task_id for t in plan.tasks),
        conditions=plan.conditions,
        samples_per_task=plan.samples_per_task,
        readings=tuple(readings),
        aggregates=_aggregate(readings),
    )
    try:
        checks = check_orderings(report)
    except IncompleteReport:
        checks = ()
    return ExperimentReport(
        plan_tasks=report.plan_tasks,
        conditions=report.conditions,
        samples_per_task=report.samples_per_task,
        readings=report.readings,
        aggregates=report.aggregates,
        ordering_checks=tuple(checks),
    )


def _run_arm(
    task: TaskSpec,
    condition: str,
    reps: dict[str, CohortStudent],
    gateway: Gateway,
    kb: KnowledgeBase,
    registry: PromptRegistry,
    samples: int,
    retrieval_k: int,
    threshold: float,
    temperature: float | None,
) -> ArmReading:
    response_text = sample_response(task.task_id)
    student_id = None
    retrieved_ids: tuple[str, ...] = ()
    try:
        if condition == GENERAL:
            bundle = registry.build_general_prompt(task, response_text)
        else:
            tier = SkillTier(condition)
            student = reps[condition]
            student_id = student.student_id
            summary = summarize_for_prompt(student.portfolio())
            query = RetrievalQuery(
                task_skill_tags=task.skill_tags,
                weak_ilo_ids=weak_ilo_ids(student),
                tier=tier,
                k=retrieval_k,
            )
            retrieved = kb.retrieve(query)
            retrieved_ids = tuple(s.snippet_id for s, _ in retrieved)
            bundle = registry.build_tailored_prompt(
                task, response_text, summary, tier, [s for s, _ in retrieved]
            )
        round_ = run_self_consistency(
            bundle, samples, gateway, temperature=temperature, threshold=threshold
        )
        reading = measure(round_.vote, condition, task.task_id)
        return ArmReading(
            task_id=task.task_id,
            condition=condition,
            status="ok",
            reading=reading,
            student_id=student_id,
            cluster_size=round_.vote.cluster_size,
            vote_n=round_.vote.n,
            retrieved_snippet_ids=retrieved_ids,
        )
    except (GatewayError, TutorError) as exc:
        return ArmReading(
            task_id=task.task_id,
            condition=condition,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
            student_id=student_id,
            retrieved_snippet_ids=retrieved_ids,
        )


def _aggregate(readings: list[ArmReading]) -> dict:
    aggregates: dict = {}
    for arm in readings:
        bucket = aggregates.setdefault(arm.task_id, {})
        if arm.status == "ok" and arm.reading is not None:
            bucket[arm.condition] = {
                "fkrs": arm.reading.fkrs,
                "response_time_ms": arm.reading.response_time_ms,
                "specificity_sentences": arm.reading.specificity_sentences,
            }
        else:
            bucket[arm.condition] = None
    return aggregates


def check_orderings(report: ExperimentReport) -> list[tuple[str, bool]]:
    """Evaluate the per-task qualitative claims over the report aggregates.

    C1: reading ease of the below-average arm exceeds the general arm.
    C2: every tailored arm responds faster than the general arm.
    C3: response time rises from below-average through above-average.
    C4: specificity falls from below-average through above-average.
    """
    below, avg, above = (
        SkillTier.BELOW_AVERAGE.value,
        SkillTier.AVERAGE.value,
        SkillTier.ABOVE_AVERAGE.value,
    )
    needed = (below, avg, above, GENERAL)
    checks: list[tuple[str, bool]] = []
    for task_id in report.plan_tasks:
        bucket = report.aggregates.get(task_id, {})
        arms = {c: bucket.get(c) for c in needed}
        if any(v is None for v in arms.values()):
            missing = [c for c, v in arms.items() if v is None]
            raise IncompleteReport(f"task {task_id!r} missing arms: {missing}")
        if any(arms[c]["fkrs"] is None for c in needed):
            raise IncompleteReport(f"task {task_id!r} has arms without a readability score")
        rt = {c: arms[c]["response_time_ms"] for c in needed}
        spec = {c: arms[c]["specificity_sentences"] for c in needed}
        checks.append((f"{task_id}:C1", arms[below]["fkrs"] > arms[GENERAL]["fkrs"]))
        checks.append(
            (f"{task_id}:C2", all(rt[c] < rt[GENERAL] for c in (below, avg, above)))
        )
        checks.append((f"{task_id}:C3", rt[below] < rt[avg] < rt[above]))
        checks.append((f"{task_id}:C4", spec[below] > spec[avg] > spec[above]))
    return checks


# -- scripted fixture backend ---------------------------------------------------

_TIER_MARKERS = {
    SkillTier.BELOW_AVERAGE.value: "Identify and describe basic machine learning methods.",
    SkillTier.AVERAGE.value: "Distinguish between different algorithms.",
    SkillTier.ABOVE_AVERAGE.value: "Deeply understand the mathematical foundations",
}

_CONDITION_DELAY_OFFSET = {
    SkillTier.BELOW_AVERAGE.value: 0.0,
    SkillTier.AVERAGE.value: 50.0,
    SkillTier.ABOVE_AVERAGE.value: 100.0,
    GENERAL: 250.0,
}


def fixture_feedback(condition: str) -> str:
    name = f"feedback_fixtures/{condition}.txt"
    return resources.files("tutor_engine.data").joinpath(name).read_text("utf-8")


def scripted_fixture_backend(
    tasks: list[TaskSpec] | None = None, realtime: bool = False
) -> ScriptedBackend:
    """Scripted backend with tiered canned feedback per (task, condition).

    Declared latencies grow with task complexity and embody the expected
    response-time orderings (below < average < above < general). Tier rules
    match on a directive unique to the tier; the general rules, registered
    last, catch prompts with no tier directive.
    """
    tasks = tasks if tasks is not None else load_default_tasks()
    backend = ScriptedBackend(realtime=realtime)
    for task in sorted(tasks, key=lambda t: t.complexity_rank):
        base_delay = 300.0 + 60.0 * task.complexity_rank
        task_marker = f"Task id: {task.task_id}"
        for condition, marker in _TIER_MARKERS.items():
            backend.register_rule(
                contains=(task_marker, marker),
                texts=(fixture_feedback(condition),),
                delay_ms=base_delay + _CONDITION_DELAY_OFFSET[condition],
            )
    for task in sorted(tasks, key=lambda t: t.complexity_rank):
        backend.register_rule(
            contains=(f"Task id: {task.task_id}",),
            texts=(fixture_feedback(GENERAL),),
            delay_ms=300.0 + 60.0 * task.complexity_rank + _CONDITION_DELAY_OFFSET[GENERAL],
        )
    return backend


# -- export ---------------------------------------------------------------------


def _format_cell(value, pattern: str) -> str:
    return "" if value is None else pattern.format(value)


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "plan": {
            "tasks": list(report.plan_tasks),
            "conditions": list(report.conditions),
            "samples_per_task": report.samples_per_task,
        },
        "readings": [
            {
                "task_id": arm.task_id,
                "condition": arm.condition,
                "status": arm.status,
                "error": arm.error,
                "student_id": arm.student_id,
                "cluster_size": arm.cluster_size,
                "vote_n": arm.vote_n,
                "retrieved_snippet_ids": list(arm.retrieved_snippet_ids),
                "fkrs": arm.reading.fkrs if arm.reading else None,
                "response_time_ms": arm.reading.response_time_ms if arm.reading else None,
                "specificity_sentences": (
                    arm.reading.specificity_sentences if arm.reading else None
                ),
                "warnings": list(arm.reading.warnings) if arm.reading else [],
            }
            for arm in report.readings
        ],
        "aggregates": report.aggregates,
        "ordering_checks": [
            {"claim": claim, "holds": holds} for claim, holds in report.ordering_checks
        ],
    }


def export_report(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Write report.json, report.csv, and one plot-data CSV per metric."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    json_path = out / "report.json"
    json_path.write_text(
        json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
    )
    written.append(json_path)

    rows = ["task_id,condition,fkrs,response_time_ms,specificity_sentences,status"]
    for arm in report.readings:
        if arm.status == "ok" and arm.reading is not None:
            fkrs = _format_cell(arm.reading.fkrs, "{:.3f}")
            rt = _format_cell(arm.reading.response_time_ms, "{:.3f}")
            spec = str(arm.reading.specificity_sentences)
        else:
            fkrs = rt = spec = ""
        rows.append(f"{arm.task_id},{arm.condition},{fkrs},{rt},{spec},{arm.status}")
    csv_path = out / "report.csv"
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(csv_path)

    metrics = {
        "plot_fkrs.csv": ("fkrs", "{:.3f}"),
        "plot_response_time.csv": ("response_time_ms", "{:.3f}"),
        "plot_specificity.csv": ("specificity_sentences", "{:d}"),
    }
    for filename, (metric_key, pattern) in metrics.items():
        lines = ["condition," + ",".join(report.plan_tasks)]
        for condition in report.conditions:
            cells = [condition]
            for task_id in report.plan_tasks:
                agg = report.aggregates.get(task_id, {}).get(condition)
                value = agg[metric_key] if agg else None
                cells.append(_format_cell(value, pattern))
            lines.append(",".join(cells))
        path = out / filename
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written

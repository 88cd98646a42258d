"""HTTP facade binding the engine modules into a running tutoring service.

All endpoints live under /api and speak JSON; errors come back as
``{"code", "message", "detail"}``. The built web UI, when present, is
served statically from the root path. State is event-sourced (see store);
restarting the service on the same data directory reproduces every GET
byte for byte.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import EngineConfig
from .consistency import run_self_consistency
from .cohort import CohortSpec, generate_cohort
from .errors import (
    BackendError,
    BatchFailed,
    ConfigurationError,
    DuplicateAssessment,
    DuplicateSnippet,
    EmptyCompletion,
    GatewayTimeout,
    InsufficientData,
    InvalidMark,
    InvalidSnippet,
    PromptTooLarge,
)
from .experiment import (
    ExperimentPlan,
    default_plan,
    export_report,
    report_to_dict,
    run_experiment,
    scripted_fixture_backend,
)
from .gateway import Backend, Gateway, RemoteBackend, ScriptedBackend
from .knowledge import KnowledgeSnippet, RetrievalQuery
from .metrics import interpret_band, measure
from .portfolio import (
    AssessmentRecord,
    StudentPortfolio,
    summarize_for_prompt,
    weakest_target_ilo,
)
from .prompting import TaskSpec, load_default_registry, load_default_tasks
from .store import DuplicateStudent, TutorStore, UnknownStudent, _record_to_dict

MAX_RESPONSE_BYTES = 64 * 1024

_ERROR_STATUS = {
    UnknownStudent: 404,
    DuplicateStudent: 409,
    DuplicateAssessment: 409,
    DuplicateSnippet: 409,
    InsufficientData: 409,
    InvalidMark: 422,
    InvalidSnippet: 422,
    ConfigurationError: 500,
    PromptTooLarge: 502,
    BackendError: 502,
    BatchFailed: 502,
    EmptyCompletion: 502,
    GatewayTimeout: 504,
}

_ERROR_CODES = {
    UnknownStudent: "unknown-student",
    DuplicateStudent: "duplicate-student",
    DuplicateAssessment: "duplicate-assessment",
    DuplicateSnippet: "duplicate-snippet",
    InsufficientData: "insufficient-data",
    InvalidMark: "invalid-mark",
    InvalidSnippet: "invalid-snippet",
    ConfigurationError: "configuration-error",
    PromptTooLarge: "prompt-too-large",
    BackendError: "gateway-error",
    BatchFailed: "gateway-error",
    EmptyCompletion: "gateway-error",
    GatewayTimeout: "gateway-timeout",
}


class StudentBody(BaseModel):
    student_id: str


class AssessmentBody(BaseModel):
    subject_code: str
    assessment_id: str
    kind: str
    mark: float
    recorded_at: str = ""


class FeedbackBody(BaseModel):
    student_id: str
    task_id: str
    response_text: str


class TaskBody(BaseModel):
    task_id: str
    statement: str
    skill_tags: list[str]
    complexity_rank: int = 1


class SnippetBody(BaseModel):
    snippet_id: str
    subject_code: str
    ilo_ids: list[str]
    skill_tags: list[str]
    body: str


class ExperimentBody(BaseModel):
    n: int = 30
    mean: float = 72.0
    std_dev: float = 8.0
    seed: int = 42
    samples_per_task: int = 5


class ExperimentJobs:
    """Single background job slot for experiment runs."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counter = 0
        self.jobs: dict[str, dict] = {}
        self._running: str | None = None

    def start(self, target, *args) -> str:
        """Run target(run_id, *args) on a worker thread; one job at a time."""
        with self._lock:
            if self._running is not None and self.jobs[self._running]["status"] == "running":
                raise ConfigurationError("an experiment is already running")
            self._counter += 1
            run_id = f"run-{self._counter:04d}"
            self.jobs[run_id] = {"run_id": run_id, "status": "running", "report": None}
            self._running = run_id

        def wrapped():
            try:
                report = target(run_id, *args)
                self.jobs[run_id]["report"] = report
                self.jobs[run_id]["status"] = "completed"
            except Exception as exc:
                self.jobs[run_id]["status"] = "failed"
                self.jobs[run_id]["error"] = f"{type(exc).__name__}: {exc}"

        threading.Thread(target=wrapped, daemon=True).start()
        return run_id


def _portfolio_body(portfolio: StudentPortfolio) -> dict:
    try:
        tier = portfolio.derive_tier().value
        summary = summarize_for_prompt(portfolio)
    except InsufficientData:
        tier, summary = None, None
    return {
        "student_id": portfolio.student_id,
        "tier": tier,
        "failed_prerequisite": portfolio.failed_prerequisite,
        "records": [_record_to_dict(r) for r in portfolio.all_records()],
        "summary": summary,
    }


def create_app(
    config: EngineConfig | None = None, backend: Backend | None = None
) -> FastAPI:
    config = config or EngineConfig()
    app = FastAPI(title="tutor-engine", version="0.1.0")

    if backend is None:
        if config.backend == "remote":
            backend = RemoteBackend(
                url=config.llm_url or "",
                model=config.llm_model or "default",
                api_key=config.llm_key,
                timeout_s=config.timeout_s,
            )
        elif config.scripted_dir:
            backend = ScriptedBackend.from_dir(config.scripted_dir)
        else:
            # Default scripted backend: fixture rules plus deterministic fallback.
            backend = scripted_fixture_backend()

    gateway = Gateway(backend, deadline_s=config.timeout_s, parallelism=config.parallelism)
    registry = load_default_registry(token_budget=config.token_budget)

    from .experiment import default_knowledge_base

    store = TutorStore(
        config.data_dir,
        default_snippets=default_knowledge_base().snippets(),
        snapshot_interval=config.snapshot_interval,
    )
    store.kb.tag_weight = config.retrieval_tag_weight
    store.kb.ilo_weight = config.retrieval_ilo_weight

    tasks: dict[str, TaskSpec] = {t.task_id: t for t in load_default_tasks()}
    tasks_file = Path(config.data_dir) / "tasks.jsonl"
    if tasks_file.exists():
        for line in tasks_file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                raw = json.loads(line)
                task = TaskSpec(
                    task_id=raw["task_id"],
                    statement=raw["statement"],
                    skill_tags=frozenset(raw["skill_tags"]),
                    complexity_rank=int(raw.get("complexity_rank", 1)),
                )
                tasks[task.task_id] = task

    jobs = ExperimentJobs()
    app.state.config = config
    app.state.store = store
    app.state.gateway = gateway
    app.state.registry = registry
    app.state.tasks = tasks
    app.state.jobs = jobs

    def error_body(code: str, message: str, detail: str = "") -> dict:
        return {"code": code, "message": message, "detail": detail}

    def _register_handler(klass: type, status: int, code: str) -> None:
        @app.exception_handler(klass)
        async def handler(request: Request, exc: Exception, status=status, code=code):
            return JSONResponse(status_code=status, content=error_body(code, str(exc)))

    for klass, status in _ERROR_STATUS.items():
        _register_handler(klass, status, _ERROR_CODES[klass])

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content=error_body("invalid-request", "request body failed validation", str(exc)),
        )

    # -- students ---------------------------------------------------------------

    @app.post("/api/students", status_code=201)
    def create_student(body: StudentBody):
        if not body.student_id.strip():
            return JSONResponse(
                status_code=422,
                content=error_body("invalid-request", "student_id must be nonempty"),
            )
        portfolio = store.create_student(body.student_id)
        return _portfolio_body(portfolio)

    @app.put("/api/students/{student_id}/assessments")
    def put_assessment(student_id: str, body: AssessmentBody):
        record = AssessmentRecord(
            subject_code=body.subject_code,
            assessment_id=body.assessment_id,
            kind=body.kind,
            mark=body.mark,
            recorded_at=body.recorded_at,
        )
        with store.student_lock(student_id):
            portfolio = store.record_assessment(student_id, record)
        return _portfolio_body(portfolio)

    @app.get("/api/students/{student_id}/portfolio")
    def get_portfolio(student_id: str):
        return _portfolio_body(store.portfolio(student_id))

    @app.get("/api/students/{student_id}/feedback-history")
    def get_history(student_id: str):
        return {"student_id": student_id, "history": store.history(student_id)}

    # -- feedback pipeline --------------------------------------------------------

    @app.post("/api/feedback")
    def post_feedback(body: FeedbackBody):
        if len(body.response_text.encode("utf-8")) > MAX_RESPONSE_BYTES:
            return JSONResponse(
                status_code=422,
                content=error_body("invalid-request", "response_text exceeds 64 KiB"),
            )
        task = tasks.get(body.task_id)
        if task is None:
            return JSONResponse(
                status_code=404,
                content=error_body("unknown-task", f"no task {body.task_id!r}"),
            )
        portfolio = store.portfolio(body.student_id)
        tier = portfolio.derive_tier()  # InsufficientData -> 409
        summary = summarize_for_prompt(portfolio)

        weakest = weakest_target_ilo(portfolio)
        query = RetrievalQuery(
            task_skill_tags=task.skill_tags,
            weak_ilo_ids=frozenset() if weakest is None else frozenset({weakest}),
            tier=tier,
            k=config.retrieval_k,
        )
        retrieved = store.kb.retrieve(query)
        snippets = [s for s, _ in retrieved]

        bundle = registry.build_tailored_prompt(
            task, body.response_text, summary, tier, snippets
        )
        round_ = run_self_consistency(
            bundle,
            config.self_consistency_n,
            gateway,
            temperature=config.temperature,
            max_output_tokens=config.max_output_tokens,
            threshold=config.similarity_threshold,
        )
        reading = measure(round_.vote, tier, task.task_id)
        envelope = {
            "student_id": body.student_id,
            "task_id": task.task_id,
            "feedback_text": round_.vote.chosen,
            "tier_used": tier.value,
            "metrics": {
                "fkrs": reading.fkrs,
                "band": interpret_band(reading.fkrs) if reading.fkrs is not None else None,
                "response_time_ms": reading.response_time_ms,
                "specificity_sentences": reading.specificity_sentences,
                "warnings": list(reading.warnings),
            },
            "vote": {"cluster_size": round_.vote.cluster_size, "n": round_.vote.n},
            "retrieved_snippet_ids": [s.snippet_id for s in snippets],
            "warnings": list(round_.warnings),
        }
        with store.student_lock(body.student_id):
            store.issue_feedback(body.student_id, envelope)
        return envelope

    # -- cohort and admin -----------------------------------------------------------

    @app.get("/api/cohort/summary")
    def cohort_summary():
        histogram: dict[str, int] = {}
        tier_marks: dict[str, list[float]] = {}
        uncategorizable = 0
        for portfolio in list(store.portfolios.values()):
            try:
                tier = portfolio.derive_tier().value
            except InsufficientData:
                uncategorizable += 1
                continue
            histogram[tier] = histogram.get(tier, 0) + 1
            marks = portfolio.categorizable_marks()
            tier_marks.setdefault(tier, []).append(sum(sorted(marks)) / len(marks))
        return {
            "students": len(store.portfolios),
            "tiers": {k: histogram.get(k, 0) for k in ("below-average", "average", "above-average")},
            "mean_mark_by_tier": {
                tier: round(sum(sorted(values)) / len(values), 2)
                for tier, values in sorted(tier_marks.items())
            },
            "uncategorizable": uncategorizable,
        }

    @app.post("/api/tasks", status_code=201)
    def post_task(body: TaskBody):
        if body.task_id in tasks:
            return JSONResponse(
                status_code=409,
                content=error_body("duplicate-task", f"task {body.task_id!r} exists"),
            )
        task = TaskSpec(
            task_id=body.task_id,
            statement=body.statement,
            skill_tags=frozenset(body.skill_tags),
            complexity_rank=body.complexity_rank,
        )
        tasks[task.task_id] = task
        with tasks_file.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "task_id": task.task_id,
                        "statement": task.statement,
                        "skill_tags": sorted(task.skill_tags),
                        "complexity_rank": task.complexity_rank,
                    }
                )
                + "\n"
            )
        return {"task_id": task.task_id, "statement": task.statement}

    @app.post("/api/knowledge/snippets", status_code=201)
    def post_snippet(body: SnippetBody):
        snippet = KnowledgeSnippet(
            snippet_id=body.snippet_id,
            subject_code=body.subject_code,
            ilo_ids=frozenset(body.ilo_ids),
            skill_tags=frozenset(body.skill_tags),
            body=body.body,
        )
        store.add_snippet(snippet)
        return {"snippet_id": snippet.snippet_id}

    # -- experiments ------------------------------------------------------------------

    @app.post("/api/experiments", status_code=202)
    def post_experiment(body: ExperimentBody):
        spec = CohortSpec(n=body.n, mean=body.mean, std_dev=body.std_dev, seed=body.seed)
        students = generate_cohort(spec)
        plan = default_plan(samples_per_task=body.samples_per_task)

        def run(run_id: str, plan: ExperimentPlan, students):
            experiment_gateway = gateway
            if config.backend != "remote":
                experiment_gateway = Gateway(
                    scripted_fixture_backend(list(plan.tasks)),
                    deadline_s=config.timeout_s,
                    parallelism=config.parallelism,
                )
            report = run_experiment(
                plan,
                students,
                experiment_gateway,
                retrieval_k=config.retrieval_k,
                threshold=config.similarity_threshold,
                temperature=config.temperature,
            )
            export_report(report, Path(config.data_dir) / "experiments" / run_id)
            return report_to_dict(report)

        try:
            run_id = jobs.start(run, plan, students)
        except ConfigurationError as exc:
            return JSONResponse(
                status_code=409, content=error_body("experiment-running", str(exc))
            )
        return {"run_id": run_id, "status": "running"}

    @app.get("/api/experiments/{run_id}")
    def get_experiment(run_id: str):
        job = jobs.jobs.get(run_id)
        if job is None:
            return JSONResponse(
                status_code=404,
                content=error_body("unknown-run", f"no experiment run {run_id!r}"),
            )
        body = {"run_id": run_id, "status": job["status"]}
        if job["status"] == "completed":
            body["report"] = job["report"]
        if job["status"] == "failed":
            body["error"] = job.get("error", "")
        return body

    # -- static UI --------------------------------------------------------------------

    ui_dir = config.ui_dir or "frontend/dist"
    if Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def load_records_jsonl(path: str | Path) -> list[AssessmentRecord]:
    """Portfolio import file: one JSON assessment record per line."""
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            raw = json.loads(line)
            records.append(
                AssessmentRecord(
                    subject_code=raw["subject_code"],
                    assessment_id=raw["assessment_id"],
                    kind=raw["kind"],
                    mark=float(raw["mark"]),
                    recorded_at=raw.get("recorded_at", ""),
                )
            )
    return records

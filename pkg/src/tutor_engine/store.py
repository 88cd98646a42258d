"""Durable state: append-only JSONL event log with periodic snapshots.

Every write the service accepts becomes one event; the in-memory state is
a pure fold over the log, so restarting from disk reproduces it exactly.
Snapshots only shortcut replay, they never hold information the log does
not. The log has a single serialized writer; reads are lock-free over
immutable values.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import DuplicateAssessment, DuplicateSnippet, TutorError
from .knowledge import KnowledgeBase, KnowledgeSnippet
from .portfolio import AssessmentKind, AssessmentRecord, StudentPortfolio

EVENT_KINDS = (
    "student-created",
    "assessment-recorded",
    "snippet-added",
    "feedback-issued",
)


class DuplicateStudent(TutorError):
    """Student id already exists."""


class UnknownStudent(TutorError):
    """No student with that id."""


@dataclass(frozen=True)
class EventRecord:
    sequence: int
    kind: str
    payload: dict
    at: str

    def to_json(self) -> str:
        return json.dumps(
            {"sequence": self.sequence, "kind": self.kind, "payload": self.payload, "at": self.at},
            separators=(",", ":"),
        )


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _record_to_dict(record: AssessmentRecord) -> dict:
    return {
        "subject_code": record.subject_code,
        "assessment_id": record.assessment_id,
        "kind": record.kind.value,
        "mark": record.mark,
        "recorded_at": record.recorded_at,
    }


def _record_from_dict(raw: dict) -> AssessmentRecord:
    return AssessmentRecord(
        subject_code=raw["subject_code"],
        assessment_id=raw["assessment_id"],
        kind=AssessmentKind(raw["kind"]),
        mark=float(raw["mark"]),
        recorded_at=raw.get("recorded_at", ""),
    )


def _snippet_to_dict(snippet: KnowledgeSnippet) -> dict:
    return {
        "snippet_id": snippet.snippet_id,
        "subject_code": snippet.subject_code,
        "ilo_ids": sorted(snippet.ilo_ids),
        "skill_tags": sorted(snippet.skill_tags),
        "body": snippet.body,
    }


def _snippet_from_dict(raw: dict) -> KnowledgeSnippet:
    return KnowledgeSnippet(
        snippet_id=raw["snippet_id"],
        subject_code=raw["subject_code"],
        ilo_ids=frozenset(raw["ilo_ids"]),
        skill_tags=frozenset(raw["skill_tags"]),
        body=raw["body"],
    )


class TutorStore:
    """Event-sourced store for students, snippets, and issued feedback."""

    def __init__(
        self,
        data_dir: str | Path,
        default_snippets: list[KnowledgeSnippet] | None = None,
        snapshot_interval: int = 50,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.events_path = self.data_dir / "events.jsonl"
        self.snapshot_path = self.data_dir / "snapshot.json"
        self.snapshot_interval = max(1, snapshot_interval)
        self._default_snippets = list(default_snippets or [])

        self._write_lock = threading.Lock()
        self._student_locks: dict[str, threading.Lock] = {}
        self._sequence = 0

        self.portfolios: dict[str, StudentPortfolio] = {}
        self.kb = KnowledgeBase()
        self.feedback_history: dict[str, list[dict]] = {}
        self._event_snippet_ids: list[str] = []

        self._recover()

    # -- recovery -------------------------------------------------------------

    def _recover(self) -> None:
        for snippet in self._default_snippets:
            if self.kb.get(snippet.snippet_id) is None:
                self.kb.add_snippet(snippet)
        snapshot_seq = self._load_snapshot()
        if self.events_path.exists():
            for line in self.events_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                raw = json.loads(line)
                event = EventRecord(
                    sequence=raw["sequence"], kind=raw["kind"],
                    payload=raw["payload"], at=raw["at"],
                )
                self._sequence = max(self._sequence, event.sequence)
                if event.sequence > snapshot_seq:
                    self._apply(event)

    def _load_snapshot(self) -> int:
        if not self.snapshot_path.exists():
            return 0
        snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
        for row in snap["students"]:
            self.portfolios[row["student_id"]] = StudentPortfolio(
                student_id=row["student_id"],
                prior_records=tuple(_record_from_dict(r) for r in row["prior_records"]),
                progress_records=tuple(_record_from_dict(r) for r in row["progress_records"]),
            )
        for raw in snap["snippets"]:
            snippet = _snippet_from_dict(raw)
            self._event_snippet_ids.append(snippet.snippet_id)
            if self.kb.get(snippet.snippet_id) is None:
                self.kb.add_snippet(snippet)
        self.feedback_history = {
            key: list(value) for key, value in snap["feedback_history"].items()
        }
        self._sequence = snap["sequence"]
        return snap["sequence"]

    def _write_snapshot(self) -> None:
        snap = {
            "sequence": self._sequence,
            "students": [
                {
                    "student_id": p.student_id,
                    "prior_records": [_record_to_dict(r) for r in p.prior_records],
                    "progress_records": [_record_to_dict(r) for r in p.progress_records],
                }
                for p in sorted(self.portfolios.values(), key=lambda p: p.student_id)
            ],
            "snippets": [
                _snippet_to_dict(self.kb.get(sid))
                for sid in self._event_snippet_ids
                if self.kb.get(sid) is not None
            ],
            "feedback_history": self.feedback_history,
        }
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(snap, indent=2) + "\n", encoding="utf-8")
        tmp.replace(self.snapshot_path)

    # -- event machinery --------------------------------------------------------

    def _append(self, kind: str, payload: dict) -> EventRecord:
        assert kind in EVENT_KINDS
        with self._write_lock:
            self._sequence += 1
            event = EventRecord(sequence=self._sequence, kind=kind, payload=payload, at=_now())
            with self.events_path.open("a", encoding="utf-8") as fh:
                fh.write(event.to_json() + "\n")
            self._apply(event)
            if self._sequence % self.snapshot_interval == 0:
                self._write_snapshot()
            return event

    def _apply(self, event: EventRecord) -> None:
        payload = event.payload
        if event.kind == "student-created":
            student_id = payload["student_id"]
            self.portfolios[student_id] = StudentPortfolio(student_id=student_id)
        elif event.kind == "assessment-recorded":
            student_id = payload["student_id"]
            record = _record_from_dict(payload["record"])
            self.portfolios[student_id] = self.portfolios[student_id].record_assessment(record)
        elif event.kind == "snippet-added":
            snippet = _snippet_from_dict(payload["snippet"])
            self._event_snippet_ids.append(snippet.snippet_id)
            self.kb.add_snippet(snippet)
        elif event.kind == "feedback-issued":
            student_id = payload["student_id"]
            entry = dict(payload["envelope"])
            entry["issued_at"] = event.at
            entry["sequence"] = event.sequence
            self.feedback_history.setdefault(student_id, []).append(entry)

    def student_lock(self, student_id: str) -> threading.Lock:
        with self._write_lock:
            return self._student_locks.setdefault(student_id, threading.Lock())

    # -- commands ----------------------------------------------------------------

    def create_student(self, student_id: str) -> StudentPortfolio:
        if student_id in self.portfolios:
            raise DuplicateStudent(f"student {student_id!r} already exists")
        self._append("student-created", {"student_id": student_id})
        return self.portfolios[student_id]

    def record_assessment(self, student_id: str, record: AssessmentRecord) -> StudentPortfolio:
        portfolio = self.portfolio(student_id)
        if any(r.key == record.key for r in portfolio.all_records()):
            raise DuplicateAssessment(f"duplicate assessment key {record.key!r}")
        self._append(
            "assessment-recorded",
            {"student_id": student_id, "record": _record_to_dict(record)},
        )
        return self.portfolios[student_id]

    def add_snippet(self, snippet: KnowledgeSnippet) -> None:
        if self.kb.get(snippet.snippet_id) is not None:
            raise DuplicateSnippet(f"snippet id {snippet.snippet_id!r} already stored")
        self._append("snippet-added", {"snippet": _snippet_to_dict(snippet)})

    def issue_feedback(self, student_id: str, envelope: dict) -> EventRecord:
        self.portfolio(student_id)  # must exist
        return self._append(
            "feedback-issued", {"student_id": student_id, "envelope": envelope}
        )

    # -- queries ------------------------------------------------------------------

    def portfolio(self, student_id: str) -> StudentPortfolio:
        try:
            return self.portfolios[student_id]
        except KeyError:
            raise UnknownStudent(f"no student {student_id!r}")

    def history(self, student_id: str) -> list[dict]:
        self.portfolio(student_id)
        return list(self.feedback_history.get(student_id, []))

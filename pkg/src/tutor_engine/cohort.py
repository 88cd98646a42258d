"""Synthetic cohort generation with a fixed, portable random algorithm.

Marks are drawn from Normal(mean, std_dev), clipped to [0, 100] and rounded
to one decimal (round-half-even). The generator is pinned down to the bit
so any implementation can reproduce a cohort from its seed:

* stream: splitmix64 over the seed; each step yields a uniform double in
  [0, 1) from the top 53 bits (``(z >> 11) * 2**-53``, zero replaced by
  2**-53);
* normals: Box-Muller: ``r = sqrt(-2 ln u1)``; ``z0 = r cos(2 pi u2)`` is
  used first and ``z1 = r sin(2 pi u2)`` is cached for the next draw;
* draw order: students in index order; per student, one mark per
  prerequisite subject (listed order), then one per progress week.

Record timestamps are fixed offsets from a constant base date, so a cohort
file is byte-identical across runs and machines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .portfolio import (
    AssessmentKind,
    AssessmentRecord,
    IloMapping,
    SkillTier,
    StudentPortfolio,
)

_MASK64 = (1 << 64) - 1
_BASE_DATE = datetime(2025, 2, 3, tzinfo=timezone.utc)


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class NormalSource:
    """Box-Muller normals over a splitmix64 uniform stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare: float | None = None

    def _uniform(self) -> float:
        self._state, z = _splitmix64(self._state)
        u = (z >> 11) * 2.0**-53
        return u if u > 0.0 else 2.0**-53

    def next(self, mean: float, std_dev: float) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
        else:
            u1, u2 = self._uniform(), self._uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare = r * math.sin(2.0 * math.pi * u2)
        return mean + std_dev * z


@dataclass(frozen=True)
class CohortSpec:
    n: int = 30
    mean: float = 72.0
    std_dev: float = 8.0
    seed: int = 42
    prerequisite_subjects: tuple[str, ...] = ("C108", "C205")
    target_subject: str = "C315"
    progress_weeks: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "prerequisite_subjects", tuple(self.prerequisite_subjects))
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.std_dev <= 0:
            raise ValueError("std_dev must be > 0")


def default_ilo_mappings(spec: CohortSpec) -> tuple[IloMapping, ...]:
    """Standard prerequisite-to-target ILO links for generated portfolios."""
    prereqs = spec.prerequisite_subjects
    target = spec.target_subject
    if not prereqs:
        return ()
    mappings = [
        IloMapping(f"{p}-ILO1", f"{target}-ILO1", 1.0 / len(prereqs)) for p in prereqs
    ]
    if len(prereqs) == 1:
        mappings.append(IloMapping(f"{prereqs[0]}-ILO2", f"{target}-ILO2", 1.0))
    else:
        mappings.append(IloMapping(f"{prereqs[0]}-ILO2", f"{target}-ILO2", 0.7))
        rest = 0.3 / (len(prereqs) - 1)
        mappings.extend(
            IloMapping(f"{p}-ILO2", f"{target}-ILO2", rest) for p in prereqs[1:]
        )
    mappings.append(IloMapping(f"{prereqs[-1]}-ILO3", f"{target}-ILO3", 1.0))
    return tuple(mappings)


@dataclass(frozen=True)
class CohortStudent:
    student_id: str
    records: tuple[AssessmentRecord, ...]
    ilo_mappings: tuple[IloMapping, ...] = ()

    def portfolio(self) -> StudentPortfolio:
        prior = tuple(
            r for r in self.records if r.kind is AssessmentKind.PREREQUISITE_FINAL
        )
        progress = tuple(
            r for r in self.records if r.kind is not AssessmentKind.PREREQUISITE_FINAL
        )
        return StudentPortfolio(
            student_id=self.student_id,
            prior_records=prior,
            progress_records=progress,
            ilo_mappings=self.ilo_mappings,
        )

    def tier(self) -> SkillTier | None:
        from .errors import InsufficientData

        try:
            return self.portfolio().derive_tier()
        except InsufficientData:
            return None


def _clip_round(value: float) -> float:
    return round(min(100.0, max(0.0, value)), 1)


def _timestamp(days: int) -> str:
    return (_BASE_DATE + timedelta(days=days)).strftime("%Y-%m-%dT%H:%M:%SZ")


def generate_cohort(spec: CohortSpec) -> list[CohortStudent]:
    """Deterministic cohort: marks, records, and portfolios from one seed."""
    source = NormalSource(spec.seed)
    width = max(2, len(str(spec.n)))
    mappings = default_ilo_mappings(spec)
    students = []
    for index in range(spec.n):
        student_id = f"S{index + 1:0{width}d}"
        records = []
        for subject in spec.prerequisite_subjects:
            records.append(
                AssessmentRecord(
                    subject_code=subject,
                    assessment_id="final",
                    kind=AssessmentKind.PREREQUISITE_FINAL,
                    mark=_clip_round(source.next(spec.mean, spec.std_dev)),
                    recorded_at=_timestamp(0),
                )
            )
        for week in range(1, spec.progress_weeks + 1):
            records.append(
                AssessmentRecord(
                    subject_code=spec.target_subject,
                    assessment_id=f"week{week}-quiz",
                    kind=AssessmentKind.QUIZ,
                    mark=_clip_round(source.next(spec.mean, spec.std_dev)),
                    recorded_at=_timestamp(7 * week),
                )
            )
        students.append(
            CohortStudent(
                student_id=student_id, records=tuple(records), ilo_mappings=mappings
            )
        )
    return students


# -- serialization -------------------------------------------------------------


def cohort_to_dict(spec: CohortSpec, students: list[CohortStudent]) -> dict:
    student_rows = []
    for student in students:
        portfolio = student.portfolio()
        tier = student.tier()
        marks = portfolio.categorizable_marks()
        mean_mark = round(sum(sorted(marks)) / len(marks), 2) if marks else None
        student_rows.append(
            {
                "student_id": student.student_id,
                "tier": tier.value if tier else None,
                "mean_mark": mean_mark,
                "failed_prerequisite": portfolio.failed_prerequisite,
                "records": [
                    {
                        "subject_code": r.subject_code,
                        "assessment_id": r.assessment_id,
                        "kind": r.kind.value,
                        "mark": r.mark,
                        "recorded_at": r.recorded_at,
                    }
                    for r in student.records
                ],
            }
        )
    return {
        "spec": {
            "n": spec.n,
            "mean": spec.mean,
            "std_dev": spec.std_dev,
            "seed": spec.seed,
            "prerequisite_subjects": list(spec.prerequisite_subjects),
            "target_subject": spec.target_subject,
            "progress_weeks": spec.progress_weeks,
        },
        "students": student_rows,
    }


def cohort_to_json(spec: CohortSpec, students: list[CohortStudent]) -> str:
    return json.dumps(cohort_to_dict(spec, students), indent=2) + "\n"


def spec_from_dict(raw: dict) -> CohortSpec:
    return CohortSpec(
        n=int(raw.get("n", 30)),
        mean=float(raw.get("mean", 72.0)),
        std_dev=float(raw.get("std_dev", 8.0)),
        seed=int(raw.get("seed", 42)),
        prerequisite_subjects=tuple(raw.get("prerequisite_subjects", ("C108", "C205"))),
        target_subject=raw.get("target_subject", "C315"),
        progress_weeks=int(raw.get("progress_weeks", 2)),
    )


def load_cohort(path: str | Path) -> tuple[CohortSpec, list[CohortStudent]]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    spec = spec_from_dict(raw["spec"])
    mappings = default_ilo_mappings(spec)
    students = []
    for row in raw["students"]:
        records = tuple(
            AssessmentRecord(
                subject_code=rec["subject_code"],
                assessment_id=rec["assessment_id"],
                kind=AssessmentKind(rec["kind"]),
                mark=float(rec["mark"]),
                recorded_at=rec.get("recorded_at", ""),
            )
            for rec in row["records"]
        )
        students.append(
            CohortStudent(
                student_id=row["student_id"], records=records, ilo_mappings=mappings
            )
        )
    return spec, students

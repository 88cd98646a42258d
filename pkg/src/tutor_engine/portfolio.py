"""Student portfolios: marks, skill tiers, and the prompt-facing summary.

A portfolio collects assessment records from prerequisite subjects and the
target subject. The skill tier is always recomputed from the records on
read; nothing tier-related is cached. Marks below the pass mark of 50 set
the ``failed_prerequisite`` flag and are excluded from the tier mean, so a
single failed prerequisite does not make the whole portfolio unusable.

Tier boundaries (percentage marks):

    below-average  [50, 65)
    average        [65, 80]
    above-average  (80, 100]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    DuplicateAssessment,
    FailedPrerequisite,
    InsufficientData,
    InvalidIloMapping,
    InvalidMark,
)

PASS_MARK = 50.0
SUMMARY_WORD_CAP = 400


class SkillTier(str, Enum):
    BELOW_AVERAGE = "below-average"
    AVERAGE = "average"
    ABOVE_AVERAGE = "above-average"


class AssessmentKind(str, Enum):
    PREREQUISITE_FINAL = "prerequisite-final"
    TUTORIAL = "tutorial"
    QUIZ = "quiz"
    ASSIGNMENT = "assignment"


def categorize(mark: float) -> SkillTier:
    """Map a passing mark to its skill tier.

    Raises FailedPrerequisite for marks below 50 (the caller decides how to
    handle a failed prerequisite) and InvalidMark outside [0, 100].
    """
    if not 0.0 <= mark <= 100.0 or math.isnan(mark):
        raise InvalidMark(f"mark {mark!r} outside [0, 100]")
    if mark < PASS_MARK:
        raise FailedPrerequisite(f"mark {mark} is below the pass mark of {PASS_MARK}")
    if mark < 65.0:
        return SkillTier.BELOW_AVERAGE
    if mark <= 80.0:
        return SkillTier.AVERAGE
    return SkillTier.ABOVE_AVERAGE


@dataclass(frozen=True)
class AssessmentRecord:
    subject_code: str
    assessment_id: str
    kind: AssessmentKind
    mark: float
    recorded_at: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", AssessmentKind(self.kind))
        if not self.subject_code or not self.assessment_id:
            raise InvalidMark("subject_code and assessment_id must be nonempty")
        mark = float(self.mark)
        if math.isnan(mark) or not 0.0 <= mark <= 100.0:
            raise InvalidMark(f"mark {self.mark!r} outside [0, 100]")
        object.__setattr__(self, "mark", mark)

    @property
    def key(self) -> tuple[str, str]:
        return (self.subject_code, self.assessment_id)


@dataclass(frozen=True)
class IloMapping:
    """Weighted link from a prerequisite ILO to a target-subject ILO."""

    prerequisite_ilo: str
    target_ilo: str
    weight: float

    def __post_init__(self) -> None:
        if not 0.0 < self.weight <= 1.0:
            raise InvalidIloMapping(
                f"weight {self.weight!r} for {self.prerequisite_ilo} -> "
                f"{self.target_ilo} must be in (0, 1]"
            )


def _check_mapping_weights(mappings: tuple[IloMapping, ...]) -> None:
    totals: dict[str, float] = {}
    for m in mappings:
        totals[m.target_ilo] = totals.get(m.target_ilo, 0.0) + m.weight
    for target, total in totals.items():
        if total > 1.0 + 1e-9:
            raise InvalidIloMapping(
                f"weights into target ILO {target!r} sum to {total}, above 1"
            )


@dataclass(frozen=True)
class StudentPortfolio:
    """Immutable per-student record set; mutation returns a new value."""

    student_id: str
    prior_records: tuple[AssessmentRecord, ...] = ()
    progress_records: tuple[AssessmentRecord, ...] = ()
    ilo_mappings: tuple[IloMapping, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "prior_records", tuple(self.prior_records))
        object.__setattr__(self, "progress_records", tuple(self.progress_records))
        object.__setattr__(self, "ilo_mappings", tuple(self.ilo_mappings))
        seen: set[tuple[str, str]] = set()
        for rec in self.all_records():
            if rec.key in seen:
                raise DuplicateAssessment(f"duplicate assessment key {rec.key!r}")
            seen.add(rec.key)
        _check_mapping_weights(self.ilo_mappings)

    def all_records(self) -> tuple[AssessmentRecord, ...]:
        return self.prior_records + self.progress_records

    @property
    def failed_prerequisite(self) -> bool:
        """True when any recorded mark fell below the pass mark."""
        return any(rec.mark < PASS_MARK for rec in self.all_records())

    def record_assessment(self, record: AssessmentRecord) -> "StudentPortfolio":
        """Append a record, returning a new portfolio; existing records never change."""
        if any(rec.key == record.key for rec in self.all_records()):
            raise DuplicateAssessment(f"duplicate assessment key {record.key!r}")
        if record.kind is AssessmentKind.PREREQUISITE_FINAL:
            return replace(self, prior_records=self.prior_records + (record,))
        return replace(self, progress_records=self.progress_records + (record,))

    def categorizable_marks(self) -> list[float]:
        return [rec.mark for rec in self.all_records() if rec.mark >= PASS_MARK]

    def derive_tier(self) -> SkillTier:
        """Skill tier from the equal-weight mean of all passing marks.

        Prerequisite and in-semester marks count the same; failed marks are
        excluded (they only set the failed_prerequisite flag).
        """
        marks = self.categorizable_marks()
        if not marks:
            raise InsufficientData(
                f"portfolio {self.student_id!r} has no categorizable marks"
            )
        # Summing in sorted order keeps the mean independent of record order.
        mean = sum(sorted(marks)) / len(marks)
        return categorize(mean)


# -- prompt summary ----------------------------------------------------------


def _prereq_ilo_subject(ilo_id: str) -> str:
    # Convention: prerequisite ILO ids are "<subject>-<ilo>", e.g. "C108-ILO1".
    return ilo_id.split("-", 1)[0]


def _subject_means(records: tuple[AssessmentRecord, ...]) -> dict[str, tuple[float, int]]:
    sums: dict[str, list[float]] = {}
    for rec in records:
        sums.setdefault(rec.subject_code, []).append(rec.mark)
    return {
        subject: (sum(sorted(marks)) / len(marks), len(marks))
        for subject, marks in sums.items()
    }


def ilo_achievements(portfolio: StudentPortfolio) -> dict[str, float]:
    """Weighted achievement per target ILO, from prerequisite-subject means.

    A prerequisite ILO inherits the mean mark of its subject (matched by the
    "<subject>-..." id prefix); when no subject matches, the overall
    prerequisite mean is used. Target achievement is the weight-normalized
    mean over its incoming mappings.
    """
    prior_means = _subject_means(portfolio.prior_records)
    overall = None
    if portfolio.prior_records:
        marks = [rec.mark for rec in portfolio.prior_records]
        overall = sum(sorted(marks)) / len(marks)

    per_target: dict[str, list[tuple[float, float]]] = {}
    for m in portfolio.ilo_mappings:
        subject = _prereq_ilo_subject(m.prerequisite_ilo)
        if subject in prior_means:
            achievement = prior_means[subject][0]
        elif overall is not None:
            achievement = overall
        else:
            continue
        per_target.setdefault(m.target_ilo, []).append((m.weight, achievement))

    result: dict[str, float] = {}
    for target, pairs in per_target.items():
        den = sum(w for w, _ in pairs)
        num = sum(w * a for w, a in pairs)
        result[target] = num / den
    return result


def weakest_target_ilo(portfolio: StudentPortfolio) -> str | None:
    """Target ILO with the lowest mapped achievement, or None if unmapped."""
    achievements = ilo_achievements(portfolio)
    if not achievements:
        return None
    return min(achievements.items(), key=lambda item: (item[1], item[0]))[0]


def summarize_for_prompt(portfolio: StudentPortfolio) -> str:
    """Deterministic plain-text profile block for prompt assembly.

    Contains the tier name, per-subject mean marks, and the weakest target
    ILO. Capped at 400 words (subject lines are dropped last-first if ever
    needed) so the prompt budget stays predictable.
    """
    tier = portfolio.derive_tier()
    marks = portfolio.categorizable_marks()
    mean = sum(sorted(marks)) / len(marks)

    subject_lines = []
    for subject, (sub_mean, count) in sorted(_subject_means(portfolio.all_records()).items()):
        plural = "assessment" if count == 1 else "assessments"
        subject_lines.append(f"- {subject}: {sub_mean:.2f} ({count} {plural})")

    achievements = ilo_achievements(portfolio)
    if achievements:
        weakest = min(achievements.items(), key=lambda item: (item[1], item[0]))
        weakest_line = f"weakest target ILO: {weakest[0]} (achievement {weakest[1]:.2f})"
    else:
        weakest_line = "weakest target ILO: none mapped"

    head = ["Student profile", f"skill tier: {tier.value}", f"overall mean mark: {mean:.2f}"]
    tail = [weakest_line]
    if portfolio.failed_prerequisite:
        tail.append("note: at least one mark was below the pass mark and is excluded from the tier")

    def render(lines_subject: list[str]) -> str:
        parts = head + (["subject means:"] if lines_subject else []) + lines_subject + tail
        return "\n".join(parts)

    text = render(subject_lines)
    while subject_lines and len(text.split()) > SUMMARY_WORD_CAP:
        subject_lines.pop()
        text = render(subject_lines)
    return text

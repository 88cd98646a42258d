"""Personalized tutoring feedback engine.

Profiles students into skill tiers from their marks, retrieves ILO-tagged
knowledge, assembles tier-specific prompts, votes over sampled generations,
and measures the feedback (reading ease, response time, specificity).
"""

from .portfolio import (
    AssessmentKind,
    AssessmentRecord,
    IloMapping,
    SkillTier,
    StudentPortfolio,
    categorize,
    summarize_for_prompt,
)
from .knowledge import KnowledgeBase, KnowledgeSnippet, RetrievalQuery
from .prompting import PromptBundle, PromptRegistry, TaskSpec, load_default_registry, render
from .gateway import Gateway, GenerationRequest, GenerationResult, ScriptedBackend
from .consistency import VoteOutcome, majority_vote, run_self_consistency
from .metrics import MetricReading, flesch_reading_ease, interpret_band, measure
from .cohort import CohortSpec, generate_cohort
from .experiment import ExperimentPlan, check_orderings, export_report, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AssessmentKind",
    "AssessmentRecord",
    "CohortSpec",
    "ExperimentPlan",
    "Gateway",
    "GenerationRequest",
    "GenerationResult",
    "IloMapping",
    "KnowledgeBase",
    "KnowledgeSnippet",
    "MetricReading",
    "PromptBundle",
    "PromptRegistry",
    "RetrievalQuery",
    "ScriptedBackend",
    "SkillTier",
    "StudentPortfolio",
    "TaskSpec",
    "VoteOutcome",
    "categorize",
    "check_orderings",
    "export_report",
    "flesch_reading_ease",
    "generate_cohort",
    "interpret_band",
    "load_default_registry",
    "majority_vote",
    "measure",
    "render",
    "run_experiment",
    "run_self_consistency",
    "summarize_for_prompt",
]

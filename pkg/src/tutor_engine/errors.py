"""Exception types shared across the engine.

Grouped here so the HTTP layer can map them to status codes in one place.
"""


class TutorError(Exception):
    """Base class for all engine errors."""


# -- portfolio ---------------------------------------------------------------

class InvalidMark(TutorError):
    """Mark outside the [0, 100] percentage range."""


class FailedPrerequisite(TutorError):
    """Mark below the pass mark of 50 cannot be placed in a skill tier."""


class DuplicateAssessment(TutorError):
    """An assessment with the same (subject_code, assessment_id) key exists."""


class InsufficientData(TutorError):
    """Portfolio has no categorizable (passing) marks."""


class InvalidIloMapping(TutorError):
    """ILO mapping weight out of range, or weights into one target ILO sum > 1."""


# -- knowledge base ----------------------------------------------------------

class DuplicateSnippet(TutorError):
    """Snippet id already present in the store."""


class InvalidSnippet(TutorError):
    """Snippet violates an invariant (empty ILO set, oversized body, ...)."""


# -- prompting ---------------------------------------------------------------

class ConfigurationError(TutorError):
    """Required directive set or few-shot exemplar is not registered."""


class PromptTooLarge(TutorError):
    """Non-truncatable prompt sections alone exceed the token budget."""


# -- gateway -----------------------------------------------------------------

class GatewayError(TutorError):
    """Base class for generation-backend failures."""


class BackendError(GatewayError):
    """Backend unreachable or returned a malformed/error response."""


class GatewayTimeout(GatewayError):
    """Generation exceeded the configured deadline."""


class EmptyCompletion(GatewayError):
    """Backend returned an empty completion text."""


class BatchFailed(GatewayError):
    """Every slot of a generation batch failed."""


# -- consistency -------------------------------------------------------------

class NoCandidates(TutorError):
    """majority_vote called with an empty candidate list."""


# -- metrics -----------------------------------------------------------------

class NoProse(TutorError):
    """Text contains no sentences once code is excluded."""


# -- cohort / experiment -----------------------------------------------------

class MissingTier(TutorError):
    """Cohort has no student of a tier the experiment plan requires."""

    def __init__(self, tier: str):
        super().__init__(f"cohort has no student of tier {tier!r}")
        self.tier = tier


class IncompleteReport(TutorError):
    """Ordering checks require one successful reading per (task, condition)."""

"""Generation gateway: one interface over chat-completion backends.

Two backends ship: a remote HTTP backend (chat-completion wire format) and
a scripted backend for tests and experiments. The scripted backend is a
pure function of (prompt hash, slot index); in its default mode it declares
its latencies instead of sleeping, which keeps experiment reports
byte-stable across runs, while ``realtime=True`` makes it sleep so latency
accounting can be exercised against a real clock.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import BackendError, BatchFailed, EmptyCompletion, GatewayTimeout

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_OUTPUT_TOKENS = 800
DEFAULT_DEADLINE_S = 60.0
DEFAULT_PARALLELISM = 5


def prompt_hash(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenerationRequest:
    prompt_text: str
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    seed_hint: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    latency_ms: float
    backend_id: str


@dataclass(frozen=True)
class SlotFailure:
    slot: int
    kind: str
    message: str


@dataclass(frozen=True)
class BatchResult:
    slots: tuple[GenerationResult | SlotFailure, ...]
    wall_clock_ms: float
    simulated: bool = False

    def successes(self) -> list[tuple[int, GenerationResult]]:
        return [
            (i, slot)
            for i, slot in enumerate(self.slots)
            if isinstance(slot, GenerationResult)
        ]


@dataclass(frozen=True)
class Completion:
    """Backend reply: text plus an optional declared (simulated) latency."""

    text: str
    declared_latency_ms: float | None = None


class Backend(Protocol):
    backend_id: str

    def complete(self, request: GenerationRequest, slot: int) -> Completion: ...


class Gateway:
    """Measures latency around a backend and fans out batches concurrently."""

    def __init__(
        self,
        backend: Backend,
        deadline_s: float = DEFAULT_DEADLINE_S,
        parallelism: int = DEFAULT_PARALLELISM,
    ):
        self.backend = backend
        self.deadline_s = deadline_s
        self.parallelism = max(1, parallelism)

    def generate(self, request: GenerationRequest, slot: int = 0) -> GenerationResult:
        """Single generation; latency is wall-clock around the backend call
        unless the backend declared a simulated latency."""
        start = time.perf_counter()
        completion = self.backend.complete(request, slot)
        measured_ms = (time.perf_counter() - start) * 1000.0
        if measured_ms > self.deadline_s * 1000.0:
            raise GatewayTimeout(
                f"generation took {measured_ms:.0f} ms, deadline {self.deadline_s} s"
            )
        if not completion.text:
            raise EmptyCompletion(f"backend {self.backend.backend_id!r} returned empty text")
        latency = (
            completion.declared_latency_ms
            if completion.declared_latency_ms is not None
            else measured_ms
        )
        return GenerationResult(
            text=completion.text, latency_ms=latency, backend_id=self.backend.backend_id
        )

    def generate_batch(self, request: GenerationRequest, n: int) -> BatchResult:
        """n generations issued concurrently (up to the configured parallelism).

        Single-slot failures become per-slot markers; only a fully failed
        batch raises. When every slot declared its latency the batch is
        simulated: its wall-clock is computed from the declared values under
        a round-robin worker schedule instead of being measured, so repeat
        runs agree byte-for-byte.
        """
        if n < 1:
            raise ValueError("batch size must be >= 1")
        slots: list[GenerationResult | SlotFailure] = [None] * n  # type: ignore[list-item]
        declared: list[float | None] = [None] * n

        def run_slot(i: int) -> None:
            try:
                start = time.perf_counter()
                completion = self.backend.complete(request, i)
                measured_ms = (time.perf_counter() - start) * 1000.0
                if measured_ms > self.deadline_s * 1000.0:
                    raise GatewayTimeout(
                        f"slot {i} took {measured_ms:.0f} ms, deadline {self.deadline_s} s"
                    )
                if not completion.text:
                    raise EmptyCompletion(f"slot {i} returned empty text")
                declared[i] = completion.declared_latency_ms
                latency = (
                    completion.declared_latency_ms
                    if completion.declared_latency_ms is not None
                    else measured_ms
                )
                slots[i] = GenerationResult(
                    text=completion.text,
                    latency_ms=latency,
                    backend_id=self.backend.backend_id,
                )
            except Exception as exc:  # per-slot isolation is the contract
                slots[i] = SlotFailure(slot=i, kind=type(exc).__name__, message=str(exc))

        batch_start = time.perf_counter()
        with ThreadPoolExecutor(max_workers=min(self.parallelism, n)) as pool:
            list(pool.map(run_slot, range(n)))
        measured_wall = (time.perf_counter() - batch_start) * 1000.0

        if all(isinstance(s, SlotFailure) for s in slots):
            detail = "; ".join(f"slot {s.slot}: {s.kind}" for s in slots)  # type: ignore[union-attr]
            raise BatchFailed(f"all {n} slots failed: {detail}")

        simulated = all(
            isinstance(s, GenerationResult) and d is not None
            for s, d in zip(slots, declared)
        )
        if simulated:
            workers = min(self.parallelism, n)
            lanes = [0.0] * workers
            for i in range(n):
                lanes[i % workers] += declared[i]  # type: ignore[operator]
            wall = max(lanes)
        else:
            wall = measured_wall
        return BatchResult(slots=tuple(slots), wall_clock_ms=wall, simulated=simulated)


# -- scripted backend ----------------------------------------------------------


@dataclass(frozen=True)
class CannedRule:
    """Substring-triggered canned response; texts cycle by slot index."""

    contains: tuple[str, ...]
    texts: tuple[str, ...]
    delay_ms: float = 0.0

    def matches(self, prompt_text: str) -> bool:
        return all(needle in prompt_text for needle in self.contains)


def _default_fallback(request: GenerationRequest, slot: int) -> str:
    digest = prompt_hash(request.prompt_text)[:8]
    return (
        f"Here is feedback on your work (ref {digest}, take {slot + 1}). "
        "Check each step of your code against the task. "
        "Test the result before you submit."
    )


@dataclass
class ScriptedBackend:
    """Deterministic backend: canned files, substring rules, or a fallback.

    Resolution order for a prompt with hash h (first 16 hex chars):
    exact file/entry for (h, slot), then an all-slot entry for h, then the
    first matching rule, then the fallback text generator.
    """

    backend_id: str = "scripted"
    realtime: bool = False
    default_delay_ms: float = 0.0
    canned_exact: dict[tuple[str, int], str] = field(default_factory=dict)
    canned: dict[str, tuple[str, ...]] = field(default_factory=dict)
    rules: list[CannedRule] = field(default_factory=list)
    fallback: Callable[[GenerationRequest, int], str] | None = _default_fallback

    def register_canned(self, prompt_text: str, texts: list[str] | tuple[str, ...]) -> str:
        key = prompt_hash(prompt_text)[:16]
        self.canned[key] = tuple(texts)
        return key

    def register_rule(
        self, contains: list[str] | tuple[str, ...], texts, delay_ms: float = 0.0
    ) -> None:
        self.rules.append(
            CannedRule(contains=tuple(contains), texts=tuple(texts), delay_ms=delay_ms)
        )

    @classmethod
    def from_dir(cls, path: str | Path, **kwargs) -> "ScriptedBackend":
        """Load canned responses from a directory.

        File names: ``<hash16>.txt`` answers every slot; ``<hash16>_<slot>.txt``
        answers one slot.
        """
        backend = cls(**kwargs)
        for file in sorted(Path(path).glob("*.txt")):
            stem = file.stem
            text = file.read_text(encoding="utf-8")
            if "_" in stem:
                key, _, slot_part = stem.rpartition("_")
                if slot_part.isdigit():
                    backend.canned_exact[(key, int(slot_part))] = text
                    continue
            backend.canned[stem] = (text,)
        return backend

    def _resolve(self, request: GenerationRequest, slot: int) -> tuple[str, float]:
        key = prompt_hash(request.prompt_text)[:16]
        if (key, slot) in self.canned_exact:
            return self.canned_exact[(key, slot)], self.default_delay_ms
        if key in self.canned:
            texts = self.canned[key]
            return texts[slot % len(texts)], self.default_delay_ms
        for rule in self.rules:
            if rule.matches(request.prompt_text):
                return rule.texts[slot % len(rule.texts)], rule.delay_ms
        if self.fallback is not None:
            return self.fallback(request, slot), self.default_delay_ms
        raise BackendError(f"no scripted response for prompt hash {key!r} slot {slot}")

    def complete(self, request: GenerationRequest, slot: int) -> Completion:
        text, delay_ms = self._resolve(request, slot)
        if self.realtime:
            if delay_ms > 0:
                time.sleep(delay_ms / 1000.0)
            return Completion(text=text)
        return Completion(text=text, declared_latency_ms=delay_ms)


# -- remote backend ------------------------------------------------------------


class RemoteBackend:
    """Chat-completion HTTP backend: one user message, first choice parsed."""

    def __init__(
        self,
        url: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = DEFAULT_DEADLINE_S,
    ):
        if not url:
            raise BackendError("remote backend needs a URL (ENGINE_LLM_URL)")
        self.backend_id = f"remote:{model}"
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s

    @classmethod
    def from_env(cls, timeout_s: float = DEFAULT_DEADLINE_S) -> "RemoteBackend":
        return cls(
            url=os.environ.get("ENGINE_LLM_URL", ""),
            model=os.environ.get("ENGINE_LLM_MODEL", "default"),
            api_key=os.environ.get("ENGINE_LLM_KEY"),
            timeout_s=timeout_s,
        )

    def complete(self, request: GenerationRequest, slot: int) -> Completion:
        payload: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt_text}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.seed_hint is not None:
            payload["seed"] = request.seed_hint + slot
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(
                self.url, json=payload, headers=headers, timeout=self.timeout_s
            )
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(f"remote backend timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendError(f"remote backend unreachable: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(
                f"remote backend returned status {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        return Completion(text=text or "")


def backend_from_config(config) -> Backend:
    """Build the configured backend ('scripted' or 'remote')."""
    if config.backend == "remote":
        return RemoteBackend(
            url=config.llm_url or os.environ.get("ENGINE_LLM_URL", ""),
            model=config.llm_model or os.environ.get("ENGINE_LLM_MODEL", "default"),
            api_key=config.llm_key or os.environ.get("ENGINE_LLM_KEY"),
            timeout_s=config.timeout_s,
        )
    if config.scripted_dir:
        return ScriptedBackend.from_dir(config.scripted_dir)
    return ScriptedBackend()

import pytest

from tutor_engine.errors import BackendError, BatchFailed, EmptyCompletion
from tutor_engine.gateway import (
    Completion,
    Gateway,
    GenerationRequest,
    GenerationResult,
    RemoteBackend,
    ScriptedBackend,
    SlotFailure,
    prompt_hash,
)


def request(prompt="hello prompt"):
    return GenerationRequest(prompt_text=prompt)


class TestRequestValidation:
    def test_temperature_range(self):
        with pytest.raises(ValueError):
            GenerationRequest(prompt_text="x", temperature=2.5)
        with pytest.raises(ValueError):
            GenerationRequest(prompt_text="x", temperature=-0.1)

    def test_max_tokens_positive(self):
        with pytest.raises(ValueError):
            GenerationRequest(prompt_text="x", max_output_tokens=0)


class TestScriptedBackend:
    def test_canned_by_prompt_hash(self):
        backend = ScriptedBackend()
        backend.register_canned("the prompt", ["canned answer"])
        result = Gateway(backend).generate(request("the prompt"))
        assert result.text == "canned answer"
        assert result.backend_id == "scripted"

    def test_slot_cycling(self):
        backend = ScriptedBackend()
        backend.register_canned("p", ["a", "b"])
        gateway = Gateway(backend)
        batch = gateway.generate_batch(request("p"), 4)
        assert [r.text for r in batch.slots] == ["a", "b", "a", "b"]

    def test_exact_slot_files_take_priority(self, tmp_path):
        key = prompt_hash("p")[:16]
        (tmp_path / f"{key}.txt").write_text("default", encoding="utf-8")
        (tmp_path / f"{key}_1.txt").write_text("slot one", encoding="utf-8")
        backend = ScriptedBackend.from_dir(tmp_path)
        gateway = Gateway(backend)
        batch = gateway.generate_batch(request("p"), 3)
        assert [r.text for r in batch.slots] == ["default", "slot one", "default"]

    def test_rule_matching_is_ordered(self):
        backend = ScriptedBackend()
        backend.register_rule(["alpha", "beta"], ["specific"])
        backend.register_rule(["alpha"], ["broad"])
        gateway = Gateway(backend)
        assert gateway.generate(request("alpha beta gamma")).text == "specific"
        assert gateway.generate(request("alpha only")).text == "broad"

    def test_fallback_is_deterministic(self):
        gateway = Gateway(ScriptedBackend())
        one = gateway.generate(request("never registered"))
        two = gateway.generate(request("never registered"))
        assert one.text == two.text

    def test_pure_function_of_hash_and_slot(self):
        backend = ScriptedBackend()
        backend.register_canned("p", ["a0", "a1", "a2"])
        gateway = Gateway(backend)
        first = [r.text for r in gateway.generate_batch(request("p"), 3).slots]
        second = [r.text for r in gateway.generate_batch(request("p"), 3).slots]
        assert first == second


class _EmptyBackend:
    backend_id = "empty"

    def complete(self, req, slot):
        return Completion(text="")


class _FailSome:
    backend_id = "failsome"

    def __init__(self, fail_slots):
        self.fail_slots = fail_slots

    def complete(self, req, slot):
        if slot in self.fail_slots:
            raise RuntimeError("boom")
        return Completion(text=f"ok {slot}", declared_latency_ms=5.0)


class TestGenerate:
    def test_empty_completion_raises(self):
        with pytest.raises(EmptyCompletion):
            Gateway(_EmptyBackend()).generate(request())

    def test_latency_recovers_injected_delay(self):
        backend = ScriptedBackend(realtime=True, default_delay_ms=120.0)
        backend.register_canned("p", ["text"])
        result = Gateway(backend).generate(request("p"))
        assert 120.0 <= result.latency_ms <= 130.0

    def test_unreachable_remote_is_backend_error(self):
        backend = RemoteBackend(url="http://127.0.0.1:9/v1/chat", model="m", timeout_s=2.0)
        with pytest.raises(BackendError):
            Gateway(backend).generate(request())

    def test_remote_backend_from_env(self, monkeypatch):
        monkeypatch.setenv("ENGINE_LLM_URL", "http://127.0.0.1:9/v1/chat")
        monkeypatch.setenv("ENGINE_LLM_MODEL", "test-model")
        monkeypatch.setenv("ENGINE_LLM_KEY", "secret")
        backend = RemoteBackend.from_env()
        assert backend.url == "http://127.0.0.1:9/v1/chat"
        assert backend.backend_id == "remote:test-model"
        assert backend.api_key == "secret"

    def test_remote_backend_requires_url(self, monkeypatch):
        monkeypatch.delenv("ENGINE_LLM_URL", raising=False)
        with pytest.raises(BackendError):
            RemoteBackend.from_env()


class TestGenerateBatch:
    def test_results_in_issue_order(self):
        backend = ScriptedBackend()
        backend.register_canned("p", ["v0", "v1", "v2", "v3", "v4"])
        batch = Gateway(backend).generate_batch(request("p"), 5)
        assert [r.text for r in batch.slots] == ["v0", "v1", "v2", "v3", "v4"]

    def test_singleton_batch_equals_generate(self):
        backend = ScriptedBackend()
        backend.register_canned("p", ["only"])
        gateway = Gateway(backend)
        batch = gateway.generate_batch(request("p"), 1)
        single = gateway.generate(request("p"))
        assert batch.slots[0].text == single.text

    def test_partial_failures_marked_per_slot(self):
        batch = Gateway(_FailSome({1, 3})).generate_batch(request(), 5)
        kinds = [type(s) for s in batch.slots]
        assert kinds == [
            GenerationResult, SlotFailure, GenerationResult, SlotFailure, GenerationResult,
        ]
        assert batch.slots[1].slot == 1

    def test_all_failed_raises_batch_failed(self):
        with pytest.raises(BatchFailed):
            Gateway(_FailSome({0, 1})).generate_batch(request(), 2)

    def test_concurrency_actually_engaged(self):
        backend = ScriptedBackend(realtime=True, default_delay_ms=100.0)
        backend.register_canned("p", ["text"])
        gateway = Gateway(backend, parallelism=5)
        batch = gateway.generate_batch(request("p"), 5)
        for slot in batch.slots:
            assert 100.0 <= slot.latency_ms <= 110.0
        assert batch.wall_clock_ms < 0.9 * 500.0
        assert not batch.simulated

    def test_simulated_wall_clock_from_declared_latencies(self):
        backend = ScriptedBackend(default_delay_ms=80.0)
        backend.register_canned("p", ["text"])
        batch = Gateway(backend, parallelism=5).generate_batch(request("p"), 5)
        assert batch.simulated
        assert batch.wall_clock_ms == 80.0
        assert [s.latency_ms for s in batch.slots] == [80.0] * 5

    def test_simulated_wall_clock_with_limited_parallelism(self):
        backend = ScriptedBackend(default_delay_ms=80.0)
        backend.register_canned("p", ["text"])
        batch = Gateway(backend, parallelism=2).generate_batch(request("p"), 5)
        # Round-robin lanes over 2 workers: slots 0,2,4 on one lane -> 240 ms.
        assert batch.wall_clock_ms == 240.0

    def test_mixed_declared_and_failures_is_not_simulated(self):
        batch = Gateway(_FailSome({0})).generate_batch(request(), 3)
        assert not batch.simulated

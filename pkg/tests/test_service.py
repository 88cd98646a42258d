import time

import pytest
from fastapi.testclient import TestClient

from tutor_engine.config import EngineConfig
from tutor_engine.errors import BackendError
from tutor_engine.service import create_app


@pytest.fixture()
def client(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"))
    app = create_app(config)
    with TestClient(app) as client:
        yield client


def enroll(client, student_id="S01", marks=((72.0, "C108"), (70.0, "C205"))):
    response = client.post("/api/students", json={"student_id": student_id})
    assert response.status_code == 201
    for i, (mark, subject) in enumerate(marks):
        response = client.put(
            f"/api/students/{student_id}/assessments",
            json={
                "subject_code": subject,
                "assessment_id": f"a{i}",
                "kind": "prerequisite-final",
                "mark": mark,
            },
        )
        assert response.status_code == 200
    return response


class TestStudents:
    def test_create_student(self, client):
        response = client.post("/api/students", json={"student_id": "S01"})
        assert response.status_code == 201
        body = response.json()
        assert body["student_id"] == "S01"
        assert body["tier"] is None
        assert body["records"] == []

    def test_duplicate_student_conflict(self, client):
        client.post("/api/students", json={"student_id": "S01"})
        response = client.post("/api/students", json={"student_id": "S01"})
        assert response.status_code == 409
        assert response.json()["code"] == "duplicate-student"

    def test_missing_id_field_rejected(self, client):
        response = client.post("/api/students", json={})
        assert response.status_code == 422
        assert response.json()["code"] == "invalid-request"


class TestAssessments:
    def test_average_mark_yields_average_tier(self, client):
        client.post("/api/students", json={"student_id": "S01"})
        response = client.put(
            "/api/students/S01/assessments",
            json={
                "subject_code": "C108",
                "assessment_id": "final",
                "kind": "prerequisite-final",
                "mark": 72,
            },
        )
        assert response.status_code == 200
        assert response.json()["tier"] == "average"

    def test_unknown_student_404(self, client):
        response = client.put(
            "/api/students/missing/assessments",
            json={
                "subject_code": "C108", "assessment_id": "final",
                "kind": "prerequisite-final", "mark": 72,
            },
        )
        assert response.status_code == 404

    def test_duplicate_assessment_409(self, client):
        enroll(client)
        response = client.put(
            "/api/students/S01/assessments",
            json={
                "subject_code": "C108", "assessment_id": "a0",
                "kind": "prerequisite-final", "mark": 60,
            },
        )
        assert response.status_code == 409

    def test_out_of_range_mark_422(self, client):
        client.post("/api/students", json={"student_id": "S01"})
        response = client.put(
            "/api/students/S01/assessments",
            json={
                "subject_code": "C108", "assessment_id": "final",
                "kind": "prerequisite-final", "mark": 250,
            },
        )
        assert response.status_code == 422
        assert response.json()["code"] == "invalid-mark"


class TestFeedback:
    def test_end_to_end_envelope(self, client):
        enroll(client, marks=((55.0, "C108"), (56.0, "C205")))
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "model.fit(X, y)"},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["tier_used"] == "below-average"
        assert body["vote"] == {"cluster_size": 5, "n": 5}
        assert body["feedback_text"]
        assert body["metrics"]["specificity_sentences"] > 0
        assert body["metrics"]["band"]
        assert body["retrieved_snippet_ids"]

    def test_unknown_student_404(self, client):
        response = client.post(
            "/api/feedback",
            json={"student_id": "ghost", "task_id": "task-1", "response_text": "x"},
        )
        assert response.status_code == 404

    def test_unknown_task_404(self, client):
        enroll(client)
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-99", "response_text": "x"},
        )
        assert response.status_code == 404

    def test_empty_portfolio_conflict(self, client):
        client.post("/api/students", json={"student_id": "S01"})
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "x"},
        )
        assert response.status_code == 409
        assert response.json()["code"] == "insufficient-data"

    def test_oversized_response_rejected(self, client):
        enroll(client)
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "x" * 65537},
        )
        assert response.status_code == 422

    def test_history_grows(self, client):
        enroll(client)
        for _ in range(2):
            assert (
                client.post(
                    "/api/feedback",
                    json={"student_id": "S01", "task_id": "task-1", "response_text": "x"},
                ).status_code
                == 200
            )
        history = client.get("/api/students/S01/feedback-history").json()["history"]
        assert len(history) == 2
        assert history[0]["sequence"] < history[1]["sequence"]


class _DownBackend:
    backend_id = "down"

    def complete(self, request, slot):
        raise BackendError("backend offline")


def test_gateway_down_maps_to_502(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"))
    app = create_app(config, backend=_DownBackend())
    with TestClient(app) as client:
        enroll(client)
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "x"},
        )
        assert response.status_code == 502
        assert response.json()["code"] == "gateway-error"


class TestKnowledgeAndTasks:
    def test_snippet_upload_then_retrieval(self, client):
        enroll(client)
        response = client.post(
            "/api/knowledge/snippets",
            json={
                "snippet_id": "kb-custom-1",
                "subject_code": "C315",
                "ilo_ids": ["C315-ILO1"],
                "skill_tags": ["regression", "scikit-learn", "model-fitting", "data-splitting"],
                "body": "Exactly matching guidance for the regression task.",
            },
        )
        assert response.status_code == 201
        envelope = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "x"},
        ).json()
        assert "kb-custom-1" in envelope["retrieved_snippet_ids"]

    def test_duplicate_snippet_409(self, client):
        payload = {
            "snippet_id": "kb-dup",
            "subject_code": "C315",
            "ilo_ids": ["C315-ILO1"],
            "skill_tags": ["regression"],
            "body": "b",
        }
        assert client.post("/api/knowledge/snippets", json=payload).status_code == 201
        assert client.post("/api/knowledge/snippets", json=payload).status_code == 409

    def test_register_task_and_use_it(self, client):
        enroll(client)
        response = client.post(
            "/api/tasks",
            json={
                "task_id": "task-x",
                "statement": "Write a k-means clustering script.",
                "skill_tags": ["clustering"],
                "complexity_rank": 2,
            },
        )
        assert response.status_code == 201
        assert client.post("/api/tasks", json={
            "task_id": "task-x", "statement": "dup", "skill_tags": ["a"],
        }).status_code == 409
        response = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-x", "response_text": "x"},
        )
        assert response.status_code == 200


class TestCohortSummary:
    def test_histogram_and_means(self, client):
        enroll(client, "S01", marks=((55.0, "C108"),))   # below-average
        enroll(client, "S02", marks=((72.0, "C108"),))   # average
        enroll(client, "S03", marks=((90.0, "C108"),))   # above-average
        enroll(client, "S04", marks=((74.0, "C108"),))   # average
        client.post("/api/students", json={"student_id": "S05"})  # uncategorizable
        summary = client.get("/api/cohort/summary").json()
        assert summary["students"] == 5
        assert summary["tiers"] == {"below-average": 1, "average": 2, "above-average": 1}
        assert summary["uncategorizable"] == 1
        assert summary["mean_mark_by_tier"]["average"] == pytest.approx(73.0)


class TestExperiments:
    def test_run_and_poll(self, client):
        response = client.post("/api/experiments", json={"seed": 15, "n": 30})
        assert response.status_code == 202
        run_id = response.json()["run_id"]
        for _ in range(100):
            body = client.get(f"/api/experiments/{run_id}").json()
            if body["status"] != "running":
                break
            time.sleep(0.05)
        assert body["status"] == "completed"
        report = body["report"]
        assert len(report["readings"]) == 12
        assert len(report["ordering_checks"]) == 12

    def test_unknown_run_404(self, client):
        assert client.get("/api/experiments/run-9999").status_code == 404


class TestInvariants:
    def test_gets_never_append_events(self, client, tmp_path):
        enroll(client)
        events_path = next((tmp_path / "data").glob("events.jsonl"))
        before = events_path.read_bytes()
        client.get("/api/students/S01/portfolio")
        client.get("/api/students/S01/feedback-history")
        client.get("/api/cohort/summary")
        assert events_path.read_bytes() == before

    def test_tier_used_matches_recomputed_tier(self, client):
        enroll(client, marks=((55.0, "C108"), (56.0, "C205")))
        envelope = client.post(
            "/api/feedback",
            json={"student_id": "S01", "task_id": "task-1", "response_text": "x"},
        ).json()
        portfolio = client.get("/api/students/S01/portfolio").json()
        assert envelope["tier_used"] == portfolio["tier"] == "below-average"

    def test_seeded_cohort_histogram_through_api(self, client):
        from tutor_engine.cohort import CohortSpec, generate_cohort

        students = generate_cohort(CohortSpec(seed=15))
        expected = {"below-average": 0, "average": 0, "above-average": 0}
        for student in students:
            expected[student.tier().value] += 1
            assert (
                client.post(
                    "/api/students", json={"student_id": student.student_id}
                ).status_code
                == 201
            )
            for record in student.records:
                response = client.put(
                    f"/api/students/{student.student_id}/assessments",
                    json={
                        "subject_code": record.subject_code,
                        "assessment_id": record.assessment_id,
                        "kind": record.kind.value,
                        "mark": record.mark,
                        "recorded_at": record.recorded_at,
                    },
                )
                assert response.status_code == 200
        summary = client.get("/api/cohort/summary").json()
        assert summary["tiers"] == expected
        assert summary["students"] == 30


def test_portfolio_import_file_loader(tmp_path):
    from tutor_engine.service import load_records_jsonl

    path = tmp_path / "records.jsonl"
    path.write_text(
        '{"subject_code": "C108", "assessment_id": "final", '
        '"kind": "prerequisite-final", "mark": 72.5, "recorded_at": "2025-02-03T00:00:00Z"}\n'
        '{"subject_code": "C315", "assessment_id": "week1-quiz", "kind": "quiz", "mark": 68}\n',
        encoding="utf-8",
    )
    records = load_records_jsonl(path)
    assert len(records) == 2
    assert records[0].mark == 72.5
    assert records[1].kind.value == "quiz"


class TestRecovery:
    def test_restart_reproduces_all_get_bodies(self, tmp_path):
        data_dir = str(tmp_path / "data")
        config = EngineConfig(data_dir=data_dir)
        app = create_app(config)
        gets = [
            "/api/students/S01/portfolio",
            "/api/students/S02/portfolio",
            "/api/students/S03/portfolio",
            "/api/students/S01/feedback-history",
            "/api/students/S02/feedback-history",
            "/api/cohort/summary",
        ]
        with TestClient(app) as client:
            enroll(client, "S01", marks=((55.0, "C108"), (58.0, "C205")))
            enroll(client, "S02", marks=((72.0, "C108"), (75.0, "C205")))
            enroll(client, "S03", marks=((88.0, "C108"), (92.0, "C205")))
            for student in ("S01", "S02"):
                assert (
                    client.post(
                        "/api/feedback",
                        json={
                            "student_id": student,
                            "task_id": "task-1",
                            "response_text": "model.fit(X, y)",
                        },
                    ).status_code
                    == 200
                )
            before = {path: client.get(path).content for path in gets}

        restarted = create_app(EngineConfig(data_dir=data_dir))
        with TestClient(restarted) as client:
            for path in gets:
                assert client.get(path).content == before[path], path

    def test_snapshot_plus_tail_replay(self, tmp_path):
        data_dir = str(tmp_path / "data")
        config = EngineConfig(data_dir=data_dir, snapshot_interval=3)
        with TestClient(create_app(config)) as client:
            enroll(client, "S01")
            enroll(client, "S02")
            before = client.get("/api/cohort/summary").content
        assert (tmp_path / "data" / "snapshot.json").exists()
        with TestClient(create_app(EngineConfig(data_dir=data_dir))) as client:
            assert client.get("/api/cohort/summary").content == before

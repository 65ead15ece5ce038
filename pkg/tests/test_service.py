import base64

import pytest
from fastapi.testclient import TestClient

from stagegen.media import encode_png
from stagegen.pipeline import create_service_app

from test_backend_mocks import center_face_image
from test_pipeline import PROMPT, STAGES, make_orchestrator


@pytest.fixture()
def service(tmp_path, mock_app):
    orchestrator = make_orchestrator(tmp_path, mock_app)
    return TestClient(create_service_app(orchestrator))


def face_b64() -> str:
    return base64.b64encode(encode_png(center_face_image(16, 8))).decode("ascii")


def submit_body(**overrides) -> dict:
    body = {"identity_id": "id-1", "face_png_base64": face_b64(), "prompt": PROMPT}
    body.update(overrides)
    return body


class TestServiceApi:
    def test_submit_advance_to_done(self, service):
        job_id = service.post("/jobs", json=submit_body()).json()["job_id"]
        state = None
        for _ in range(7):
            state = service.post(f"/jobs/{job_id}/advance").json()["state"]
        assert state == "done"
        record = service.get(f"/jobs/{job_id}").json()
        assert set(record["stage_outputs"]) == set(STAGES)

    def test_artifacts_are_fetchable(self, service):
        job_id = service.post("/jobs", json=submit_body()).json()["job_id"]
        service.post(f"/jobs/{job_id}/advance")
        record = service.get(f"/jobs/{job_id}").json()
        digest = record["stage_outputs"]["preprocessing"]
        raw = service.get(f"/artifacts/{digest}")
        assert raw.status_code == 200
        assert raw.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_unknown_job_is_404(self, service):
        assert service.get("/jobs/missing").status_code == 404
        assert service.post("/jobs/missing/advance").status_code == 404

    def test_unknown_artifact_is_404(self, service):
        assert service.get(f"/artifacts/{'0' * 64}").status_code == 404

    def test_duplicate_idempotency_key_is_409(self, service):
        first = service.post("/jobs", json=submit_body(idempotency_key="k"))
        repeat = service.post("/jobs", json=submit_body(idempotency_key="k"))
        assert repeat.json()["job_id"] == first.json()["job_id"]
        conflict = service.post(
            "/jobs", json=submit_body(prompt="a woman sings in a park",
                                      idempotency_key="k"))
        assert conflict.status_code == 409
        assert conflict.json()["existing_job_id"] == first.json()["job_id"]

    def test_bad_face_bytes_is_422(self, service):
        bad = submit_body(face_png_base64=base64.b64encode(b"not a png").decode())
        assert service.post("/jobs", json=bad).status_code == 422

    def test_cancel_endpoint(self, service):
        job_id = service.post("/jobs", json=submit_body()).json()["job_id"]
        service.post(f"/jobs/{job_id}/advance")
        assert service.post(f"/jobs/{job_id}/cancel").json()["cancel_requested"]
        state = service.post(f"/jobs/{job_id}/advance").json()["state"]
        assert state == "failed"

    def test_advance_on_done_is_409(self, service):
        job_id = service.post("/jobs", json=submit_body()).json()["job_id"]
        for _ in range(7):
            service.post(f"/jobs/{job_id}/advance")
        assert service.post(f"/jobs/{job_id}/advance").status_code == 409

    def test_baseline_endpoint(self, service):
        body = {"identity_id": "id-9", "face_png_base64": face_b64(), "prompt": PROMPT}
        result = service.post("/baseline/r2v", json=body).json()
        assert result["frames"] == 4  # n=3 plus the conditioning frame
        video_bytes = service.get(f"/artifacts/{result['video_digest']}")
        assert video_bytes.status_code == 200
        vcu_bytes = service.get(f"/artifacts/{result['vcu_digest']}")
        assert vcu_bytes.status_code == 200

    def test_health(self, service):
        assert service.get("/health").json() == {"status": "ok"}

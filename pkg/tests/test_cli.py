import socket
import threading
import time
from pathlib import Path

import httpx
import pytest
import uvicorn
import yaml
from click.testing import CliRunner

from stagegen.backends.mock import create_mock_app
from stagegen.cli import main
from stagegen.media import encode_png
from stagegen.pipeline import Orchestrator, create_service_app
from stagegen.config import load_config

from test_backend_mocks import center_face_image
from test_pipeline import PROMPT

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = Path(__file__).parent / "fixtures"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def start_server(app, port: int):
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    return server, thread


def wait_ready(url: str, timeout: float = 10.0) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            if httpx.get(url, timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.05)
    raise RuntimeError(f"server at {url} never became ready")


@pytest.fixture(scope="module")
def mock_server():
    app = create_mock_app()
    port = free_port()
    server, thread = start_server(app, port)
    base = f"http://127.0.0.1:{port}"
    wait_ready(f"{base}/v1/health")
    yield base, app
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture()
def workdir(tmp_path, mock_server):
    base, _app = mock_server
    face_path = tmp_path / "face.png"
    face_path.write_bytes(encode_png(center_face_image(16, 8)))
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump({
        "store": {"root": str(tmp_path / "store")},
        "video": {"frames": 3, "fps": 8, "width": 16, "height": 16},
        "backends": {
            capability: {"endpoint": base, "model_id": "mock"}
            for capability in [
                "matting", "text_to_image", "image_to_video", "llm",
                "face_embedding", "face_analysis", "optical_flow",
                "video_text_embedding", "aesthetic_score",
                "imaging_quality_score", "frame_interpolation",
            ]
        },
    }))
    return tmp_path


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestRunCommand:
    def test_run_to_done(self, workdir):
        result = invoke("run", "--face", str(workdir / "face.png"),
                        "--prompt", PROMPT, "--config", str(workdir / "config.yaml"))
        assert result.exit_code == 0, result.output
        assert "state: done" in result.output
        assert "evaluating: " in result.output

    def test_missing_face_is_input_error(self, workdir):
        result = invoke("run", "--face", str(workdir / "nope.png"),
                        "--prompt", PROMPT, "--config", str(workdir / "config.yaml"))
        assert result.exit_code == 2
        store = workdir / "store" / "jobs"
        assert not store.exists() or not list(store.glob("*.json"))

    def test_no_evaluate_skips_metric_row(self, workdir):
        result = invoke("run", "--face", str(workdir / "face.png"),
                        "--prompt", PROMPT, "--no-evaluate",
                        "--config", str(workdir / "config.yaml"))
        assert result.exit_code == 0, result.output
        assert "state: done" in result.output
        assert "evaluating: " not in result.output

    def test_unparseable_config_is_input_error(self, workdir):
        bad = workdir / "bad.yaml"
        bad.write_text("]: not yaml [")
        result = invoke("run", "--face", str(workdir / "face.png"),
                        "--prompt", PROMPT, "--config", str(bad))
        assert result.exit_code == 2

    def test_r2v_method(self, workdir):
        result = invoke("run", "--face", str(workdir / "face.png"),
                        "--prompt", PROMPT, "--method", "r2v",
                        "--config", str(workdir / "config.yaml"))
        assert result.exit_code == 0, result.output
        assert "method: r2v" in result.output
        assert "video_digest: " in result.output

    def test_env_var_config_fallback(self, workdir, monkeypatch):
        monkeypatch.setenv("STAGEGEN_CONFIG", str(workdir / "config.yaml"))
        result = invoke("run", "--face", str(workdir / "face.png"),
                        "--prompt", PROMPT, "--no-evaluate")
        assert result.exit_code == 0, result.output


class TestFixtureTables:
    def test_compare_fixtures_reproduce_golden(self):
        result = invoke("compare", "--fixtures", str(FIXTURES / "compare_fixtures.yaml"))
        assert result.exit_code == 0
        assert result.output == (GOLDEN / "compare_table.txt").read_text()
        assert "+10.1%" in result.output
        assert "+53.6%" in result.output

    def test_ablate_fixtures_reproduce_golden(self):
        result = invoke("ablate-prompt", "--fixtures", str(FIXTURES / "ablate_fixtures.yaml"))
        assert result.exit_code == 0
        assert result.output == (GOLDEN / "ablate_table.txt").read_text()
        assert "0.208" in result.output and "0.246" in result.output

    def test_structured_format_matches_golden(self):
        result = invoke("compare", "--fixtures", str(FIXTURES / "compare_fixtures.yaml"),
                        "--format", "structured")
        assert result.exit_code == 0
        assert result.output.strip() == (GOLDEN / "compare_table.json").read_text().strip()

    def test_out_dir_writes_both_renderings(self, tmp_path):
        result = invoke("compare", "--fixtures", str(FIXTURES / "compare_fixtures.yaml"),
                        "--out", str(tmp_path / "reports"))
        assert result.exit_code == 0
        assert (tmp_path / "reports" / "compare.txt").exists()
        assert (tmp_path / "reports" / "compare.json").exists()


def write_manifest(workdir, identities) -> Path:
    entries = []
    for name, prompt in identities:
        face = workdir / f"{name}.png"
        face.write_bytes(encode_png(center_face_image(16, 8)))
        entries.append({"identity_id": name, "face": face.name, "prompt": prompt})
    manifest = workdir / "manifest.yaml"
    manifest.write_text(yaml.safe_dump(entries))
    return manifest


class TestBatchCommands:
    def test_compare_manifest_end_to_end(self, workdir):
        manifest = write_manifest(workdir, [
            ("id-a", PROMPT),
            ("id-b", "a woman sings in a sunny park"),
            ("id-c", "an old man reads a book in the library"),
        ])
        result = invoke("compare", "--manifest", str(manifest),
                        "--config", str(workdir / "config.yaml"),
                        "--out", str(workdir / "out"))
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0].startswith("method")
        assert any(line.startswith("pipeline (ours)") for line in lines)
        assert any(line.startswith("r2v (baseline)") for line in lines)
        assert any(line.startswith("improvement") for line in lines)
        assert "—" not in lines[2]  # all six metrics populated

    def test_compare_is_deterministic(self, workdir):
        manifest = write_manifest(workdir, [("id-a", PROMPT)])
        first = invoke("compare", "--manifest", str(manifest),
                       "--config", str(workdir / "config.yaml"),
                       "--out", str(workdir / "out-1"))
        second = invoke("compare", "--manifest", str(manifest),
                        "--config", str(workdir / "config.yaml"),
                        "--out", str(workdir / "out-2"))
        assert first.output == second.output

    def test_ablate_manifest_end_to_end(self, workdir):
        manifest = write_manifest(workdir, [("id-a", "she smiles at her reflection")])
        result = invoke("ablate-prompt", "--manifest", str(manifest),
                        "--config", str(workdir / "config.yaml"))
        assert result.exit_code == 0, result.output
        assert "polished prompt" in result.output
        assert "raw prompt" in result.output


class TestServeIntegration:
    def test_mock_plus_serve_plus_run(self, workdir, mock_server):
        # the serve API runs against the same mock backends the CLI uses
        config = load_config(workdir / "config.yaml")
        service_app = create_service_app(Orchestrator(config))
        port = free_port()
        server, thread = start_server(service_app, port)
        try:
            wait_ready(f"http://127.0.0.1:{port}/health")
            result = invoke("run", "--face", str(workdir / "face.png"),
                            "--prompt", PROMPT, "--config", str(workdir / "config.yaml"))
            assert result.exit_code == 0, result.output
            assert "state: done" in result.output
            # and the served API can drive a job over the same store
            face_b64 = __import__("base64").b64encode(
                (workdir / "face.png").read_bytes()).decode()
            with httpx.Client(base_url=f"http://127.0.0.1:{port}") as http:
                job_id = http.post("/jobs", json={
                    "identity_id": "served", "face_png_base64": face_b64,
                    "prompt": PROMPT,
                }).json()["job_id"]
                state = None
                for _ in range(7):
                    state = http.post(f"/jobs/{job_id}/advance").json()["state"]
                assert state == "done"
        finally:
            server.should_exit = True
            thread.join(timeout=5)

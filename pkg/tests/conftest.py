import pytest
from fastapi.testclient import TestClient


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" in report.nodeid and report.when == "call":
                name = report.nodeid.split("::")[-1]
                lines.append((name, verdict))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"  {name}: {verdict}")

from stagegen.backends import BackendClient, BackendDescriptor, Capability
from stagegen.backends.mock import create_mock_app

MOCK_BASE = "http://mock-backends"


@pytest.fixture()
def mock_app():
    return create_mock_app()


@pytest.fixture()
def mock_state(mock_app):
    return mock_app.state.mock


@pytest.fixture()
def backend_client(mock_app):
    # starlette's TestClient is an httpx.Client, so it plugs straight in.
    http = TestClient(mock_app, base_url=MOCK_BASE)
    return BackendClient(http, sleeper=lambda seconds: None)


def descriptor(capability: Capability, **overrides) -> BackendDescriptor:
    defaults = dict(endpoint=MOCK_BASE, model_id="mock", timeout=5.0, max_retries=2)
    defaults.update(overrides)
    return BackendDescriptor(capability=capability, **defaults)


@pytest.fixture()
def descriptors():
    return {c: descriptor(c) for c in Capability}

"""Command-line entry points: run jobs, compare methods, ablate, serve."""

from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click
import yaml

from .backends.mock import create_mock_app
from .config import AppConfig, ConfigError, load_config
from .media import decode_png, serialize_video
from .metrics.evaluate import (
    MetricRow,
    build_report,
    deserialize_report,
    evaluate_video,
    serialize_report,
)
from .pipeline.jobs import JobState, ReferenceInput
from .pipeline.orchestrator import Orchestrator
from .pipeline.service import create_service_app
from .prompts.types import RawPrompt
from .reporting import ComparisonTable, render_text, structured_bytes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_JOB_FAILED = 1
EXIT_BAD_INPUT = 2


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Two-stage identity-preserving text-to-video pipeline tools."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _fail_input(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_BAD_INPUT)


def _load_config_or_exit(config_path: str | None, out_dir: str | None) -> AppConfig:
    try:
        config = load_config(config_path)
    except (ConfigError, OSError) as exc:
        _fail_input(f"cannot load config: {exc}")
    if out_dir is not None:
        config.store_root = Path(out_dir)
    return config


def _reference_from_paths(identity: str | None, face_path: Path, prompt: str) -> ReferenceInput:
    if not face_path.exists():
        _fail_input(f"face image not found: {face_path}")
    try:
        face = decode_png(face_path.read_bytes())
    except Exception as exc:
        _fail_input(f"face image unreadable: {exc}")
    try:
        raw = RawPrompt(prompt)
    except ValueError as exc:
        _fail_input(str(exc))
    return ReferenceInput(
        identity_id=identity or face_path.stem,
        reference_face=face,
        raw_prompt=raw,
    )


@main.command("run")
@click.option("--face", "face_path", required=True, type=click.Path(path_type=Path),
              help="Reference face image (PNG).")
@click.option("--prompt", "prompt_text", default=None, help="Instruction text.")
@click.option("--prompt-file", type=click.Path(path_type=Path), default=None,
              help="File containing the instruction text.")
@click.option("--identity", default=None, help="Identity label (defaults to face filename).")
@click.option("--config", "config_path", default=None, help="Config file path.")
@click.option("--no-evaluate", is_flag=True, help="Skip the evaluation stage.")
@click.option("--method", type=click.Choice(["pipeline", "r2v"]), default="pipeline")
@click.option("--out", "out_dir", default=None, help="Artifact store directory override.")
def cmd_run(face_path, prompt_text, prompt_file, identity, config_path,
            no_evaluate, method, out_dir) -> None:
    """Run one generation job to completion and print its digests."""
    if (prompt_text is None) == (prompt_file is None):
        _fail_input("provide exactly one of --prompt / --prompt-file")
    if prompt_file is not None:
        if not Path(prompt_file).exists():
            _fail_input(f"prompt file not found: {prompt_file}")
        prompt_text = Path(prompt_file).read_text(encoding="utf-8")
    config = _load_config_or_exit(config_path, out_dir)
    ref = _reference_from_paths(identity, face_path, prompt_text)
    orchestrator = Orchestrator(config)

    if method == "r2v":
        video = orchestrator.baseline_r2v(ref)
        video_bytes = serialize_video(video)
        digest = orchestrator.store.put(video_bytes)
        click.echo(f"method: r2v\nvideo_digest: {digest}\nvcu_digest: {video.vcu_digest}")
        if not no_evaluate:
            backends = orchestrator.metric_backends()
            row = evaluate_video(video, ref.reference_face, ref.raw_prompt.text,
                                 backends, config.metrics)
            report = build_report({ref.identity_id: row}, backends, config.metrics)
            report_digest = orchestrator.store.put(serialize_report(report))
            click.echo(f"report_digest: {report_digest}")
        sys.exit(EXIT_OK)

    job_id = orchestrator.submit(ref, evaluate=not no_evaluate)
    state = orchestrator.run_to_completion(job_id)
    record = orchestrator.get_job(job_id)
    click.echo(f"job_id: {job_id}")
    click.echo(f"state: {state.value}")
    for stage, digest in record.stage_outputs.items():
        click.echo(f"{stage}: {digest}")
    if state is not JobState.DONE:
        click.echo(f"error: {record.error}", err=True)
        sys.exit(EXIT_JOB_FAILED)
    sys.exit(EXIT_OK)


@dataclass
class ManifestEntry:
    identity_id: str
    face_path: Path
    prompt: str


def _load_manifest(path: Path) -> list[ManifestEntry]:
    if not path.exists():
        _fail_input(f"manifest not found: {path}")
    doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(doc, list) or not doc:
        _fail_input("manifest must be a non-empty list of {identity_id, face, prompt}")
    entries = []
    for item in doc:
        try:
            entries.append(ManifestEntry(
                identity_id=str(item["identity_id"]),
                face_path=(path.parent / item["face"]).resolve(),
                prompt=str(item["prompt"]),
            ))
        except (TypeError, KeyError) as exc:
            _fail_input(f"bad manifest entry {item!r}: {exc}")
    return entries


def _load_fixture_table(path: Path) -> ComparisonTable:
    doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    rows = [(row["label"], dict(row["aggregate"])) for row in doc["rows"]]
    return ComparisonTable(rows=rows, footnotes=list(doc.get("footnotes", [])))


def _emit_table(table: ComparisonTable, output_format: str, out_dir: str | None,
                name: str) -> None:
    text = render_text(table)
    structured = structured_bytes(table).decode("utf-8")
    click.echo(text if output_format == "text" else structured, nl=False)
    if output_format == "structured":
        click.echo()
    if out_dir is not None:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{name}.txt").write_text(text, encoding="utf-8")
        (directory / f"{name}.json").write_text(structured + "\n", encoding="utf-8")


def _pipeline_row(orchestrator: Orchestrator, ref: ReferenceInput) -> MetricRow:
    job_id = orchestrator.submit(ref, evaluate=True)
    state = orchestrator.run_to_completion(job_id)
    record = orchestrator.get_job(job_id)
    if state is not JobState.DONE:
        raise RuntimeError(f"{ref.identity_id}: pipeline failed at "
                           f"{record.error['stage']}: {record.error['message']}")
    report = deserialize_report(
        orchestrator.store.get(record.stage_outputs["evaluating"]))
    return report.per_video[ref.identity_id]


def _baseline_row(orchestrator: Orchestrator, ref: ReferenceInput) -> MetricRow:
    video = orchestrator.baseline_r2v(ref)
    backends = orchestrator.metric_backends()
    return evaluate_video(video, ref.reference_face, ref.raw_prompt.text,
                          backends, orchestrator.config.metrics)


@main.command("compare")
@click.option("--manifest", "manifest_path", type=click.Path(path_type=Path), default=None)
@click.option("--fixtures", "fixtures_path", type=click.Path(path_type=Path), default=None,
              help="Render a table from canned aggregates instead of running jobs.")
@click.option("--config", "config_path", default=None)
@click.option("--parallel", default=2, show_default=True)
@click.option("--out", "out_dir", default=None)
@click.option("--format", "output_format", type=click.Choice(["text", "structured"]),
              default="text")
def cmd_compare(manifest_path, fixtures_path, config_path, parallel, out_dir,
                output_format) -> None:
    """Run the decoupled pipeline and the R2V baseline, then tabulate both."""
    if fixtures_path is not None:
        table = _load_fixture_table(Path(fixtures_path))
        _emit_table(table, output_format, out_dir, "compare")
        sys.exit(EXIT_OK)
    if manifest_path is None:
        _fail_input("provide --manifest or --fixtures")
    entries = _load_manifest(Path(manifest_path))
    config = _load_config_or_exit(config_path, out_dir)
    orchestrator = Orchestrator(config)

    pipeline_rows: dict[str, MetricRow] = {}
    baseline_rows: dict[str, MetricRow] = {}
    footnotes: list[str] = []

    def run_entry(entry: ManifestEntry) -> None:
        ref = _reference_from_paths(entry.identity_id, entry.face_path, entry.prompt)
        try:
            pipeline_rows[entry.identity_id] = _pipeline_row(orchestrator, ref)
        except Exception as exc:
            footnotes.append(f"pipeline {entry.identity_id}: {exc}")
        try:
            baseline_rows[entry.identity_id] = _baseline_row(orchestrator, ref)
        except Exception as exc:
            footnotes.append(f"r2v {entry.identity_id}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        list(pool.map(run_entry, entries))

    cfg = config.metrics
    table = ComparisonTable(rows=[
        ("pipeline (ours)", build_report(pipeline_rows, None, cfg).aggregate
         if pipeline_rows else {}),
        ("r2v (baseline)", build_report(baseline_rows, None, cfg).aggregate
         if baseline_rows else {}),
    ], footnotes=sorted(footnotes))
    _emit_table(table, output_format, out_dir, "compare")
    sys.exit(EXIT_OK if pipeline_rows and baseline_rows else EXIT_JOB_FAILED)


@main.command("ablate-prompt")
@click.option("--manifest", "manifest_path", type=click.Path(path_type=Path), default=None)
@click.option("--fixtures", "fixtures_path", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_path", default=None)
@click.option("--parallel", default=2, show_default=True)
@click.option("--out", "out_dir", default=None)
@click.option("--format", "output_format", type=click.Choice(["text", "structured"]),
              default="text")
def cmd_ablate_prompt(manifest_path, fixtures_path, config_path, parallel, out_dir,
                      output_format) -> None:
    """Drive the I2V path with raw vs polished prompts and tabulate both."""
    if fixtures_path is not None:
        table = _load_fixture_table(Path(fixtures_path))
        _emit_table(table, output_format, out_dir, "ablate_prompt")
        sys.exit(EXIT_OK)
    if manifest_path is None:
        _fail_input("provide --manifest or --fixtures")
    entries = _load_manifest(Path(manifest_path))
    config = _load_config_or_exit(config_path, out_dir)
    orchestrator = Orchestrator(config)

    polished_rows: dict[str, MetricRow] = {}
    raw_rows: dict[str, MetricRow] = {}
    footnotes: list[str] = []

    def run_entry(entry: ManifestEntry) -> None:
        ref = _reference_from_paths(entry.identity_id, entry.face_path, entry.prompt)
        for rows, polish in ((polished_rows, True), (raw_rows, False)):
            try:
                job_id = orchestrator.submit(ref, evaluate=True, polish=polish)
                state = orchestrator.run_to_completion(job_id)
                record = orchestrator.get_job(job_id)
                if state is not JobState.DONE:
                    raise RuntimeError(
                        f"failed at {record.error['stage']}: {record.error['message']}")
                report = deserialize_report(
                    orchestrator.store.get(record.stage_outputs["evaluating"]))
                rows[entry.identity_id] = report.per_video[entry.identity_id]
            except Exception as exc:
                label = "polished" if polish else "raw"
                footnotes.append(f"{label} {entry.identity_id}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        list(pool.map(run_entry, entries))

    cfg = config.metrics
    table = ComparisonTable(rows=[
        ("polished prompt", build_report(polished_rows, None, cfg).aggregate
         if polished_rows else {}),
        ("raw prompt", build_report(raw_rows, None, cfg).aggregate
         if raw_rows else {}),
    ], footnotes=sorted(footnotes))
    _emit_table(table, output_format, out_dir, "ablate_prompt")
    sys.exit(EXIT_OK if polished_rows and raw_rows else EXIT_JOB_FAILED)


@main.command("serve")
@click.option("--config", "config_path", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--out", "out_dir", default=None)
def cmd_serve(config_path, host, port, out_dir) -> None:
    """Serve the pipeline orchestration HTTP API."""
    import uvicorn

    config = _load_config_or_exit(config_path, out_dir)
    app = create_service_app(Orchestrator(config))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("mock-backends")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=9100, show_default=True)
@click.option("--model-id", default=None, help="Model id the mock advertises.")
def cmd_mock_backends(host, port, model_id) -> None:
    """Serve deterministic mock implementations of every capability."""
    import uvicorn

    app = create_mock_app(**({"model_id": model_id} if model_id else {}))
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()

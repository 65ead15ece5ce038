import dataclasses
import json

from stagegen.backends import Capability
from stagegen.media import Image, VideoArtifact
from stagegen.metrics import (
    FacelessFramePolicy,
    MetricBackends,
    MetricConfig,
    MetricRow,
    build_report,
    compute_aggregate,
    deserialize_report,
    evaluate_video,
    serialize_report,
)

from conftest import descriptor
from test_backend_mocks import center_face_image


def metric_backends(backend_client, **omit):
    kwargs = dict(
        face_embedding=descriptor(Capability.FACE_EMBEDDING),
        video_text_embedding=descriptor(Capability.VIDEO_TEXT_EMBEDDING),
        aesthetic=descriptor(Capability.AESTHETIC_SCORE),
        imaging=descriptor(Capability.IMAGING_QUALITY_SCORE),
        optical_flow=descriptor(Capability.OPTICAL_FLOW),
        frame_interpolation=descriptor(Capability.FRAME_INTERPOLATION),
    )
    for name in omit:
        kwargs[name] = None
    return MetricBackends(client=backend_client, **kwargs)


def sample_video(num_frames=6):
    frames = []
    for k in range(num_frames):
        value = 120 + 20 * (k % 3)
        frames.append(Image.filled(6, 6, (value, value // 2, 255 - value)))
    return VideoArtifact(frames=tuple(frames), fps=16, prompt_used="a man walks",
                         vcu_digest="0" * 64)


CFG = MetricConfig()


class TestEvaluateVideo:
    def test_full_backend_set_populates_all_fields(self, backend_client):
        row = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                             metric_backends(backend_client), CFG)
        for field in ("arc_sim", "oc", "aq", "iq", "ms", "mean_top_flow"):
            assert getattr(row, field) is not None, field
        assert isinstance(row.dynamic, bool)
        assert row.errors == {}

    def test_deterministic_across_runs(self, backend_client):
        a = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                           metric_backends(backend_client), CFG)
        b = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                           metric_backends(backend_client), CFG)
        assert a == b

    def test_missing_face_backend_marks_gap(self, backend_client):
        row = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                             metric_backends(backend_client, face_embedding=None), CFG)
        assert row.arc_sim is None
        assert "not configured" in row.errors["arc_sim"]
        assert row.oc is not None  # others unaffected

    def test_faceless_frame_fail_policy_isolated_to_arc_sim(self, backend_client):
        frames = list(sample_video().frames)
        frames[2] = Image.filled(6, 6, (0, 0, 0))  # mock treats all-zero as faceless
        video = dataclasses.replace(sample_video(), frames=tuple(frames))
        cfg = MetricConfig(faceless_frame_policy=FacelessFramePolicy.FAIL)
        row = evaluate_video(video, center_face_image(6), "a man walks",
                             metric_backends(backend_client), cfg)
        assert row.arc_sim is None
        assert "NoFacesInVideo" in row.errors["arc_sim"]
        for field in ("oc", "aq", "iq", "ms"):
            assert getattr(row, field) is not None, field

    def test_faceless_frame_skip_policy_keeps_metric(self, backend_client):
        frames = list(sample_video().frames)
        frames[2] = Image.filled(6, 6, (0, 0, 0))
        video = dataclasses.replace(sample_video(), frames=tuple(frames))
        row = evaluate_video(video, center_face_image(6), "a man walks",
                             metric_backends(backend_client), CFG)
        assert row.arc_sim is not None
        assert "arc_sim" not in row.errors

    def test_all_faceless_under_skip_reports_error(self, backend_client):
        frames = tuple(Image.filled(6, 6, (0, 0, 0)) for _ in range(4))
        video = dataclasses.replace(sample_video(), frames=frames)
        row = evaluate_video(video, center_face_image(6), "x",
                             metric_backends(backend_client), CFG)
        assert row.arc_sim is None
        assert "NoFacesInVideo" in row.errors["arc_sim"]

    def test_scores_within_documented_ranges(self, backend_client):
        row = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                             metric_backends(backend_client), CFG)
        assert -1.0 <= row.arc_sim <= 1.0
        assert -1.0 <= row.oc <= 1.0
        for field in ("aq", "iq", "ms"):
            assert 0.0 <= getattr(row, field) <= 1.0


class TestReport:
    def rows(self, backend_client):
        row = evaluate_video(sample_video(), center_face_image(6), "a man walks",
                             metric_backends(backend_client), CFG)
        other = evaluate_video(sample_video(4), center_face_image(6), "a man walks",
                               metric_backends(backend_client), CFG)
        return {"vid-a": row, "vid-b": other}

    def test_aggregate_recomputes_exactly(self, backend_client):
        report = build_report(self.rows(backend_client),
                              metric_backends(backend_client), CFG)
        assert report.is_self_consistent()
        assert report.aggregate == compute_aggregate(report.per_video)

    def test_dd_is_dynamic_proportion(self):
        rows = {
            "a": MetricRow(dynamic=True),
            "b": MetricRow(dynamic=True),
            "c": MetricRow(dynamic=False),
            "d": MetricRow(dynamic=False),
        }
        report = build_report(rows, None, CFG)
        assert report.aggregate["dd"] == 0.5

    def test_serialization_round_trip(self, backend_client):
        report = build_report(self.rows(backend_client),
                              metric_backends(backend_client), CFG)
        raw = serialize_report(report)
        loaded = deserialize_report(raw)
        assert loaded.aggregate == report.aggregate
        assert loaded.per_video == report.per_video
        assert serialize_report(loaded) == raw  # canonical

    def test_provenance_carries_models_and_thresholds(self, backend_client):
        report = build_report(self.rows(backend_client),
                              metric_backends(backend_client), CFG)
        doc = json.loads(serialize_report(report))
        assert doc["schema"] == "report/1"
        assert doc["provenance"]["config"]["dd_threshold"] == CFG.dd_threshold
        assert doc["provenance"]["model_ids"]["face_embedding"] == "mock"

    def test_aggregate_with_gaps_uses_present_rows(self):
        rows = {
            "a": MetricRow(arc_sim=0.5, dynamic=True),
            "b": MetricRow(arc_sim=None, dynamic=None,
                           errors={"arc_sim": "backend missing"}),
        }
        aggregate = compute_aggregate(rows)
        assert aggregate["arc_sim"] == 0.5
        assert aggregate["dd"] == 1.0
        assert aggregate["oc"] is None

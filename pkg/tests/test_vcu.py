import dataclasses
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagegen.media import Image
from stagegen.vcu import (
    VCU,
    EmptyPrompt,
    FrameSlot,
    InvalidImage,
    InvalidVcu,
    MalformedPayload,
    MaskPlane,
    SchemaVersionUnsupported,
    TaskKind,
    ViolationKind,
    ZeroLength,
    build_i2v_vcu,
    build_r2v_vcu,
    deserialize_vcu,
    serialize_vcu,
    validate,
)


def solid(width=8, height=8, color=(10, 20, 30)):
    return Image.filled(width, height, color)


def random_image(rng, max_side=24):
    w = rng.randint(1, max_side)
    h = rng.randint(1, max_side)
    channels = rng.choice([3, 4])
    data = bytes(rng.randrange(256) for _ in range(w * h * channels))
    return Image(w, h, channels, data)


class TestBuilders:
    def test_i2v_layout_n3(self):
        vcu = build_i2v_vcu(solid(512, 512), 3, "a man walks")
        assert len(vcu.frames) == 4
        assert [f.is_given for f in vcu.frames] == [True, False, False, False]
        assert list(vcu.masks) == [
            MaskPlane.PRESERVE,
            MaskPlane.GENERATE,
            MaskPlane.GENERATE,
            MaskPlane.GENERATE,
        ]
        assert (vcu.height, vcu.width) == (512, 512)
        assert vcu.task is TaskKind.I2V

    def test_i2v_minimal_n1(self):
        vcu = build_i2v_vcu(solid(64, 64), 1, "x")
        assert len(vcu.frames) == 2
        assert list(vcu.masks) == [MaskPlane.PRESERVE, MaskPlane.GENERATE]

    def test_i2v_rejects_n0(self):
        with pytest.raises(ZeroLength):
            build_i2v_vcu(solid(512, 512), 0, "x")

    def test_i2v_rejects_empty_prompt(self):
        with pytest.raises(EmptyPrompt):
            build_i2v_vcu(solid(), 3, "   ")

    def test_i2v_rejects_broken_image(self):
        bad = Image(4, 4, 3, b"\x00" * 5)
        with pytest.raises(InvalidImage):
            build_i2v_vcu(bad, 3, "x")

    def test_r2v_layout_n16(self):
        vcu = build_r2v_vcu(solid(256, 256), 16, "she dances")
        assert len(vcu.frames) == 17
        assert vcu.frames[0].is_given and not any(f.is_given for f in vcu.frames[1:])
        assert vcu.task is TaskKind.R2V

    def test_r2v_rejects_n0(self):
        with pytest.raises(ZeroLength):
            build_r2v_vcu(solid(), 0, "x")

    def test_task_tags_disjoint(self):
        i2v = build_i2v_vcu(solid(), 2, "x")
        r2v = build_r2v_vcu(solid(), 2, "x")
        assert i2v.task != r2v.task


class TestValidate:
    def test_well_formed_is_clean(self):
        assert validate(build_i2v_vcu(solid(), 3, "a man walks")) == []

    def test_mask_frame_mismatch_at_zero(self):
        vcu = build_i2v_vcu(solid(), 2, "x")
        broken = dataclasses.replace(
            vcu, masks=(MaskPlane.GENERATE,) + vcu.masks[1:]
        )
        violations = validate(broken)
        assert [(v.kind, v.index) for v in violations] == [
            (ViolationKind.MASK_FRAME_MISMATCH, 0)
        ]

    def test_length_mismatch(self):
        vcu = build_i2v_vcu(solid(), 3, "x")
        broken = dataclasses.replace(vcu, masks=vcu.masks[:3])
        kinds = [v.kind for v in validate(broken)]
        assert kinds == [ViolationKind.LENGTH_MISMATCH]

    def test_empty_text(self):
        vcu = build_i2v_vcu(solid(), 1, "x")
        broken = dataclasses.replace(vcu, text="")
        assert [v.kind for v in validate(broken)] == [ViolationKind.EMPTY_TEXT]

    def test_frame_dimension_mismatch(self):
        vcu = build_i2v_vcu(solid(8, 8), 1, "x")
        odd = FrameSlot.given(solid(4, 4))
        broken = dataclasses.replace(vcu, frames=(odd,) + vcu.frames[1:])
        assert [(v.kind, v.index) for v in validate(broken)] == [
            (ViolationKind.FRAME_DIMENSION_MISMATCH, 0)
        ]

    def test_violation_order_is_deterministic(self):
        vcu = build_i2v_vcu(solid(8, 8), 2, "x")
        broken = dataclasses.replace(
            vcu,
            text="",
            masks=(MaskPlane.GENERATE,) + vcu.masks[1:],
        )
        kinds = [v.kind for v in validate(broken)]
        assert kinds == [ViolationKind.MASK_FRAME_MISMATCH, ViolationKind.EMPTY_TEXT]

    def test_never_raises(self):
        junk = VCU(text="", frames=(FrameSlot.given(Image(2, 2, 3, b"")),),
                   masks=(), height=9, width=9)
        assert validate(junk)  # reports, does not throw


class TestSerialization:
    def test_round_trip_deep_equality(self):
        rng = random.Random(7)
        vcu = build_i2v_vcu(random_image(rng), 3, "a man walks")
        assert deserialize_vcu(serialize_vcu(vcu)) == vcu

    def test_repeated_serialization_is_canonical(self):
        vcu = build_i2v_vcu(solid(16, 16, (200, 3, 90)), 4, "café déjà vu ☕")
        first = serialize_vcu(vcu)
        assert first == serialize_vcu(vcu)
        assert serialize_vcu(deserialize_vcu(first)) == first

    def test_wire_key_order(self):
        vcu = build_r2v_vcu(solid(4, 4), 1, "x")
        doc = json.loads(serialize_vcu(vcu).decode("utf-8"))
        assert list(doc.keys()) == [
            "schema", "task", "text", "height", "width", "frames", "masks",
        ]
        assert doc["schema"] == "vcu/1"
        assert doc["task"] == "r2v"
        assert doc["frames"][0]["kind"] == "given"
        assert doc["frames"][1] == {"kind": "empty"}
        assert doc["masks"] == ["preserve", "generate"]

    def test_truncated_payload_rejected(self):
        raw = serialize_vcu(build_i2v_vcu(solid(), 2, "x"))
        with pytest.raises(MalformedPayload):
            deserialize_vcu(raw[: len(raw) // 2])

    def test_unknown_schema_version_rejected(self):
        raw = serialize_vcu(build_i2v_vcu(solid(), 2, "x"))
        doc = json.loads(raw)
        doc["schema"] = "vcu/999"
        with pytest.raises(SchemaVersionUnsupported):
            deserialize_vcu(json.dumps(doc).encode())

    def test_serialize_requires_valid_unit(self):
        vcu = build_i2v_vcu(solid(), 2, "x")
        broken = dataclasses.replace(vcu, text="")
        with pytest.raises(InvalidVcu):
            serialize_vcu(broken)

    def test_mask_frame_corruption_rejected_on_decode(self):
        raw = serialize_vcu(build_i2v_vcu(solid(), 2, "x"))
        doc = json.loads(raw)
        doc["masks"][0] = "generate"
        with pytest.raises(MalformedPayload):
            deserialize_vcu(json.dumps(doc).encode())


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=16),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    prompt=st.text(min_size=1).filter(lambda s: s.strip()),
)
def test_builder_invariants_and_round_trip(n, seed, prompt):
    rng = random.Random(seed)
    image = random_image(rng, max_side=12)
    vcu = build_i2v_vcu(image, n, prompt)
    assert validate(vcu) == []
    assert sum(1 for m in vcu.masks if m is MaskPlane.PRESERVE) == 1
    assert vcu.masks[0] is MaskPlane.PRESERVE
    assert sum(1 for m in vcu.masks if m is MaskPlane.GENERATE) == n
    assert all(f.is_given == (m is MaskPlane.PRESERVE)
               for f, m in zip(vcu.frames, vcu.masks))
    assert deserialize_vcu(serialize_vcu(vcu)) == vcu

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagegen.prompts import (
    AllEntitiesExcluded,
    EntityCategory,
    ExclusionReason,
    MalformedLlmOutput,
    NoEntitiesFound,
    RawPrompt,
    SpatialEntity,
    SpatialPrompt,
    SubjectRole,
    apply_spatial_filters,
    extract_spatial_entities,
    render_spatial,
)

SA = EntityCategory.SUBJECT_ATTRIBUTE
FC = EntityCategory.FACE_CLOSEUP
CL = EntityCategory.CLOTHING
EN = EntityCategory.ENVIRONMENT
OT = EntityCategory.OTHER
PRIM = SubjectRole.PRIMARY
BACK = SubjectRole.BACKGROUND


class TestExtraction:
    def test_station_sentence(self):
        raw = RawPrompt(
            "A young man in a red jacket runs through a crowded train station, "
            "sneakers splashing"
        )
        entities = extract_spatial_entities(raw, llm=None)
        found = {(e.category, e.text, e.subject_role) for e in entities}
        assert (CL, "red jacket", PRIM) in found
        assert (EN, "crowded train station", PRIM) in found
        assert (OT, "sneakers splashing", PRIM) in found
        assert (SA, "young man", PRIM) in found

    def test_empty_prompt_rejected_by_type(self):
        with pytest.raises(ValueError):
            RawPrompt("   ")

    def test_minimal_face_prompt(self):
        entities = extract_spatial_entities(RawPrompt("a face"), llm=None)
        assert any(e.category in (FC, SA) for e in entities)

    def test_second_person_becomes_background(self):
        entities = extract_spatial_entities(
            RawPrompt("an old woman watches a girl in the park"), llm=None
        )
        roles = {e.text: e.subject_role for e in entities if e.category is SA}
        assert roles["old woman"] is PRIM
        assert roles["girl"] is BACK

    def test_possessive_keeps_primary(self):
        entities = extract_spatial_entities(
            RawPrompt("a man hugs his grandmother"), llm=None
        )
        roles = {e.text: e.subject_role for e in entities if e.category is SA}
        assert roles == {"man": PRIM, "grandmother": PRIM}

    def test_no_lexicon_hits(self):
        with pytest.raises(NoEntitiesFound):
            extract_spatial_entities(RawPrompt("zzz qqq floop"), llm=None)


class ScriptedLlm:
    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, prompt):
        self.prompts.append(prompt)
        return self.replies.pop(0)


class TestLlmPath:
    GOOD = "entity: subject_attribute | primary | young man\nentity: clothing | primary | red jacket"

    def test_parses_structured_reply(self):
        llm = ScriptedLlm([self.GOOD])
        entities = extract_spatial_entities(RawPrompt("a young man"), llm)
        assert entities == [
            SpatialEntity(SA, "young man", PRIM),
            SpatialEntity(CL, "red jacket", PRIM),
        ]

    def test_retries_once_on_malformed(self):
        llm = ScriptedLlm(["%%% garbage %%%", self.GOOD])
        entities = extract_spatial_entities(RawPrompt("a young man"), llm)
        assert len(entities) == 2
        assert len(llm.prompts) == 2
        assert "STRICT" in llm.prompts[1]

    def test_two_malformed_replies_fail(self):
        llm = ScriptedLlm(["garbage", "entity: bogus_category | primary | x"])
        with pytest.raises(MalformedLlmOutput):
            extract_spatial_entities(RawPrompt("a young man"), llm)

    def test_unknown_role_is_malformed(self):
        llm = ScriptedLlm(["entity: clothing | protagonist | red jacket"] * 2)
        with pytest.raises(MalformedLlmOutput):
            extract_spatial_entities(RawPrompt("x man"), llm)


class TestFilters:
    def test_footwear_excluded(self):
        prompt = apply_spatial_filters([
            SpatialEntity(OT, "sneakers", PRIM),
            SpatialEntity(SA, "young man", PRIM),
        ])
        assert [e.text for e in prompt.entities] == ["young man"]
        assert [(x.entity.text, x.reason) for x in prompt.excluded] == [
            ("sneakers", ExclusionReason.IRRELEVANT_DETAIL)
        ]

    def test_background_character_excluded(self):
        prompt = apply_spatial_filters([
            SpatialEntity(SA, "old woman", BACK),
            SpatialEntity(SA, "girl", PRIM),
        ])
        assert [e.text for e in prompt.entities] == ["girl"]
        assert [(x.entity.text, x.reason) for x in prompt.excluded] == [
            ("old woman", ExclusionReason.BACKGROUND_CHARACTER)
        ]

    def test_background_scenery_survives(self):
        prompt = apply_spatial_filters([
            SpatialEntity(EN, "park", BACK),
            SpatialEntity(SA, "girl", PRIM),
        ])
        assert [e.text for e in prompt.entities] == ["park", "girl"]

    def test_all_excluded_raises(self):
        with pytest.raises(AllEntitiesExcluded):
            apply_spatial_filters([SpatialEntity(OT, "shoes and socks", PRIM)])

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            apply_spatial_filters([])


CATEGORIES = list(EntityCategory)
WORDS = ["man", "girl", "jacket", "park", "shoes", "feet", "guitar", "face",
         "woman", "hat", "street", "dog"]


@st.composite
def entity_lists(draw):
    size = draw(st.integers(min_value=1, max_value=8))
    entities = []
    for _ in range(size):
        texts = draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=3))
        entities.append(SpatialEntity(
            category=draw(st.sampled_from(CATEGORIES)),
            text=" ".join(texts),
            subject_role=draw(st.sampled_from([PRIM, BACK])),
        ))
    return entities


@settings(max_examples=150, deadline=None)
@given(entity_lists())
def test_filter_idempotent_and_order_preserving(entities):
    try:
        once = apply_spatial_filters(entities)
    except AllEntitiesExcluded:
        return
    twice = apply_spatial_filters(list(once.entities))
    assert twice.entities == once.entities
    assert twice.excluded == ()
    # survivors form a subsequence of the input
    it = iter(entities)
    assert all(survivor in it for survivor in once.entities)
    assert all(e.subject_role is PRIM or e.category not in (SA, FC)
               for e in once.entities)


class TestRender:
    def test_subject_leads(self):
        prompt = SpatialPrompt(entities=(
            SpatialEntity(CL, "red jacket", PRIM),
            SpatialEntity(SA, "young man", PRIM),
        ))
        rendered = render_spatial(prompt).rendered
        assert rendered.startswith("young man")
        assert rendered.index("young man") < rendered.index("red jacket")

    def test_single_face_entity_is_pure_template(self):
        prompt = SpatialPrompt(entities=(SpatialEntity(FC, "a face", PRIM),))
        assert render_spatial(prompt).rendered == "a face, rendered in sharp facial detail"

    def test_render_is_deterministic(self):
        prompt = SpatialPrompt(entities=(
            SpatialEntity(SA, "young man", PRIM),
            SpatialEntity(EN, "park", PRIM),
            SpatialEntity(OT, "guitar", PRIM),
        ))
        assert render_spatial(prompt).rendered == render_spatial(prompt).rendered

    def test_category_ordering(self):
        prompt = SpatialPrompt(entities=(
            SpatialEntity(OT, "guitar", PRIM),
            SpatialEntity(EN, "park", PRIM),
            SpatialEntity(CL, "blue dress", PRIM),
            SpatialEntity(SA, "woman", PRIM),
        ))
        rendered = render_spatial(prompt).rendered
        order = [rendered.index(t) for t in ("woman", "blue dress", "park", "guitar")]
        assert order == sorted(order)

    def test_subjectless_prompt_gets_default_subject(self):
        prompt = SpatialPrompt(entities=(SpatialEntity(EN, "park", PRIM),))
        rendered = render_spatial(prompt).rendered
        assert rendered.startswith("a person")

import itertools
import logging

import pytest
from hypothesis import given, strategies as st

from thinkalign.backends import BackendError, MockJudgeBackend
from thinkalign.langid import DISPLAY_NAMES
from thinkalign.parsing import ParsedResponse
from thinkalign.rewards import (
    RewardBreakdown,
    build_judge_prompt,
    compose_overall,
    cta_reward,
    judge_template,
    lc_reward,
    parse_judge_score,
    run_judge,
    score_rollout,
)

from conftest import make_response, make_segment


# --- composition ------------------------------------------------------------


def test_truth_table_exhaustive():
    for fmt, lc, acc, cta in itertools.product((0, -1), (0, -1), (0, 1), (0.0, 0.5, 1.0)):
        overall = compose_overall(fmt, lc, acc, cta)
        if fmt == -1 or lc == -1:
            assert overall == -1.0
        else:
            assert overall == acc * (1.0 + cta)


def test_missing_cta_counts_as_zero():
    assert compose_overall(0, 0, 1, None) == 1.0
    assert compose_overall(0, 0, 0, None) == 0.0


@given(
    st.sampled_from((0, -1)),
    st.sampled_from((0, -1)),
    st.sampled_from((0, 1)),
    st.one_of(st.none(), st.floats(0.0, 1.0)),
)
def test_overall_image(fmt, lc, acc, cta):
    overall = compose_overall(fmt, lc, acc, cta)
    assert overall == -1.0 or overall == 0.0 or 1.0 <= overall <= 2.0


# --- language consistency reward ---------------------------------------------


def test_lc_reward_consistent(detector):
    parsed = ParsedResponse(think=make_segment("fr", 0), answer=make_segment("fr", 3))
    assert lc_reward(parsed, "fr", detector) == 0


def test_lc_reward_wrong_language_think(detector):
    parsed = ParsedResponse(think=make_segment("en", 0), answer=make_segment("fr", 3))
    assert lc_reward(parsed, "fr", detector) == -1


def test_lc_reward_mixed_think(detector):
    think = make_segment("fr", 0) + "\n" + make_segment("en", 0)
    parsed = ParsedResponse(think=think, answer=make_segment("fr", 3))
    assert lc_reward(parsed, "fr", detector) == -1


def test_lc_reward_short_segment_is_minus_one(detector):
    parsed = ParsedResponse(think=make_segment("fr", 0), answer="Oui.")
    assert lc_reward(parsed, "fr", detector) == -1


# --- judge prompt -------------------------------------------------------------


def test_template_has_placeholders():
    template = judge_template()
    assert template.count("[en-question]") == 1
    assert template.count("[en-think]") == 1
    assert template.count("[x-think]") == 1
    assert "[target]" in template
    assert "<score>0.925</score>" in template


def test_build_judge_prompt_substitutes():
    prompt = build_judge_prompt("fr", "QQ", "TENP", "TFRP")
    assert "French Thought Process" in prompt
    assert "QQ" in prompt and "TENP" in prompt and "TFRP" in prompt
    assert "[en-question]" not in prompt
    assert "[x-think]" not in prompt
    assert "[target]" not in prompt


def test_build_judge_prompt_names_thai():
    assert "Thai" in build_judge_prompt("th", "q", "a", "b")


def test_prompt_fidelity_against_template():
    # reverse the substitutions; the frame must be byte-identical to the asset
    prompt = build_judge_prompt("pt", "AXQXA", "BXTXB", "CXXXC")
    rebuilt = (
        prompt.replace("AXQXA", "[en-question]")
        .replace("BXTXB", "[en-think]")
        .replace("CXXXC", "[x-think]")
        .replace(DISPLAY_NAMES["pt"], "[target]")
    )
    assert rebuilt == judge_template()


def test_substitution_is_single_pass():
    # placeholder text inside a payload must survive verbatim
    prompt = build_judge_prompt("fr", "q", "alpha [x-think] beta", "GAMMA")
    assert "alpha [x-think] beta" in prompt
    assert prompt.count("GAMMA") == 1


def test_build_judge_prompt_rejects_english():
    with pytest.raises(ValueError):
        build_judge_prompt("en", "q", "a", "b")


def test_build_judge_prompt_rejects_unknown_code():
    with pytest.raises(ValueError):
        build_judge_prompt("xx", "q", "a", "b")


def test_build_judge_prompt_rejects_empty_inputs():
    for bad in (("", "a", "b"), ("q", "", "b"), ("q", "a", "")):
        with pytest.raises(ValueError):
            build_judge_prompt("fr", *bad)


# --- judge score parsing -------------------------------------------------------


def test_parse_judge_score_exemplar():
    assert parse_judge_score("<score>0.925</score>") == 0.925


def test_parse_judge_score_clamps():
    assert parse_judge_score("analysis first. <score>1.2</score>") == 1.0
    assert parse_judge_score("<score>-0.3</score>") == 0.0


def test_parse_judge_score_failures():
    assert parse_judge_score("I think the score is high.") is None
    assert parse_judge_score("<score>abc</score>") is None
    assert parse_judge_score("<score></score>") is None
    assert parse_judge_score("<score>nan</score>") is None
    assert parse_judge_score("<score>inf</score>") is None


def test_parse_judge_score_last_pair_wins():
    assert parse_judge_score("<score>0.2</score> wait <score>0.8</score>") == 0.8


def test_parse_judge_score_multiline():
    assert parse_judge_score("line one\n<score>\n0.5\n</score>\ntrailing") == 0.5


@given(st.floats(-5, 5))
def test_parse_judge_score_clamp_range(x):
    score = parse_judge_score(f"<score>{x}</score>")
    assert score is not None and 0.0 <= score <= 1.0


# --- judge orchestration --------------------------------------------------------


def test_run_judge_first_try():
    judge = MockJudgeBackend("<score>0.7</score>")
    exchange = run_judge("prompt", judge)
    assert exchange.score == 0.7
    assert exchange.attempts == 1
    assert judge.call_count == 1


def test_run_judge_retries_once_on_garbage():
    judge = MockJudgeBackend(["garbage", "<score>0.4</score>"])
    exchange = run_judge("prompt", judge)
    assert exchange.score == 0.4
    assert exchange.attempts == 2
    assert judge.call_count == 2


def test_run_judge_gives_up_after_two(caplog):
    judge = MockJudgeBackend(["nope", "still nope"])
    with caplog.at_level(logging.WARNING, logger="thinkalign.rewards"):
        exchange = run_judge("prompt", judge)
    assert exchange.score is None
    assert exchange.attempts == 2
    assert any("unparseable" in r.message for r in caplog.records)


def test_cta_reward_scripted():
    assert cta_reward("pensée", "thinking", "Q", "fr", MockJudgeBackend("<score>1.0</score>")) == 1.0
    assert cta_reward("pensée", "thinking", "Q", "fr", MockJudgeBackend("<score>0.0</score>")) == 0.0


def test_cta_reward_garbage_falls_back_to_zero():
    judge = MockJudgeBackend(["??", "!!"])
    assert cta_reward("pensée", "thinking", "Q", "fr", judge) == 0.0
    assert judge.call_count == 2


# --- rollout scoring --------------------------------------------------------------


def test_score_rollout_malformed():
    b = score_rollout("no tags here", "fr", "4")
    assert (b.format, b.lc, b.acc, b.cta, b.overall) == (-1, -1, 0, None, -1.0)


def test_score_rollout_wrong_answer_no_judge_call(detector):
    judge = MockJudgeBackend("<score>1.0</score>")
    raw = make_response("fr", "4", mode="wrong_answer")
    b = score_rollout(raw, "fr", "4", en_reference_think="ref", judge=judge, question="Q", detector=detector)
    assert (b.format, b.lc, b.acc) == (0, 0, 0)
    assert b.cta is None
    assert b.overall == 0.0
    assert judge.call_count == 0


def test_score_rollout_judge_path(detector):
    judge = MockJudgeBackend("<score>0.925</score>")
    raw = make_response("fr", "4")
    b = score_rollout(raw, "fr", "4", en_reference_think="ref", judge=judge, question="Q", detector=detector)
    assert (b.format, b.lc, b.acc) == (0, 0, 1)
    assert b.cta == 0.925
    assert b.overall == pytest.approx(1.925)
    assert judge.call_count == 1


def test_score_rollout_correct_without_reference(detector):
    raw = make_response("ja", "7")
    b = score_rollout(raw, "ja", "7", judge=MockJudgeBackend(), question="Q", detector=detector)
    assert b.acc == 1 and b.cta is None and b.overall == 1.0


def test_score_rollout_english_never_judged(detector):
    judge = MockJudgeBackend("<score>1.0</score>")
    raw = make_response("en", "4")
    b = score_rollout(raw, "en", "4", en_reference_think="ref", judge=judge, question="Q", detector=detector)
    assert b.overall == 1.0 and b.cta is None
    assert judge.call_count == 0


def test_score_rollout_requires_question_for_judge(detector):
    raw = make_response("fr", "4")
    with pytest.raises(ValueError):
        score_rollout(raw, "fr", "4", en_reference_think="ref", judge=MockJudgeBackend(), detector=detector)


def test_score_rollout_propagates_backend_error(detector):
    def boom(prompt):
        raise BackendError("judge down")

    raw = make_response("fr", "4")
    with pytest.raises(BackendError):
        score_rollout(
            raw, "fr", "4", en_reference_think="ref", judge=MockJudgeBackend(boom), question="Q", detector=detector
        )


def test_score_rollout_language_gate(detector):
    raw = make_response("fr", "4", mode="wrong_language")
    judge = MockJudgeBackend()
    b = score_rollout(raw, "fr", "4", en_reference_think="ref", judge=judge, question="Q", detector=detector)
    assert (b.format, b.lc) == (0, -1)
    assert b.overall == -1.0
    assert b.cta is None
    assert judge.call_count == 0


def test_breakdown_to_dict():
    b = RewardBreakdown(format=0, lc=0, acc=1, cta=0.5, overall=1.5)
    assert b.to_dict() == {"format": 0, "lc": 0, "acc": 1, "cta": 0.5, "overall": 1.5}

"""The reward stack: format, language consistency, accuracy, thinking
alignment, and their composition into a single scalar.

Composition rule: a failed format or language gate yields -1 outright;
otherwise overall = acc * (1 + cta), so the image is {-1} + {0} + [1, 2].
The judge is only consulted when it can change the outcome (gates passed,
answer correct, English reference available), which the mocks assert via
call counting.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Protocol

from thinkalign.langid import DISPLAY_NAMES, EmptyTextError, LanguageDetector, default_detector
from thinkalign.mathverify import accuracy_reward
from thinkalign.parsing import FormatError, ParsedResponse, RawResponse, parse_response

log = logging.getLogger(__name__)


class JudgeBackend(Protocol):
    def judge(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class RewardBreakdown:
    """Component rewards plus the composed scalar.

    cta is None whenever the judge was not consulted (gate failed, wrong
    answer, no reference, or judge disabled). format/lc are -1/0 flags,
    acc is 0/1; an unparseable output reports format=-1, lc=-1, acc=0.
    """

    format: int
    lc: int
    acc: int
    cta: Optional[float]
    overall: float

    def to_dict(self) -> dict:
        return {
            "format": self.format,
            "lc": self.lc,
            "acc": self.acc,
            "cta": self.cta,
            "overall": self.overall,
        }


@dataclass(frozen=True)
class JudgeExchange:
    """One judge interaction: prompt, raw reply of the final attempt,
    parsed score (None = unparseable), and how many attempts were made."""

    prompt: str
    reply: str
    score: Optional[float]
    attempts: int


def compose_overall(format_r: int, lc_r: int, acc_r: int, cta: Optional[float] = None) -> float:
    """Compose component rewards into the overall scalar.

    -1 when either gate failed; otherwise acc * (1 + cta), with a missing
    cta counting as 0.
    """
    if format_r == -1 or lc_r == -1:
        return -1.0
    return float(acc_r) * (1.0 + (cta if cta is not None else 0.0))


def lc_reward(parsed: ParsedResponse, lang: str, detector: Optional[LanguageDetector] = None) -> int:
    """Language-consistency reward: 0 iff both think and answer are
    single-language in `lang`; -1 otherwise, including segments too short
    to carry language evidence."""
    d = detector or default_detector()
    try:
        ok = d.is_consistent(parsed.think, lang) and d.is_consistent(parsed.answer, lang)
    except EmptyTextError:
        return -1
    return 0 if ok else -1


_TEMPLATE_CACHE: Optional[str] = None
_PLACEHOLDER_RE = re.compile(r"\[target\]|\[en-question\]|\[en-think\]|\[x-think\]")


def judge_template() -> str:
    """The judge instruction template shipped with the package."""
    global _TEMPLATE_CACHE
    if _TEMPLATE_CACHE is None:
        _TEMPLATE_CACHE = (
            resources.files("thinkalign.assets").joinpath("judge_template.txt").read_text(encoding="utf-8")
        )
    return _TEMPLATE_CACHE


def build_judge_prompt(target_lang: str, en_question: str, en_think: str, x_think: str) -> str:
    """Fill the judge template placeholders in a single pass.

    Single-pass substitution guarantees payload text is never re-scanned
    for placeholders. The target language is named by its English exonym.

    Raises:
        ValueError: empty inputs, target_lang == "en" (alignment is
            defined against English only), or an unknown language code.
    """
    if target_lang == "en":
        raise ValueError("alignment is judged against English; target language must differ")
    if target_lang not in DISPLAY_NAMES:
        raise ValueError(f"unknown language code: {target_lang!r}")
    if not en_question or not en_think or not x_think:
        raise ValueError("judge prompt inputs must be non-empty")
    mapping = {
        "[target]": DISPLAY_NAMES[target_lang],
        "[en-question]": en_question,
        "[en-think]": en_think,
        "[x-think]": x_think,
    }
    return _PLACEHOLDER_RE.sub(lambda m: mapping[m.group(0)], judge_template())


_SCORE_RE = re.compile(r"<score>(.*?)</score>", re.DOTALL)


def parse_judge_score(reply: str) -> Optional[float]:
    """Extract the decimal between the last <score></score> pair, clamped
    to [0, 1]. None when no well-formed, numeric score is present."""
    matches = _SCORE_RE.findall(reply)
    if not matches:
        return None
    try:
        value = float(matches[-1].strip())
    except ValueError:
        return None
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return min(1.0, max(0.0, value))


def run_judge(prompt: str, judge: JudgeBackend, max_parse_attempts: int = 2) -> JudgeExchange:
    """Call the judge, retrying once on an unparseable reply.

    Backend errors propagate (the judge being unreachable is different
    from it answering nonsense).
    """
    reply = ""
    for attempt in range(1, max_parse_attempts + 1):
        reply = judge.judge(prompt)
        score = parse_judge_score(reply)
        if score is not None:
            return JudgeExchange(prompt=prompt, reply=reply, score=score, attempts=attempt)
    log.warning("judge reply unparseable after %d attempts; scoring 0", max_parse_attempts)
    return JudgeExchange(prompt=prompt, reply=reply, score=None, attempts=max_parse_attempts)


def cta_reward(x_think: str, en_think: str, en_question: str, lang: str, judge: JudgeBackend) -> float:
    """Thinking-alignment reward in [0, 1] from the judge.

    One retry on an unparseable reply, then a conservative 0. Backend
    (unreachable-judge) errors propagate to the caller.
    """
    prompt = build_judge_prompt(lang, en_question, en_think, x_think)
    exchange = run_judge(prompt, judge)
    return exchange.score if exchange.score is not None else 0.0


def score_rollout(
    raw: RawResponse | str,
    lang: str,
    gold: str,
    en_reference_think: Optional[str] = None,
    judge: Optional[JudgeBackend] = None,
    *,
    question: str = "",
    detector: Optional[LanguageDetector] = None,
) -> RewardBreakdown:
    """Score one rollout end to end.

    Computes format -> lc -> acc, then consults the judge only when the
    gates passed, the answer is correct, a reference thinking sequence is
    available, the target language is not English, and a judge handle was
    supplied. `question` feeds the judge prompt's English problem slot and
    must be non-empty whenever the judge could be consulted.
    """
    try:
        parsed = parse_response(raw)
    except FormatError:
        return RewardBreakdown(format=-1, lc=-1, acc=0, cta=None, overall=-1.0)
    lc = lc_reward(parsed, lang, detector)
    acc = accuracy_reward(parsed, gold)
    cta: Optional[float] = None
    if lc == 0 and acc == 1 and en_reference_think and judge is not None and lang != "en":
        if not question:
            raise ValueError("question text is required for judge scoring")
        cta = cta_reward(parsed.think, en_reference_think, question, lang, judge)
    return RewardBreakdown(
        format=0,
        lc=lc,
        acc=acc,
        cta=cta,
        overall=compose_overall(0, lc, acc, cta),
    )


def score_candidate(
    text: str,
    lang: str,
    gold: str,
    detector: Optional[LanguageDetector] = None,
):
    """Judge-free scoring used by data construction and evaluation.

    Returns a ScoredCandidate (text, parsed-or-None, breakdown); imported
    lazily to keep the forge module optional here.
    """
    from thinkalign.forge import ScoredCandidate

    try:
        parsed = parse_response(text)
    except FormatError:
        return ScoredCandidate(
            text=text,
            parsed=None,
            breakdown=RewardBreakdown(format=-1, lc=-1, acc=0, cta=None, overall=-1.0),
        )
    lc = lc_reward(parsed, lang, detector)
    acc = accuracy_reward(parsed, gold)
    return ScoredCandidate(
        text=text,
        parsed=parsed,
        breakdown=RewardBreakdown(format=0, lc=lc, acc=acc, cta=None, overall=compose_overall(0, lc, acc, None)),
    )

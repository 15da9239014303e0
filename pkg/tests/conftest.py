"""Shared test helpers.

The sentence pools under fixtures/sentences/ are hand-written, held out
from the n-gram profile training text, and are the source of every
language-correct response synthesized in tests. make_response builds
rollouts with controlled failure modes so scripted mock backends have
known per-candidate correctness.
"""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Tuple

import pytest

from thinkalign.backends import MockScript
from thinkalign.forge import QuestionPair
from thinkalign.langid import LanguageDetector

FIXTURES = Path(__file__).parent / "fixtures"
SENTENCE_DIR = FIXTURES / "sentences"
CORPUS_PATH = FIXTURES / "langid_corpus.jsonl"

# candidate failure modes cycled through the incorrect slots of a script
FAIL_MODES = ("wrong_answer", "bad_format", "wrong_language")


@pytest.fixture(scope="session")
def detector() -> LanguageDetector:
    return LanguageDetector()


@lru_cache(maxsize=None)
def sentences(lang: str) -> Tuple[str, ...]:
    lines = (SENTENCE_DIR / f"{lang}.txt").read_text(encoding="utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip())


def load_corpus() -> List[dict]:
    return [
        json.loads(line)
        for line in CORPUS_PATH.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def make_segment(lang: str, variant: int = 0, k: int = 2) -> str:
    """k consecutive pool sentences starting at a variant-specific offset."""
    pool = sentences(lang)
    return "\n".join(pool[(2 * variant + j) % len(pool)] for j in range(k))


def wrong_gold(gold: str) -> str:
    try:
        return str(int(gold) + 1)
    except ValueError:
        return gold + "0"


def make_response(lang: str, gold: str, mode: str = "ok", variant: int = 0) -> str:
    """A rollout in `lang` boxing `gold`, or a controlled failure.

    Modes: ok (fully correct), wrong_answer (boxes gold+1), bad_format
    (close tag removed), wrong_language (think segment in another
    language). Different variants use different pool sentences, so
    candidates within one script are pairwise distinct.
    """
    think_lang = lang
    boxed = gold
    if mode == "wrong_language":
        think_lang = "en" if lang != "en" else "fr"
    elif mode == "wrong_answer":
        boxed = wrong_gold(gold)
    elif mode not in ("ok", "bad_format"):
        raise ValueError(f"unknown mode {mode!r}")
    think = make_segment(think_lang, variant)
    answer = make_segment(lang, variant + 7)
    text = f"<think>\n{think}\n</think>\n{answer}\n\\boxed{{{boxed}}}"
    if mode == "bad_format":
        text = text.replace("</think>", "", 1)
    return text


def build_pairs(langs, per_lang: int) -> List[QuestionPair]:
    pairs = []
    for lang in langs:
        for i in range(per_lang):
            pairs.append(
                QuestionPair(
                    id=f"{lang}-{i:04d}",
                    lang=lang,
                    question=f"Problem {i} ({lang}): compute the total.",
                    question_en=f"Problem {i} ({lang}, English twin): compute the total.",
                    gold=str(3 + i % 97),
                )
            )
    return pairs


def _rotate(items: list, k: int) -> list:
    k %= len(items)
    return items[k:] + items[:k]


def candidate_modes(n_correct: int, n: int, rotation: int = 0) -> List[str]:
    modes = ["ok"] * n_correct + [FAIL_MODES[j % 3] for j in range(n - n_correct)]
    return _rotate(modes, rotation)


def scripted_modes(pair: QuestionPair, n: int) -> Tuple[List[str], List[str]]:
    """Deterministic per-pair correctness pattern keyed on the pair index.

    Ten-slot cycle: seven keepable patterns with varying correct counts,
    then one each of too_hard, too_easy, no_english_reference.
    """
    i = int(pair.id.rsplit("-", 1)[1])
    slot = i % 10
    if slot == 7:
        return candidate_modes(0, n, i), candidate_modes(2, n, i)
    if slot == 8:
        return candidate_modes(n, n), candidate_modes(1, n, i)
    if slot == 9:
        return candidate_modes(2, n, i), candidate_modes(0, n, i)
    x = candidate_modes(1 + i % (n - 1), n, i)
    en = candidate_modes(1 + i % n, n, i + 3)
    return x, en


def build_script(pairs, n: int, modes_fn=scripted_modes) -> MockScript:
    """A MockScript with known per-candidate correctness for every pair."""
    generation: Dict[str, List[str]] = {}
    for pair in pairs:
        x_modes, en_modes = modes_fn(pair, n)
        generation[pair.question] = [
            make_response(pair.lang, pair.gold, mode=m, variant=i) for i, m in enumerate(x_modes)
        ]
        generation[pair.question_en] = [
            make_response("en", pair.gold, mode=m, variant=i) for i, m in enumerate(en_modes)
        ]
    return MockScript(generation=generation)

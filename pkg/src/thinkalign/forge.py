"""Rejection-sampling construction of the RL question set.

For every question pair (q in language l, q_en in English) the generator
produces N candidates per side; a question is kept iff the model solves
the l-side sometimes but not always (0 < correct < N) and at least one
English candidate is fully correct, whose thinking segment becomes the
stored English reference. Everything else is recorded as a skip with a
reason, so entries + skips always partition the input.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Dict, List, Optional, Sequence, Tuple, Union

from thinkalign.backends import GenerationBackend
from thinkalign.langid import LANGUAGES, LanguageDetector
from thinkalign.parsing import ParsedResponse
from thinkalign.rewards import RewardBreakdown, score_candidate

log = logging.getLogger(__name__)

TOO_EASY = "too_easy"
TOO_HARD = "too_hard"
NO_ENGLISH_REFERENCE = "no_english_reference"
LANGUAGE_CAP = "language_cap"

SKIP_REASONS = (TOO_EASY, TOO_HARD, NO_ENGLISH_REFERENCE, LANGUAGE_CAP)


@dataclass(frozen=True)
class QuestionPair:
    """A question in language `lang` and its English twin."""

    id: str
    lang: str
    question: str
    question_en: str
    gold: str

    def __post_init__(self) -> None:
        if self.lang not in LANGUAGES or self.lang == "en":
            raise ValueError(f"pair language must be a non-English roster code, got {self.lang!r}")


@dataclass(frozen=True)
class ScoredCandidate:
    """One candidate output with its parse result and judge-free rewards."""

    text: str
    parsed: Optional[ParsedResponse]
    breakdown: RewardBreakdown


@dataclass(frozen=True)
class RlDatasetEntry:
    id: str
    lang: str
    question: str
    gold: str
    en_reference_think: str
    provenance: Dict[str, int]

    def to_json(self) -> str:
        record = {
            "id": self.id,
            "lang": self.lang,
            "question": self.question,
            "gold": self.gold,
            "en_reference_think": self.en_reference_think,
            "provenance": self.provenance,
        }
        return json.dumps(record, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class SkipRecord:
    id: str
    lang: str
    reason: str


@dataclass(frozen=True)
class ForgeConfig:
    candidates_n: int = 8
    per_language_cap: int = 3000
    max_workers: int = 4
    cache_english_candidates: bool = False

    def __post_init__(self) -> None:
        if self.candidates_n < 2:
            raise ValueError("candidates_n must be >= 2 for the selection window to exist")
        if self.per_language_cap < 1:
            raise ValueError("per_language_cap must be >= 1")
        if self.max_workers < 1:
            raise ValueError("max_workers must be >= 1")


@dataclass
class ForgeReport:
    """Tally of one forge pass; entries + skips partition the input."""

    total: int = 0
    kept: int = 0
    skipped: Dict[str, int] = field(default_factory=dict)
    per_language: Dict[str, int] = field(default_factory=dict)
    skip_records: List[SkipRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "skipped": dict(sorted(self.skipped.items())),
            "per_language": dict(sorted(self.per_language.items())),
        }


def correct_indices(candidates: Sequence[ScoredCandidate]) -> List[int]:
    """Indices of fully correct candidates: format ok, language consistent,
    answer right. This is the selection predicate of the rejection filter."""
    return [
        i
        for i, c in enumerate(candidates)
        if c.breakdown.format == 0 and c.breakdown.lc == 0 and c.breakdown.acc == 1
    ]


def select_pair(
    pair: QuestionPair,
    scored_x: Sequence[ScoredCandidate],
    scored_en: Sequence[ScoredCandidate],
    rng: Random,
) -> Union[RlDatasetEntry, SkipRecord]:
    """Apply the rejection-sampling keep/skip rule to one question pair.

    Keep iff 0 < |correct_x| < N and |correct_en| >= 1; the English
    reference think is drawn uniformly from the correct English
    candidates. Skips report too_hard (never solved), too_easy (always
    solved), or no_english_reference.
    """
    if len(scored_x) != len(scored_en) or not scored_x:
        raise ValueError("both candidate sets must be non-empty and equally sized")
    n = len(scored_x)
    cx = correct_indices(scored_x)
    if len(cx) == 0:
        return SkipRecord(pair.id, pair.lang, TOO_HARD)
    if len(cx) == n:
        return SkipRecord(pair.id, pair.lang, TOO_EASY)
    cen = correct_indices(scored_en)
    if not cen:
        return SkipRecord(pair.id, pair.lang, NO_ENGLISH_REFERENCE)
    pick = cen[rng.randrange(len(cen))]
    return RlDatasetEntry(
        id=pair.id,
        lang=pair.lang,
        question=pair.question,
        gold=pair.gold,
        en_reference_think=scored_en[pick].parsed.think,
        provenance={"n_correct_x": len(cx), "n_correct_en": len(cen), "n": n},
    )


def forge_dataset(
    pairs: Sequence[QuestionPair],
    generation: GenerationBackend,
    config: ForgeConfig = ForgeConfig(),
    rng: Optional[Random] = None,
    detector: Optional[LanguageDetector] = None,
    en_cache: Optional[Dict[str, List[str]]] = None,
) -> Tuple[List[RlDatasetEntry], ForgeReport]:
    """Run the rejection filter over all question pairs.

    Generation fans out over a bounded thread pool; scoring and selection
    run sequentially in input order, so rng consumption (and therefore
    output bytes) is deterministic for a given seed. The per-language cap
    keeps the first entries in input order and records the overflow under
    the language_cap skip reason. Selection consumes rng even for capped
    pairs, so the cap never shifts later draws.
    """
    rng = rng or Random(0)

    def generate_for(pair: QuestionPair) -> Tuple[List[str], List[str]]:
        x_texts = generation.generate_n(pair.question, config.candidates_n)
        if en_cache is not None and pair.id in en_cache:
            en_texts = en_cache[pair.id]
        else:
            en_texts = generation.generate_n(pair.question_en, config.candidates_n)
            if en_cache is not None:
                en_cache[pair.id] = en_texts
        return x_texts, en_texts

    if config.max_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            generated = list(pool.map(generate_for, pairs))
    else:
        generated = [generate_for(p) for p in pairs]

    entries: List[RlDatasetEntry] = []
    report = ForgeReport(total=len(pairs))
    reasons: Counter = Counter()
    per_language: Counter = Counter()
    for pair, (x_texts, en_texts) in zip(pairs, generated):
        scored_x = [score_candidate(t, pair.lang, pair.gold, detector) for t in x_texts]
        scored_en = [score_candidate(t, "en", pair.gold, detector) for t in en_texts]
        result = select_pair(pair, scored_x, scored_en, rng)
        if isinstance(result, RlDatasetEntry):
            if per_language[pair.lang] >= config.per_language_cap:
                result = SkipRecord(pair.id, pair.lang, LANGUAGE_CAP)
            else:
                per_language[pair.lang] += 1
                entries.append(result)
                continue
        reasons[result.reason] += 1
        report.skip_records.append(result)
    report.kept = len(entries)
    report.skipped = dict(reasons)
    report.per_language = dict(per_language)
    log.info("forge: kept %d of %d pairs (%s)", report.kept, report.total, report.skipped or "no skips")
    return entries, report


# ---------------------------------------------------------------------------
# file formats


def read_question_pairs(path) -> List[QuestionPair]:
    """Read question pairs from JSONL: {id, lang, question, question_en, gold}."""
    pairs = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        record = json.loads(line)
        try:
            pairs.append(
                QuestionPair(
                    id=str(record["id"]),
                    lang=record["lang"],
                    question=record["question"],
                    question_en=record["question_en"],
                    gold=str(record["gold"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}:{line_no}: bad question pair: {exc}") from exc
    return pairs


def write_dataset(entries: Sequence[RlDatasetEntry], path) -> None:
    Path(path).write_text("".join(e.to_json() + "\n" for e in entries), encoding="utf-8")


def read_dataset(path) -> List[RlDatasetEntry]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        entries.append(
            RlDatasetEntry(
                id=str(record["id"]),
                lang=record["lang"],
                question=record["question"],
                gold=record["gold"],
                en_reference_think=record["en_reference_think"],
                provenance=record["provenance"],
            )
        )
    return entries

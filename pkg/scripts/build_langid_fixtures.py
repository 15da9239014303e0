"""Compose and freeze the language-ID fixture corpus.

Reads hand-written sentence pools from tests/fixtures/sentences/<lang>.txt
and assembles:

  * 20 single-language paragraphs per language (>= 200 chars each), built by
    rotating through the pool with a stride of 7 so every paragraph starts at
    a different sentence;
  * 40 mixed-language items: 20 language pairs x 2 variants, interleaving two
    sentences of each side.

Sentences are joined with newlines so every language (including Thai, which
uses no terminal punctuation) splits cleanly at sentence level.

The script verifies the assembled corpus against the detector and refuses to
freeze a corpus that misses the agreement bars, so the checked-in JSONL is
known-good by construction.

Usage: python3 scripts/build_langid_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from thinkalign import langid  # noqa: E402

SENTENCE_DIR = ROOT / "tests" / "fixtures" / "sentences"
OUT_PATH = ROOT / "tests" / "fixtures" / "langid_corpus.jsonl"

PARAGRAPHS_PER_LANGUAGE = 20
MIN_PARAGRAPH_CHARS = 200
STRIDE = 7  # coprime with the pool size, so start offsets never repeat

# Two variants per pair.  Script-unique pairings dominate; Latin/Latin pairs
# are limited to combinations the n-gram profiles separate cleanly.
MIXED_PAIRS = [
    ("en", "fr"),
    ("en", "es"),
    ("en", "vi"),
    ("fr", "vi"),
    ("pt", "vi"),
    ("en", "ja"),
    ("en", "ko"),
    ("en", "th"),
    ("en", "ar"),
    ("en", "zh"),
    ("fr", "ja"),
    ("es", "ko"),
    ("pt", "th"),
    ("vi", "ar"),
    ("fr", "zh"),
    ("ja", "ko"),
    ("ja", "zh"),
    ("ko", "th"),
    ("th", "ar"),
    ("ar", "zh"),
]


def load_pools() -> dict[str, list[str]]:
    pools = {}
    for lang in langid.LANGUAGES:
        lines = (SENTENCE_DIR / f"{lang}.txt").read_text(encoding="utf-8").splitlines()
        pool = [line.strip() for line in lines if line.strip()]
        if len(pool) < 24:
            raise SystemExit(f"{lang}: need >= 24 sentences, found {len(pool)}")
        pools[lang] = pool
    return pools


def build_paragraph(pool: list[str], index: int) -> str:
    """Accumulate consecutive sentences (wrapping) until the length bar."""
    start = (index * STRIDE) % len(pool)
    parts = []
    offset = 0
    while len("\n".join(parts)) < MIN_PARAGRAPH_CHARS:
        parts.append(pool[(start + offset) % len(pool)])
        offset += 1
    return "\n".join(parts)


def build_mixed(pool_a: list[str], pool_b: list[str], variant: int) -> str:
    base = variant * 12
    parts = [
        pool_a[base],
        pool_b[base],
        pool_a[base + 1],
        pool_b[base + 1],
    ]
    return "\n".join(parts)


def build_corpus(pools: dict[str, list[str]]) -> list[dict]:
    items = []
    for lang in langid.LANGUAGES:
        for i in range(PARAGRAPHS_PER_LANGUAGE):
            items.append(
                {
                    "kind": "pure",
                    "label": lang,
                    "text": build_paragraph(pools[lang], i),
                }
            )
    for a, b in MIXED_PAIRS:
        for variant in range(2):
            items.append(
                {
                    "kind": "mixed",
                    "langs": [a, b],
                    "text": build_mixed(pools[a], pools[b], variant),
                }
            )
    return items


def verify(items: list[dict]) -> None:
    detector = langid.LanguageDetector()
    pure_total = 0
    pure_ok = 0
    script_unique_bad = []
    per_lang: dict[str, list[int]] = {}
    for item in items:
        if item["kind"] != "pure":
            continue
        label = item["label"]
        got = detector.detect(item["text"]).languages
        ok = got == {label}
        pure_total += 1
        pure_ok += ok
        per_lang.setdefault(label, []).append(int(ok))
        if not ok and label in ("th", "ko", "ar"):
            script_unique_bad.append((label, sorted(got)))

    mixed_total = 0
    mixed_exact = 0
    mixed_inconsistent = 0
    for item in items:
        if item["kind"] != "mixed":
            continue
        mixed_total += 1
        got = detector.detect(item["text"]).languages
        expected = set(item["langs"])
        mixed_exact += got == expected
        mixed_inconsistent += all(
            not detector.is_consistent(item["text"], lang) for lang in expected
        )

    print(f"pure: {pure_ok}/{pure_total} ({pure_ok / pure_total:.1%})")
    for lang in langid.LANGUAGES:
        marks = per_lang[lang]
        print(f"  {lang}: {sum(marks)}/{len(marks)}")
    print(f"mixed exact-set: {mixed_exact}/{mixed_total}")
    print(f"mixed flagged inconsistent: {mixed_inconsistent}/{mixed_total}")

    if pure_ok / pure_total < 0.95:
        raise SystemExit("pure agreement below 95%, refusing to freeze")
    if script_unique_bad:
        raise SystemExit(f"script-unique misses: {script_unique_bad}")
    if mixed_inconsistent != mixed_total:
        raise SystemExit("some mixed item passed is_consistent, refusing to freeze")


def main() -> None:
    pools = load_pools()
    items = build_corpus(pools)
    verify(items)
    with OUT_PATH.open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(items)} items to {OUT_PATH}")


if __name__ == "__main__":
    main()

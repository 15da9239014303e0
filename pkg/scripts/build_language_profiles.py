"""Build the character n-gram profiles shipped as package data.

Reads hand-written seed corpora from scripts/seed_text/<lang>.txt and
writes src/thinkalign/profiles/<lang>.tsv as `ngram<TAB>count` lines.
Tokenization deliberately reuses the detector's own helpers so the
profiles and the classifier can never drift apart.

Usage: python scripts/build_language_profiles.py
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from thinkalign.langid import LATIN_LANGUAGES, _char_class, _ngrams  # noqa: E402

SEED_DIR = ROOT / "scripts" / "seed_text"
PROFILE_DIR = ROOT / "src" / "thinkalign" / "profiles"


def latinize(text: str) -> str:
    """Keep exactly the characters the detector attributes to Latin."""
    out = []
    for ch in text:
        if _char_class(ch) == "latin":
            out.append(ch)
        elif not out or out[-1] != " ":
            out.append(" ")
    return "".join(out)


def main() -> int:
    PROFILE_DIR.mkdir(parents=True, exist_ok=True)
    for lang in LATIN_LANGUAGES:
        seed = (SEED_DIR / f"{lang}.txt").read_text(encoding="utf-8")
        grams = _ngrams(latinize(seed).casefold())
        # counts descending, gram ascending: stable file ordering
        lines = [f"{g}\t{c}" for g, c in sorted(grams.items(), key=lambda kv: (-kv[1], kv[0]))]
        out = PROFILE_DIR / f"{lang}.tsv"
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"{lang}: {len(lines)} n-grams, {sum(grams.values())} total -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

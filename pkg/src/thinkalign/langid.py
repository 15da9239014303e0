"""Language identification over the ten target languages.

Script-unique languages (th, ko, ar) resolve from Unicode ranges alone.
CJK text splits ja vs zh on kana presence, per segment: any kana forces
ja, pure Han reads as zh. Latin-script languages (en, es, fr, pt, vi) go
through character n-gram profiles shipped as package data, with an extra
boost for Vietnamese from its unique diacritic inventory.

Detection is per sentence; each language's share is the fraction of
linguistic characters attributed to it across the whole text. Letters in
scripts outside the roster (Greek, Cyrillic, ...) attribute to "unknown".
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

LANGUAGES = ("ja", "ko", "fr", "pt", "th", "en", "es", "ar", "vi", "zh")
UNKNOWN = "unknown"
LATIN_LANGUAGES = ("en", "es", "fr", "pt", "vi")

DISPLAY_NAMES = {
    "ja": "Japanese",
    "ko": "Korean",
    "fr": "French",
    "pt": "Portuguese",
    "th": "Thai",
    "en": "English",
    "es": "Spanish",
    "ar": "Arabic",
    "vi": "Vietnamese",
    "zh": "Chinese",
}

MIN_SHARE = 0.05
MIN_LINGUISTIC_CHARS = 20

# n-gram orders and smoothing for the Latin classifier
_NGRAM_ORDERS = (1, 2, 3)
_ALPHA = 0.5
_VI_BONUS = 6.0

# Vietnamese-only characters among the five Latin languages: the Latin
# Extended Additional block plus horn/breve/bar letters.
_VI_MARKERS = frozenset(
    [chr(cp) for cp in range(0x1EA0, 0x1EFA)]
    + list("đĐơƠưƯăĂĩĨũŨ")
)


class EmptyTextError(ValueError):
    """Too few linguistic characters remain to identify a language."""


@dataclass(frozen=True)
class DetectionResult:
    """Languages detected in a text with their character shares."""

    shares: Dict[str, float]
    total_linguistic_chars: int

    @property
    def languages(self) -> frozenset:
        return frozenset(self.shares)


_TAG_RE = re.compile(r"</?[A-Za-z][^<>]*>")
_MATH_SPAN_RES = (
    re.compile(r"\$\$.*?\$\$", re.DOTALL),
    re.compile(r"\$[^$]*\$", re.DOTALL),
    re.compile(r"\\\[.*?\\\]", re.DOTALL),
    re.compile(r"\\\(.*?\\\)", re.DOTALL),
)
_TEX_COMMAND_RE = re.compile(r"\\[A-Za-z]+")
_OPERATOR_RE = re.compile(r"[0-9+\-*/=^_%|~<>$\\{}()\[\]]")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?;:。！？؟…\n]+")


def _drop_boxed(text: str) -> str:
    """Remove every \\boxed{...} span, brace-balanced."""
    out = []
    i = 0
    marker = "\\boxed{"
    while True:
        j = text.find(marker, i)
        if j == -1:
            out.append(text[i:])
            return "".join(out)
        out.append(text[i:j])
        k = j + len(marker)
        depth = 1
        while k < len(text) and depth:
            if text[k] == "{":
                depth += 1
            elif text[k] == "}":
                depth -= 1
            k += 1
        i = k


def strip_non_linguistic(text: str) -> str:
    """Remove math spans, \\boxed payloads, markup tags, digits and operators.

    What remains is the natural-language carrier signal used for
    detection. Whitespace is collapsed.
    """
    s = _TAG_RE.sub(" ", text)
    for rx in _MATH_SPAN_RES:
        s = rx.sub(" ", s)
    s = _drop_boxed(s)
    s = _TEX_COMMAND_RE.sub(" ", s)
    s = _OPERATOR_RE.sub(" ", s)
    return " ".join(s.split())


def _char_class(ch: str) -> Optional[str]:
    """Bucket a character: th/ko/ar/kana/han/latin/other, None if non-linguistic."""
    if ch.isdigit():
        return None
    cp = ord(ch)
    if 0x0E00 <= cp <= 0x0E7F:
        cat = _category(ch)
        return "th" if cat.startswith("L") or cat == "Mn" else None
    if 0xAC00 <= cp <= 0xD7A3 or 0x1100 <= cp <= 0x11FF or 0x3130 <= cp <= 0x318F:
        return "ko"
    if (
        0x0600 <= cp <= 0x06FF
        or 0x0750 <= cp <= 0x077F
        or 0x08A0 <= cp <= 0x08FF
        or 0xFB50 <= cp <= 0xFDFF
        or 0xFE70 <= cp <= 0xFEFC
    ):
        cat = _category(ch)
        return "ar" if cat.startswith("L") or cat == "Mn" else None
    if 0x3040 <= cp <= 0x30FF or 0x31F0 <= cp <= 0x31FF or 0xFF66 <= cp <= 0xFF9D:
        return "kana" if ch.isalpha() else None
    if 0x4E00 <= cp <= 0x9FFF or 0x3400 <= cp <= 0x4DBF or 0xF900 <= cp <= 0xFAFF:
        return "han"
    if ch.isalpha():
        if cp < 0x0250 or 0x1E00 <= cp <= 0x1EFF:
            return "latin"
        return "other"
    return None


def _category(ch: str) -> str:
    return unicodedata.category(ch)


def _ngrams(latin_text: str) -> Counter:
    """Character n-grams (orders 1-3) with word-boundary padding."""
    grams: Counter = Counter()
    for word in latin_text.split():
        padded = f"_{word}_"
        for n in _NGRAM_ORDERS:
            if n == 1:
                grams.update(word)
            else:
                grams.update(padded[i : i + n] for i in range(len(padded) - n + 1))
    return grams


class _Profile:
    def __init__(self, counts: Dict[str, int]):
        self.counts = counts
        self.total = sum(counts.values())


def _load_profiles(profile_dir: Optional[Path]) -> Dict[str, _Profile]:
    profiles: Dict[str, _Profile] = {}
    for lang in LATIN_LANGUAGES:
        if profile_dir is not None:
            raw = (Path(profile_dir) / f"{lang}.tsv").read_text(encoding="utf-8")
        else:
            raw = resources.files("thinkalign.profiles").joinpath(f"{lang}.tsv").read_text(encoding="utf-8")
        counts: Dict[str, int] = {}
        for line in raw.splitlines():
            if not line:
                continue
            gram, _, freq = line.rpartition("\t")
            counts[gram] = int(freq)
        profiles[lang] = _Profile(counts)
    return profiles


class LanguageDetector:
    """Per-sentence detector aggregating character shares per language.

    Pure and reusable across threads: profiles are loaded once at
    construction and never mutated.
    """

    def __init__(
        self,
        profile_dir: Optional[Path] = None,
        min_share: float = MIN_SHARE,
        min_chars: int = MIN_LINGUISTIC_CHARS,
    ) -> None:
        self.min_share = min_share
        self.min_chars = min_chars
        self._profiles = _load_profiles(profile_dir)
        vocab = set()
        for p in self._profiles.values():
            vocab.update(p.counts)
        self._vocab_size = max(len(vocab), 1)

    def _classify_latin(self, latin_text: str) -> str:
        grams = _ngrams(latin_text.casefold())
        best_lang = LATIN_LANGUAGES[0]
        best_score = -math.inf
        n_vi_markers = sum(1 for ch in latin_text if ch in _VI_MARKERS)
        for lang in LATIN_LANGUAGES:
            prof = self._profiles[lang]
            denom = math.log(prof.total + _ALPHA * self._vocab_size)
            score = 0.0
            for gram, k in grams.items():
                score += k * (math.log(prof.counts.get(gram, 0) + _ALPHA) - denom)
            if lang == "vi":
                score += _VI_BONUS * n_vi_markers
            if score > best_score:
                best_score = score
                best_lang = lang
        return best_lang

    def _attribute_segment(self, segment: str, counts: Counter) -> None:
        buckets: Counter = Counter()
        latin_chars = []
        for ch in segment:
            klass = _char_class(ch)
            if klass is None:
                if ch.isspace():
                    latin_chars.append(" ")  # keep word boundaries for n-grams
                continue
            buckets[klass] += 1
            if klass == "latin":
                latin_chars.append(ch)
            elif latin_chars and latin_chars[-1] != " ":
                latin_chars.append(" ")
        counts["th"] += buckets["th"]
        counts["ko"] += buckets["ko"]
        counts["ar"] += buckets["ar"]
        counts[UNKNOWN] += buckets["other"]
        # kana presence pulls the segment's Han characters to Japanese
        if buckets["kana"]:
            counts["ja"] += buckets["kana"] + buckets["han"]
        elif buckets["han"]:
            counts["zh"] += buckets["han"]
        if buckets["latin"]:
            lang = self._classify_latin("".join(latin_chars))
            counts[lang] += buckets["latin"]

    def detect(self, text: str) -> DetectionResult:
        """Detect the languages of a text.

        Raises:
            EmptyTextError: fewer than min_chars linguistic characters remain
                after stripping math, markup, digits and operators.
        """
        stripped = strip_non_linguistic(text)
        counts: Counter = Counter()
        for segment in _SENTENCE_SPLIT_RE.split(stripped):
            if segment.strip():
                self._attribute_segment(segment, counts)
        total = sum(counts.values())
        if total < self.min_chars:
            raise EmptyTextError(f"only {total} linguistic characters (needs {self.min_chars})")
        shares = {lang: c / total for lang, c in counts.items() if c / total >= self.min_share}
        return DetectionResult(shares=shares, total_linguistic_chars=total)

    def is_consistent(self, text: str, lang: str) -> bool:
        """True iff exactly one language is detected and it is `lang`."""
        if lang not in LANGUAGES:
            raise ValueError(f"unknown language code: {lang!r}")
        return self.detect(text).languages == frozenset({lang})


_default_detector: Optional[LanguageDetector] = None


def default_detector() -> LanguageDetector:
    global _default_detector
    if _default_detector is None:
        _default_detector = LanguageDetector()
    return _default_detector


def detect_languages(text: str) -> DetectionResult:
    return default_detector().detect(text)


def is_consistent(text: str, lang: str) -> bool:
    return default_detector().is_consistent(text, lang)

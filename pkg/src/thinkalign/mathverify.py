r"""Rule-based equivalence checking for final math answers.

Answers are normalized into exact canonical forms (Fraction-backed
numbers, tuples, intervals, fallback strings) and compared structurally.
No CAS and no numeric tolerance: 1/3 != 0.333. Coverage is deliberately
narrow, aimed at boxed final answers of contest-style problems; anything
unrecognized falls back to normalized string comparison.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from thinkalign.parsing import ParsedResponse, extract_boxed

RATIONAL = "rational"
DECIMAL = "decimal"
INTEGER = "integer"
TUPLE = "tuple"
INTERVAL = "interval"
STRING = "string"

_NUMERIC_KINDS = frozenset({RATIONAL, DECIMAL, INTEGER})


@dataclass(frozen=True)
class CanonicalAnswer:
    """Canonical form of an answer: kind tag, exact value, cleaned source text."""

    kind: str
    value: object
    raw: str

    def structurally_equals(self, other: "CanonicalAnswer") -> bool:
        """Kind/value equality, ignoring the raw surface text."""
        if self.kind != other.kind:
            return False
        if self.kind == TUPLE:
            return (
                len(self.value) == len(other.value)
                and all(a.structurally_equals(b) for a, b in zip(self.value, other.value))
            )
        if self.kind == INTERVAL:
            (alo, ahi, alc, arc) = self.value
            (blo, bhi, blc, brc) = other.value
            return alc == blc and arc == brc and alo.structurally_equals(blo) and ahi.structurally_equals(bhi)
        return self.value == other.value


_FRAC_RE = re.compile(r"^([+-]?)\\[dt]?frac\{([^{}]+)\}\{([^{}]+)\}$")
_SLASH_RE = re.compile(r"^([+-]?\d+)\s*/\s*(\d+)$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+)$")
_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_TEXT_WRAP_RE = re.compile(r"^\\(?:text|mathrm)\{(.*)\}$", re.DOTALL)


def _balanced(s: str) -> bool:
    depth = 0
    for c in s:
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _clean(text: str) -> str:
    s = unicodedata.normalize("NFKC", text)
    s = s.replace("−", "-").replace("⁄", "/")
    s = s.replace("\\left", "").replace("\\right", "")
    s = s.replace("$", "")
    s = s.strip()
    while True:
        m = _TEXT_WRAP_RE.match(s)
        if m and _balanced(m.group(1)):
            s = m.group(1).strip()
            continue
        break
    return s


def _split_top_level(s: str) -> Optional[list]:
    """Split on top-level commas/semicolons; None when there are none."""
    parts, depth, start = [], 0, 0
    for i, c in enumerate(s):
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        elif c in ",;" and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    if not parts:
        return None
    parts.append(s[start:])
    return parts


def _as_fraction(s: str) -> Optional[Fraction]:
    """Exact Fraction for integer/decimal/slash/\\frac/percent forms, else None."""
    s = s.strip().replace(" ", "")
    if not s:
        return None
    if s.endswith("%"):
        inner = _as_fraction(s[:-1])
        return None if inner is None else inner / 100
    m = _FRAC_RE.match(s)
    if m:
        num = _as_fraction(m.group(2))
        den = _as_fraction(m.group(3))
        if num is None or den is None or den == 0:
            return None
        value = num / den
        return -value if m.group(1) == "-" else value
    m = _SLASH_RE.match(s)
    if m:
        den = int(m.group(2))
        if den == 0:
            return None
        return Fraction(int(m.group(1)), den)
    if _DECIMAL_RE.match(s) or _INTEGER_RE.match(s):
        return Fraction(s)
    return None


def _parse(s: str) -> CanonicalAnswer:
    compact = s.replace(" ", "")

    # percent -> rational (value already scaled by 1/100)
    if compact.endswith("%"):
        v = _as_fraction(compact)
        if v is not None:
            return CanonicalAnswer(RATIONAL, v, s)

    if _INTEGER_RE.match(compact):
        return CanonicalAnswer(INTEGER, Fraction(compact), s)
    if _DECIMAL_RE.match(compact):
        return CanonicalAnswer(DECIMAL, Fraction(compact), s)
    if _SLASH_RE.match(compact) or _FRAC_RE.match(compact):
        v = _as_fraction(compact)
        if v is not None:
            return CanonicalAnswer(RATIONAL, v, s)

    # bracketed sequences: tuples and intervals
    if len(s) >= 2 and s[0] in "([{" and s[-1] in ")]}":
        inner = s[1:-1]
        parts = _split_top_level(inner)
        if parts is not None and all(p.strip() for p in parts):
            elements = tuple(_parse(p.strip()) for p in parts)
            square = s[0] == "[" or s[-1] == "]"
            if square and len(elements) == 2:
                lo_closed = s[0] == "["
                hi_closed = s[-1] == "]"
                return CanonicalAnswer(INTERVAL, (elements[0], elements[1], lo_closed, hi_closed), s)
            return CanonicalAnswer(TUPLE, elements, s)
        if parts is None and s[0] == "(" and s[-1] == ")" and _balanced_brackets(inner):
            # redundant wrapping parens around a single value
            return _parse(inner.strip())

    # bare top-level comma list, e.g. "3, 4"
    parts = _split_top_level(s)
    if parts is not None and all(p.strip() for p in parts):
        return CanonicalAnswer(TUPLE, tuple(_parse(p.strip()) for p in parts), s)

    # fallback: normalized string (\pi and friends stay symbolic)
    folded = " ".join(s.split()).casefold()
    return CanonicalAnswer(STRING, folded, s)


def _balanced_brackets(s: str) -> bool:
    depth = 0
    for c in s:
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def normalize(text: str) -> CanonicalAnswer:
    """Normalize an answer string to a canonical exact form.

    Strips math-mode wrapping ($, \\left/\\right, \\text{...}), then tries
    integer, decimal, fraction, percent, tuple and interval shapes; falls
    back to an NFKC-casefolded string. Never raises. Idempotent: feeding
    the cleaned `raw` back in reproduces the same kind/value.
    """
    s = _clean(text)
    return _parse(s)


def equivalent(a: Union[str, CanonicalAnswer], b: Union[str, CanonicalAnswer]) -> bool:
    """Exact equivalence of two answers after normalization.

    The three numeric kinds compare by exact rational value; tuples
    elementwise; intervals require equal closures and endpoints; strings
    compare casefolded. Kind mismatches beyond numeric cross-kinds are
    never equivalent.
    """
    ca = a if isinstance(a, CanonicalAnswer) else normalize(a)
    cb = b if isinstance(b, CanonicalAnswer) else normalize(b)
    return _equiv(ca, cb)


def _equiv(ca: CanonicalAnswer, cb: CanonicalAnswer) -> bool:
    if ca.kind in _NUMERIC_KINDS and cb.kind in _NUMERIC_KINDS:
        return ca.value == cb.value
    if ca.kind != cb.kind:
        return False
    if ca.kind == TUPLE:
        if len(ca.value) != len(cb.value):
            return False
        return all(_equiv(x, y) for x, y in zip(ca.value, cb.value))
    if ca.kind == INTERVAL:
        alo, ahi, alc, arc = ca.value
        blo, bhi, blc, brc = cb.value
        return alc == blc and arc == brc and _equiv(alo, blo) and _equiv(ahi, bhi)
    return ca.value == cb.value


def accuracy_reward(parsed: ParsedResponse, gold: str) -> int:
    """Accuracy reward: 1 iff the last boxed payload of the answer segment
    is equivalent to the gold answer, else 0. Never raises."""
    payload = extract_boxed(parsed.answer)
    if payload is None:
        return 0
    try:
        return 1 if equivalent(payload, gold) else 0
    except Exception:  # pragma: no cover - normalization is total, belt and braces
        return 0

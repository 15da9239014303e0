"""Parsing of raw model outputs into thinking and answer segments.

Expected layout: one <think>...</think> block, then the answer text.
Rewards punish malformed outputs, so the parser never guesses; anything
that deviates from the layout raises FormatError with a reason code.
"""

from __future__ import annotations

from dataclasses import dataclass

OPEN_TAG = "<think>"
CLOSE_TAG = "</think>"

# FormatError reason codes
MISSING_OPEN = "missing_open"
MISSING_CLOSE = "missing_close"
DUPLICATE_TAGS = "duplicate_tags"
OUT_OF_ORDER = "out_of_order"
EMPTY_SEGMENT = "empty_segment"


class FormatError(ValueError):
    """Raw output does not follow the <think>...</think>answer layout."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class RawResponse:
    """Verbatim decoded model output; no normalization applied."""

    text: str


@dataclass(frozen=True)
class ParsedResponse:
    """Thinking and answer segments, verbatim between/after the tags."""

    think: str
    answer: str


def _text_of(raw: RawResponse | str) -> str:
    return raw.text if isinstance(raw, RawResponse) else raw


def parse_response(raw: RawResponse | str) -> ParsedResponse:
    """Split a raw output into (think, answer).

    Leading whitespace before <think> is tolerated; nothing else is.
    Exactly one tag pair must be present, the text must start with the
    open tag, and both segments must be non-empty after trimming.
    Reconstruction holds: "<think>" + think + "</think>" + answer equals
    the input text modulo the tolerated leading whitespace.

    Raises:
        FormatError: with reason one of missing_open, missing_close,
            duplicate_tags, out_of_order, empty_segment.
    """
    body = _text_of(raw).lstrip()
    n_open = body.count(OPEN_TAG)
    n_close = body.count(CLOSE_TAG)
    if n_open == 0:
        raise FormatError(MISSING_OPEN)
    if n_close == 0:
        raise FormatError(MISSING_CLOSE)
    if n_open > 1 or n_close > 1:
        raise FormatError(DUPLICATE_TAGS)
    open_at = body.find(OPEN_TAG)
    close_at = body.find(CLOSE_TAG)
    # the output must start with <think> and close it afterwards
    if open_at != 0 or close_at < open_at:
        raise FormatError(OUT_OF_ORDER)
    think = body[len(OPEN_TAG):close_at]
    answer = body[close_at + len(CLOSE_TAG):]
    if not think.strip() or not answer.strip():
        raise FormatError(EMPTY_SEGMENT)
    return ParsedResponse(think=think, answer=answer)


def format_reward(raw: RawResponse | str) -> int:
    """Format reward: 0 when the layout parses, -1 otherwise."""
    try:
        parse_response(raw)
    except FormatError:
        return -1
    return 0


def extract_boxed(text: str) -> str | None:
    r"""Return the payload of the last \boxed{...} in text, or None.

    The payload must brace-balance; an unterminated \boxed{ is skipped in
    favor of an earlier balanced one.
    """
    marker = "\\boxed{"
    start = text.rfind(marker)
    while start != -1:
        i = start + len(marker)
        depth = 1
        for j in range(i, len(text)):
            c = text[j]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    return text[i:j]
        start = text.rfind(marker, 0, start)
    return None

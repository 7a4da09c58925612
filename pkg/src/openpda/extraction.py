"""Typed value extraction from an annotated utterance.

Three data types are recognized: dates, numbers and pattern strings, with
at most one value per type. Extraction runs in a fixed order (date first,
then number, then string capture) and each pass claims the token indices
it used, so "16th" inside "16th of November" is never re-read as a number.

All resolution is relative to an injected reference clock; nothing here
reads wall time.
"""
from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass

from .language import Token

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
}
_WEEKDAYS = {
    "monday": 0, "tuesday": 1, "wednesday": 2, "thursday": 3, "friday": 4,
    "saturday": 5, "sunday": 6,
}
_ORDINAL_RE = re.compile(r"^(\d{1,2})(st|nd|rd|th)$")
_CARDINAL_DAY_RE = re.compile(r"^(\d{1,2})$")
_NUMBER_RE = re.compile(r"^-?\d+(\.\d+)?$")

CONNECTOR_WORDS = frozenset({"to", "that"})


@dataclass(frozen=True)
class DateMatch:
    surface: str
    canonical: str  # ISO date of the next occurrence
    token_indices: tuple[int, ...]


@dataclass(frozen=True)
class NumberMatch:
    surface: str
    value: float
    token_indices: tuple[int, ...]


@dataclass(frozen=True)
class StringCapture:
    surface: str
    token_indices: tuple[int, ...]


@dataclass(frozen=True)
class ExtractedValues:
    date: DateMatch | None = None
    number: NumberMatch | None = None

    @property
    def claimed_mask(self) -> frozenset[int]:
        claimed: set[int] = set()
        if self.date:
            claimed.update(self.date.token_indices)
        if self.number:
            claimed.update(self.number.token_indices)
        return frozenset(claimed)


def _slice_surface(text: str, tokens: list[Token], first: int, last: int) -> str:
    raw = text.encode("utf-8")
    return raw[tokens[first].byte_span[0]:tokens[last].byte_span[1]].decode("utf-8")


def _ordinal_day(norm: str) -> int | None:
    m = _ORDINAL_RE.match(norm)
    if m and 1 <= int(m.group(1)) <= 31:
        return int(m.group(1))
    return None


def _cardinal_day(norm: str) -> int | None:
    m = _CARDINAL_DAY_RE.match(norm)
    if m and 1 <= int(m.group(1)) <= 31:
        return int(m.group(1))
    return None


def _next_month_day(reference: dt.date, month: int, day: int) -> dt.date | None:
    for year in range(reference.year, reference.year + 9):
        try:
            candidate = dt.date(year, month, day)
        except ValueError:
            continue
        if candidate >= reference:
            return candidate
    return None


def _next_weekday(reference: dt.date, weekday: int) -> dt.date:
    ahead = (weekday - reference.weekday()) % 7
    if ahead == 0:
        ahead = 7  # "on Monday" said on a Monday means next week
    return reference + dt.timedelta(days=ahead)


def extract_date(tokens: list[Token], text: str, reference: dt.date) -> DateMatch | None:
    """First date expression reading left to right, or None.

    Recognized forms: "<ordinal> of <month>", "<month> <ordinal|cardinal>",
    a weekday name with an optional leading "on" (the "on" is claimed but
    kept out of the surface), and "today"/"tomorrow".
    """
    n = len(tokens)
    for i in range(n):
        norm = tokens[i].normalized
        if not norm:
            continue

        day = _ordinal_day(norm)
        if day is not None and i + 2 < n and tokens[i + 1].normalized == "of" \
                and tokens[i + 2].normalized in _MONTHS:
            resolved = _next_month_day(reference, _MONTHS[tokens[i + 2].normalized], day)
            if resolved is not None:
                return DateMatch(
                    surface=_slice_surface(text, tokens, i, i + 2),
                    canonical=resolved.isoformat(),
                    token_indices=(i, i + 1, i + 2),
                )

        if norm in _MONTHS and i + 1 < n:
            nxt = tokens[i + 1].normalized
            day = _ordinal_day(nxt) or _cardinal_day(nxt)
            if day is not None:
                resolved = _next_month_day(reference, _MONTHS[norm], day)
                if resolved is not None:
                    return DateMatch(
                        surface=_slice_surface(text, tokens, i, i + 1),
                        canonical=resolved.isoformat(),
                        token_indices=(i, i + 1),
                    )

        if norm == "on" and i + 1 < n and tokens[i + 1].normalized in _WEEKDAYS:
            resolved = _next_weekday(reference, _WEEKDAYS[tokens[i + 1].normalized])
            return DateMatch(
                surface=tokens[i + 1].surface,
                canonical=resolved.isoformat(),
                token_indices=(i, i + 1),
            )

        if norm in _WEEKDAYS:
            resolved = _next_weekday(reference, _WEEKDAYS[norm])
            return DateMatch(
                surface=tokens[i].surface,
                canonical=resolved.isoformat(),
                token_indices=(i,),
            )

        if norm in ("today", "tomorrow"):
            resolved = reference if norm == "today" else reference + dt.timedelta(days=1)
            return DateMatch(
                surface=tokens[i].surface,
                canonical=resolved.isoformat(),
                token_indices=(i,),
            )
    return None


def extract_number(tokens: list[Token], claimed: frozenset[int] | set[int] = frozenset()) -> NumberMatch | None:
    """First unclaimed cardinal left to right, base 10, or None."""
    for i, tok in enumerate(tokens):
        if i in claimed or tok.is_punct:
            continue
        if _NUMBER_RE.match(tok.surface):
            return NumberMatch(surface=tok.surface, value=float(tok.surface), token_indices=(i,))
    return None


def extract_values(tokens: list[Token], text: str, reference: dt.date) -> ExtractedValues:
    """Run the typed passes in claiming order: date first, then number."""
    date = extract_date(tokens, text, reference)
    claimed = frozenset(date.token_indices) if date else frozenset()
    number = extract_number(tokens, claimed)
    return ExtractedValues(date=date, number=number)


def _available_runs(n: int, blocked: set[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    current: list[int] = []
    for i in range(n):
        if i in blocked:
            if current:
                runs.append(current)
                current = []
        else:
            current.append(i)
    if current:
        runs.append(current)
    return runs


def _trim_run(tokens: list[Token], run: list[int]) -> list[int]:
    run = list(run)
    while run and tokens[run[0]].is_punct:
        run.pop(0)
    while run and tokens[run[0]].normalized in CONNECTOR_WORDS:
        run.pop(0)
    while run and tokens[run[-1]].is_punct:
        run.pop()
    return run


def capture_string(
    tokens: list[Token],
    text: str,
    claimed: frozenset[int] | set[int] = frozenset(),
    consumed: frozenset[int] | set[int] = frozenset(),
    pattern: str | None = None,
) -> StringCapture | None:
    """Capture the string argument left over after intent resolution.

    With a pattern, the first regex match over the unconsumed text wins.
    Otherwise the longest contiguous run of free tokens is taken, with
    leading connector words and edge punctuation dropped. The surface is
    the exact original substring, casing and spacing intact.
    """
    blocked = set(claimed) | set(consumed)
    runs = _available_runs(len(tokens), blocked)
    if pattern is not None:
        compiled = re.compile(pattern)
        raw = text.encode("utf-8")
        for run in runs:
            start_b = tokens[run[0]].byte_span[0]
            end_b = tokens[run[-1]].byte_span[1]
            segment = raw[start_b:end_b].decode("utf-8")
            m = compiled.search(segment)
            if not m:
                continue
            m_start = start_b + len(segment[: m.start()].encode("utf-8"))
            m_end = start_b + len(segment[: m.end()].encode("utf-8"))
            indices = tuple(
                i for i in run
                if tokens[i].byte_span[0] < m_end and tokens[i].byte_span[1] > m_start
            )
            return StringCapture(surface=m.group(0), token_indices=indices)
        return None

    candidates = [r for r in (_trim_run(tokens, run) for run in runs) if r]
    if not candidates:
        return None
    best = max(candidates, key=lambda r: (len(r), -r[0]))
    return StringCapture(
        surface=_slice_surface(text, tokens, best[0], best[-1]),
        token_indices=tuple(best),
    )

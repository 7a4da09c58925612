"""Rule-based language front-end.

Turns a raw utterance into a uniform annotated token stream that the rest
of the pipeline consumes. Tokens keep their exact byte offsets so that
surface strings can always be recovered from the original text. Only an
English model ships, but models are registered per language code so other
languages can plug in behind the same interface.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from importlib import resources

from .errors import EmptyInput, OversizeInput, UnknownLanguage

MAX_UTTERANCE_BYTES = 4096

# Number tokens first so a leading minus or a decimal point stays attached,
# but not when letters follow ("16th" must stay one word token).
_TOKEN_RE = re.compile(
    r"-?\d+(?:\.\d+)?(?!\w)"      # 25, -3, 4.5
    r"|\w+(?:['’]\w+)*"      # words, keeping interior apostrophes
    r"|[^\w\s]",                  # any other single non-space character
    re.UNICODE,
)

_EDGE_PUNCT_RE = re.compile(r"^[^\w]+|[^\w]+$", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    byte_span: tuple[int, int]
    is_stopword: bool
    is_punct: bool
    pos: str | None = None  # tag slot; the rule-based baseline leaves it empty


@dataclass(frozen=True)
class LanguageModelDescriptor:
    language_code: str
    name: str


def normalize_text(text: str) -> str:
    """Case-fold, NFC-normalize and strip surrounding punctuation.

    Interior punctuation (apostrophes, decimal points) is preserved.
    Idempotent by construction.
    """
    folded = unicodedata.normalize("NFC", text).casefold()
    stripped = _EDGE_PUNCT_RE.sub("", folded)
    return stripped


def normalize(token: Token) -> str:
    return normalize_text(token.surface)


def _load_stopword_file(name: str) -> frozenset[str]:
    words = set()
    data = resources.files("openpda").joinpath("data").joinpath(name).read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line)
    return frozenset(words)


_STOPWORDS: dict[str, frozenset[str]] = {}

REGISTERED_LANGUAGES = {
    "en": LanguageModelDescriptor(language_code="en", name="English rule-based model"),
}


def stopwords(language_code: str) -> frozenset[str]:
    if language_code not in REGISTERED_LANGUAGES:
        raise UnknownLanguage(f"no language model registered for {language_code!r}")
    if language_code not in _STOPWORDS:
        _STOPWORDS[language_code] = _load_stopword_file(f"stopwords_{language_code}.txt")
    return _STOPWORDS[language_code]


def tokenize(text: str, language_code: str = "en") -> list[Token]:
    """Split an utterance into tokens with byte offsets.

    Punctuation marks become their own tokens; numbers keep an attached
    minus sign and decimal point; words keep interior apostrophes.
    """
    if language_code not in REGISTERED_LANGUAGES:
        raise UnknownLanguage(f"no language model registered for {language_code!r}")
    raw = text.encode("utf-8")
    if len(raw) > MAX_UTTERANCE_BYTES:
        raise OversizeInput(f"utterance is {len(raw)} bytes, limit is {MAX_UTTERANCE_BYTES}")
    if not text.strip():
        raise EmptyInput("utterance contains no non-whitespace characters")

    stops = stopwords(language_code)

    # Map character offsets to byte offsets once, then slice per match.
    byte_at = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        byte_at[i] = pos
        pos += len(ch.encode("utf-8"))
    byte_at[len(text)] = pos

    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(text):
        surface = m.group(0)
        norm = normalize_text(surface)
        punct = norm == ""
        tokens.append(
            Token(
                surface=surface,
                normalized=norm,
                byte_span=(byte_at[m.start()], byte_at[m.end()]),
                is_stopword=(not punct and norm in stops),
                is_punct=punct,
            )
        )
    return tokens

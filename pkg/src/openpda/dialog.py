"""Intent resolution and slot-filling dialog.

An utterance is resolved in stages: an optional leading "AppName," prefix
narrows the search to one app; distance search compares the utterance
against every intent sample in registry order and accepts the first one
under the configured threshold; failing that, the longest key phrase
found as a contiguous token run wins; failing that the request is
unrecognized.

Once an intent is chosen, extracted values fill its declared parameters.
Missing obligatory slots drive a question/answer loop, one predefined
question per slot, until everything is filled and the command can be
dispatched to the owning app.
"""
from __future__ import annotations

import datetime as dt
import json
import logging
import math
import threading
from dataclasses import dataclass, field

from . import dispatch as dispatch_mod
from .dispatch import CommandMessage, DispatchResult, encode
from .embeddings import EmbeddingStore
from .errors import AllWordsDropped, ConfigError, EmptyInput, OversizeInput
from .extraction import capture_string, extract_date, extract_number, extract_values
from .language import Token, tokenize
from .registry import AppDescriptor, IntentDescriptor, ParameterSpec, Registry
from .wmd import NBowDoc, to_nbow, wmd, wmd_lower_bound

log = logging.getLogger(__name__)

UNRECOGNIZED_TEXT = "Sorry, I do not recognize your request."
ABORTED_TEXT = "Sorry, I still could not get what I need. Let's start over."


@dataclass(frozen=True)
class EngineConfig:
    threshold: float = 1.0
    max_reasks: int = 2
    drop_stopwords: bool = True
    language: str = "en"
    reference_time: dt.datetime | None = None  # fixed clock for reproducible dates

    def __post_init__(self):
        if not (isinstance(self.threshold, (int, float))
                and math.isfinite(self.threshold) and self.threshold > 0):
            raise ConfigError(f"threshold must be a finite positive number, got {self.threshold}")
        if self.max_reasks < 1:
            raise ConfigError(f"max_reasks must be at least 1, got {self.max_reasks}")


@dataclass(frozen=True)
class ResolvedIntent:
    app: AppDescriptor
    intent: IntentDescriptor
    matched_by: str          # "sample" or "key_phrase"
    distance: float | None   # set for sample matches
    phrase: str | None       # set for key-phrase matches
    consumed: frozenset[int]


@dataclass(frozen=True)
class Reply:
    kind: str  # "question" | "result" | "unrecognized" | "aborted"
    text: str
    command: CommandMessage | None = None
    command_bytes: bytes | None = None
    dispatch: DispatchResult | None = None


@dataclass(frozen=True)
class SlotValue:
    name: str
    data_type: str
    surface: str                  # what travels in the command
    canonical: object = None      # typed value, kept but never serialized


@dataclass
class _AwaitingSlot:
    app: AppDescriptor
    intent: IntentDescriptor
    filled: dict[str, SlotValue]
    pending: list[ParameterSpec]
    reasks: int = 0


@dataclass
class DialogSession:
    session_id: str
    state: _AwaitingSlot | None = None  # None means idle
    transcript: list[tuple[str, str]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _word_positions(tokens: list[Token]) -> list[tuple[int, str]]:
    return [(i, t.normalized) for i, t in enumerate(tokens) if not t.is_punct]


def _phrase_tokens(phrase: str, language: str) -> list[str]:
    try:
        return [t.normalized for t in tokenize(phrase, language) if not t.is_punct]
    except (EmptyInput, OversizeInput):
        return []


def _find_phrase(words: list[tuple[int, str]], phrase: list[str]) -> tuple[int, ...] | None:
    if not phrase or len(phrase) > len(words):
        return None
    for start in range(len(words) - len(phrase) + 1):
        if all(words[start + k][1] == phrase[k] for k in range(len(phrase))):
            return tuple(words[start + k][0] for k in range(len(phrase)))
    return None


class DialogEngine:
    """Session store plus the message loop. One engine serves many sessions."""

    def __init__(
        self,
        registry: Registry,
        store: EmbeddingStore,
        config: EngineConfig | None = None,
        send_fn=dispatch_mod.send,
        transcript_path=None,
        event_sink=None,
    ):
        self.registry = registry
        self.store = store
        self.config = config or EngineConfig()
        self._send = send_fn
        self._transcript_path = transcript_path
        self._event_sink = event_sink
        self._sessions: dict[str, DialogSession] = {}
        self._sessions_lock = threading.Lock()
        self._nbow_cache: dict[tuple[str, bool], NBowDoc | None] = {}
        self._cache_lock = threading.Lock()

    # resolution

    def _sample_nbow(self, text: str) -> NBowDoc | None:
        key = (text, self.config.drop_stopwords)
        with self._cache_lock:
            if key in self._nbow_cache:
                return self._nbow_cache[key]
        try:
            doc = to_nbow(tokenize(text, self.config.language), self.store,
                          self.config.drop_stopwords)
        except (AllWordsDropped, EmptyInput, OversizeInput):
            doc = None
        with self._cache_lock:
            self._nbow_cache[key] = doc
        return doc

    def resolve(self, text: str, apps: tuple[AppDescriptor, ...] | None = None) -> ResolvedIntent | None:
        tokens = tokenize(text, self.config.language)
        if apps is None:
            apps = self.registry.snapshot()

        consumed: set[int] = set()
        scope = apps
        if (
            len(tokens) >= 2
            and not tokens[0].is_punct
            and tokens[1].surface == ","
        ):
            for app in apps:
                if app.name.casefold() == tokens[0].normalized:
                    scope = (app,)
                    consumed = {0, 1}
                    break

        query_tokens = [t for i, t in enumerate(tokens) if i not in consumed]

        # stage 1: sample distance search, first hit below threshold wins
        query_doc: NBowDoc | None
        try:
            query_doc = to_nbow(query_tokens, self.store, self.config.drop_stopwords)
        except AllWordsDropped:
            query_doc = None
        if query_doc is not None:
            threshold = self.config.threshold
            for app in scope:
                for intent in app.intents:
                    for sample in intent.samples:
                        sample_doc = self._sample_nbow(sample)
                        if sample_doc is None:
                            continue
                        if wmd_lower_bound(query_doc, sample_doc, self.store) >= threshold:
                            continue  # cannot beat the threshold, skip the exact solve
                        distance = wmd(query_doc, sample_doc, self.store)
                        if distance < threshold:
                            sample_words = set(_phrase_tokens(sample, self.config.language))
                            matched = frozenset(
                                i for i, t in enumerate(tokens)
                                if i not in consumed and not t.is_punct
                                and t.normalized in sample_words
                            )
                            return ResolvedIntent(
                                app=app, intent=intent, matched_by="sample",
                                distance=distance, phrase=None,
                                consumed=frozenset(consumed) | matched,
                            )

        # stage 2: key phrases, longest contiguous token run wins
        words = [(i, n) for i, n in _word_positions(tokens) if i not in consumed]
        best: tuple[int, ResolvedIntent] | None = None
        for app in scope:
            for intent in app.intents:
                for phrase in intent.key_phrases:
                    ptoks = _phrase_tokens(phrase, self.config.language)
                    hit = _find_phrase(words, ptoks)
                    if hit is None:
                        continue
                    if best is None or len(ptoks) > best[0]:
                        best = (
                            len(ptoks),
                            ResolvedIntent(
                                app=app, intent=intent, matched_by="key_phrase",
                                distance=None, phrase=phrase,
                                consumed=frozenset(consumed) | frozenset(hit),
                            ),
                        )
        if best is not None:
            return best[1]
        return None

    # dialog loop

    def _session(self, session_id: str) -> DialogSession:
        with self._sessions_lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = DialogSession(session_id=session_id)
            return self._sessions[session_id]

    def _reference_date(self) -> dt.date:
        moment = self.config.reference_time or dt.datetime.now()
        return moment.date()

    def _log_line(self, session: DialogSession, direction: str, text: str):
        session.transcript.append((direction, text))
        entry = {
            "ts": dt.datetime.now().isoformat(timespec="milliseconds"),
            "session": session.session_id,
            "direction": direction,
            "text": text,
        }
        if self._transcript_path:
            with open(self._transcript_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        if self._event_sink:
            self._event_sink({"type": "chat", **entry})

    def handle_message(self, session_id: str, text: str) -> Reply:
        session = self._session(session_id)
        with session.lock:
            self._log_line(session, "user", text)
            if session.state is None:
                reply = self._handle_idle(session, text)
            else:
                reply = self._handle_awaiting(session, text)
            self._log_line(session, "dpa", reply.text)
            return reply

    def _handle_idle(self, session: DialogSession, text: str) -> Reply:
        resolved = self.resolve(text)
        if resolved is None:
            return Reply(kind="unrecognized", text=UNRECOGNIZED_TEXT)

        tokens = tokenize(text, self.config.language)
        values = extract_values(tokens, text, self._reference_date())
        filled: dict[str, SlotValue] = {}
        for param in resolved.intent.parameters:
            if param.data_type == "Number" and values.number is not None:
                filled[param.name] = SlotValue(param.name, "Number",
                                               values.number.surface,
                                               values.number.value)
            elif param.data_type == "Date" and values.date is not None:
                filled[param.name] = SlotValue(param.name, "Date",
                                               values.date.surface,
                                               values.date.canonical)
            elif param.data_type == "String":
                cap = capture_string(
                    tokens, text,
                    claimed=values.claimed_mask,
                    consumed=resolved.consumed,
                    pattern=param.pattern,
                )
                if cap is not None:
                    filled[param.name] = SlotValue(param.name, "String",
                                                   cap.surface, cap.surface)

        pending = [p for p in resolved.intent.parameters
                   if p.obligatory and p.name not in filled]
        if pending:
            session.state = _AwaitingSlot(
                app=resolved.app, intent=resolved.intent,
                filled=filled, pending=pending,
            )
            return Reply(kind="question", text=pending[0].question)
        return self._dispatch(session, resolved.app, resolved.intent, filled)

    def _handle_awaiting(self, session: DialogSession, text: str) -> Reply:
        state = session.state
        slot = state.pending[0]
        value = self._parse_answer(state, slot, text)
        if value is None:
            if state.reasks < self.config.max_reasks:
                state.reasks += 1
                return Reply(kind="question", text=slot.question)
            session.state = None
            return Reply(kind="aborted", text=ABORTED_TEXT)

        state.filled[slot.name] = value
        state.pending.pop(0)
        state.reasks = 0
        if state.pending:
            return Reply(kind="question", text=state.pending[0].question)
        session.state = None
        return self._dispatch(session, state.app, state.intent, state.filled)

    def _parse_answer(self, state: _AwaitingSlot, slot: ParameterSpec,
                      text: str) -> SlotValue | None:
        try:
            tokens = tokenize(text, self.config.language)
        except (EmptyInput, OversizeInput):
            return None
        if slot.data_type == "Number":
            found = extract_number(tokens)
            if found is None:
                return None
            return SlotValue(slot.name, "Number", found.surface, found.value)
        if slot.data_type == "Date":
            found = extract_date(tokens, text, self._reference_date())
            if found is None:
                return None
            return SlotValue(slot.name, "Date", found.surface, found.canonical)

        # String: typed values inside the answer are claimed first; if another
        # pending slot wants one of them, it is filled along the way.
        values = extract_values(tokens, text, self._reference_date())
        for other in list(state.pending[1:]):
            if other.data_type == "Date" and values.date is not None \
                    and other.name not in state.filled:
                state.filled[other.name] = SlotValue(other.name, "Date",
                                                     values.date.surface,
                                                     values.date.canonical)
                state.pending.remove(other)
            elif other.data_type == "Number" and values.number is not None \
                    and other.name not in state.filled:
                state.filled[other.name] = SlotValue(other.name, "Number",
                                                     values.number.surface,
                                                     values.number.value)
                state.pending.remove(other)
        cap = capture_string(tokens, text, claimed=values.claimed_mask,
                             consumed=frozenset(), pattern=slot.pattern)
        if cap is None:
            return None
        return SlotValue(slot.name, "String", cap.surface, cap.surface)

    def _dispatch(self, session: DialogSession, app: AppDescriptor,
                  intent: IntentDescriptor, filled: dict[str, SlotValue]) -> Reply:
        params = tuple(
            (p.name, filled[p.name].surface)
            for p in intent.parameters if p.name in filled
        )
        command = CommandMessage(app_name=app.name, intent=intent.name, params=params)
        body = encode(command)
        result = self._send(command, app.url)
        if result.ok:
            text = result.text.strip() or "Done."
        elif result.status == "app_error":
            text = f"Sorry, {app.name} reported an error ({result.code}): {result.text.strip()}"
        else:
            text = f"Sorry, I could not reach {app.name} right now."
            log.warning("dispatch to %s failed: %s", app.url, result.text)
        return Reply(kind="result", text=text, command=command,
                     command_bytes=body, dispatch=result)

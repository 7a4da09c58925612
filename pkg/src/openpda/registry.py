"""Third-party app registry.

Apps integrate by submitting a JSON descriptor declaring their intents:
sample utterances, key phrases and typed parameters with the question to
ask when an obligatory value is missing. Descriptors are validated
strictly (unknown fields rejected, with field paths in every error) and
persisted one file per app, written atomically so the directory always
mirrors the in-memory state.
"""
from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

from .errors import (
    DuplicateIntent,
    NameConflict,
    NotFound,
    SchemaViolation,
    TwoParamsSameType,
    UnreachableIntent,
)

DATA_TYPES = ("Number", "Date", "String")
APP_TYPES = ("RemoteApp",)


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    data_type: str
    obligatory: bool
    question: str = ""
    pattern: str | None = None


@dataclass(frozen=True)
class IntentDescriptor:
    name: str
    samples: tuple[str, ...] = ()
    key_phrases: tuple[str, ...] = ()
    parameters: tuple[ParameterSpec, ...] = ()


@dataclass(frozen=True)
class AppDescriptor:
    name: str
    description: str
    type: str
    url: str
    intents: tuple[IntentDescriptor, ...]


def _expect(obj, path, expected_type, type_name):
    if not isinstance(obj, expected_type):
        raise SchemaViolation(path, f"expected {type_name}")
    return obj


def _check_keys(obj: dict, path: str, required: set[str], optional: set[str] = frozenset()):
    for key in obj:
        if key not in required and key not in optional:
            raise SchemaViolation(f"{path}.{key}" if path else key, "unknown field")
    for key in required:
        if key not in obj:
            raise SchemaViolation(f"{path}.{key}" if path else key, "missing field")


def _string_list(obj, path) -> tuple[str, ...]:
    _expect(obj, path, list, "a list of strings")
    out = []
    for i, item in enumerate(obj):
        _expect(item, f"{path}[{i}]", str, "a string")
        out.append(item)
    return tuple(out)


def _parse_parameter(obj, path) -> ParameterSpec:
    _expect(obj, path, dict, "an object")
    _check_keys(obj, path, {"name", "data_type", "obligatory"}, {"question", "pattern"})
    name = _expect(obj["name"], f"{path}.name", str, "a string")
    if not name:
        raise SchemaViolation(f"{path}.name", "must be non-empty")
    data_type = _expect(obj["data_type"], f"{path}.data_type", str, "a string")
    if data_type not in DATA_TYPES:
        raise SchemaViolation(f"{path}.data_type", f"must be one of {DATA_TYPES}")
    obligatory = _expect(obj["obligatory"], f"{path}.obligatory", bool, "a boolean")
    question = ""
    if "question" in obj:
        question = _expect(obj["question"], f"{path}.question", str, "a string")
    if obligatory and not question:
        raise SchemaViolation(f"{path}.question", "obligatory parameters need a question")
    pattern = None
    if "pattern" in obj:
        pattern = _expect(obj["pattern"], f"{path}.pattern", str, "a string")
        if data_type != "String":
            raise SchemaViolation(f"{path}.pattern", "only String parameters take a pattern")
        try:
            re.compile(pattern)
        except re.error as exc:
            raise SchemaViolation(f"{path}.pattern", f"invalid regular expression: {exc}") from None
    return ParameterSpec(name=name, data_type=data_type, obligatory=obligatory,
                         question=question, pattern=pattern)


def _parse_intent(obj, path) -> IntentDescriptor:
    _expect(obj, path, dict, "an object")
    _check_keys(obj, path, {"name"}, {"samples", "key_phrases", "parameters"})
    name = _expect(obj["name"], f"{path}.name", str, "a string")
    if not name:
        raise SchemaViolation(f"{path}.name", "must be non-empty")
    samples = _string_list(obj.get("samples", []), f"{path}.samples")
    key_phrases = _string_list(obj.get("key_phrases", []), f"{path}.key_phrases")
    if not samples and not key_phrases:
        raise UnreachableIntent(f"intent {name!r} has no samples and no key phrases")
    params_obj = obj.get("parameters", [])
    _expect(params_obj, f"{path}.parameters", list, "a list")
    parameters = tuple(
        _parse_parameter(p, f"{path}.parameters[{i}]") for i, p in enumerate(params_obj)
    )
    seen_names = set()
    seen_types = set()
    for p in parameters:
        if p.name in seen_names:
            raise SchemaViolation(f"{path}.parameters", f"duplicate parameter name {p.name!r}")
        seen_names.add(p.name)
        if p.data_type in seen_types:
            raise TwoParamsSameType(
                f"intent {name!r} declares two {p.data_type} parameters; "
                "only one value per data type can be extracted"
            )
        seen_types.add(p.data_type)
    return IntentDescriptor(name=name, samples=samples, key_phrases=key_phrases,
                            parameters=parameters)


def parse_descriptor(data: bytes | str) -> AppDescriptor:
    """Parse and validate a descriptor JSON document."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError:
            raise SchemaViolation("", "descriptor is not valid UTF-8") from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"invalid JSON: {exc}") from None
    _expect(obj, "", dict, "an object")
    _check_keys(obj, "", {"name", "description", "type", "url", "intents"})
    name = _expect(obj["name"], "name", str, "a string")
    if not name or "/" in name or "\\" in name or name in (".", ".."):
        raise SchemaViolation("name", "must be a non-empty name without path separators")
    description = _expect(obj["description"], "description", str, "a string")
    app_type = _expect(obj["type"], "type", str, "a string")
    if app_type not in APP_TYPES:
        raise SchemaViolation("type", f"must be one of {APP_TYPES}")
    url = _expect(obj["url"], "url", str, "a string")
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise SchemaViolation("url", "must be an absolute http(s) URL")
    intents_obj = _expect(obj["intents"], "intents", list, "a list")
    if not intents_obj:
        raise SchemaViolation("intents", "at least one intent is required")
    intents = tuple(_parse_intent(x, f"intents[{i}]") for i, x in enumerate(intents_obj))
    seen = set()
    for intent in intents:
        if intent.name in seen:
            raise DuplicateIntent(f"intent {intent.name!r} declared twice in app {name!r}")
        seen.add(intent.name)
    return AppDescriptor(name=name, description=description, type=app_type,
                         url=url, intents=intents)


def serialize_descriptor(app: AppDescriptor) -> str:
    def param_obj(p: ParameterSpec) -> dict:
        out = {"name": p.name, "data_type": p.data_type, "obligatory": p.obligatory,
               "question": p.question}
        if p.pattern is not None:
            out["pattern"] = p.pattern
        return out

    obj = {
        "name": app.name,
        "description": app.description,
        "type": app.type,
        "url": app.url,
        "intents": [
            {
                "name": it.name,
                "samples": list(it.samples),
                "key_phrases": list(it.key_phrases),
                "parameters": [param_obj(p) for p in it.parameters],
            }
            for it in app.intents
        ],
    }
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


class Registry:
    """Descriptor store backed by a directory of one JSON file per app.

    Concurrent readers get consistent snapshots; writers are exclusive.
    """

    def __init__(self, apps_dir: str | os.PathLike):
        self._dir = Path(apps_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._apps: dict[str, AppDescriptor] = {}  # casefolded name -> descriptor
        self._order: list[str] = []
        self._load()

    def _load(self):
        for path in sorted(self._dir.glob("*.json")):
            try:
                app = parse_descriptor(path.read_bytes())
            except Exception as exc:  # invalid files are skipped, not fatal
                import logging
                logging.getLogger(__name__).warning("skipping %s: %s", path, exc)
                continue
            key = app.name.casefold()
            if key not in self._apps:
                self._order.append(key)
            self._apps[key] = app

    def _path_for(self, app_name: str) -> Path:
        return self._dir / f"{app_name}.json"

    def register(self, app: AppDescriptor) -> None:
        with self._lock:
            key = app.name.casefold()
            if key in self._apps:
                raise NameConflict(f"an app named {self._apps[key].name!r} already exists")
            tmp = self._path_for(app.name).with_suffix(".json.tmp")
            tmp.write_text(serialize_descriptor(app), encoding="utf-8")
            os.replace(tmp, self._path_for(app.name))
            self._apps[key] = app
            self._order.append(key)

    def get(self, name: str) -> AppDescriptor:
        with self._lock:
            key = name.casefold()
            if key not in self._apps:
                raise NotFound(f"no app named {name!r}")
            return self._apps[key]

    def remove(self, name: str) -> None:
        with self._lock:
            key = name.casefold()
            if key not in self._apps:
                raise NotFound(f"no app named {name!r}")
            app = self._apps.pop(key)
            self._order.remove(key)
            path = self._path_for(app.name)
            if path.exists():
                path.unlink()

    def list(self) -> list[AppDescriptor]:
        with self._lock:
            return [self._apps[k] for k in self._order]

    def snapshot(self) -> tuple[AppDescriptor, ...]:
        """Immutable view for one resolution pass."""
        with self._lock:
            return tuple(self._apps[k] for k in self._order)

    def find_app_by_token(self, normalized_token: str) -> AppDescriptor | None:
        with self._lock:
            return self._apps.get(normalized_token.casefold())

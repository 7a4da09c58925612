import json

import numpy as np
import pytest

from openpda.dialog import (
    ABORTED_TEXT,
    UNRECOGNIZED_TEXT,
    DialogEngine,
    EngineConfig,
)
from openpda.dispatch import DispatchResult
from openpda.embeddings import EmbeddingStore, toy_store
from openpda.errors import ConfigError

from .conftest import REFERENCE_TIME, CapturingSender


def dispatched(reply):
    assert reply.kind == "result", f"expected a result, got {reply.kind}: {reply.text}"
    return json.loads(reply.command_bytes)


# resolution


def test_resolve_key_phrase_tc01(engine):
    r = engine.resolve("Home, turn on the lights")
    assert r.app.name == "Home"
    assert r.intent.name == "Turn on"
    assert r.matched_by == "key_phrase"
    assert r.phrase == "turn on"


def test_resolve_sample_exact_match_distance_zero(engine):
    r = engine.resolve("Home, Change temperature")
    assert r.intent.name == "Set temperature"
    assert r.matched_by == "sample"
    assert r.distance == pytest.approx(0.0, abs=1e-9)


def test_resolve_gibberish_unrecognized(engine):
    assert engine.resolve("Home, flibber jabber") is None


def test_resolve_prefix_restricts_scope(engine):
    # "remind" belongs to Calendar; with the Home prefix it must not match
    assert engine.resolve("Home, flibber remind") is None
    r = engine.resolve("Calendar, remind")
    assert r.app.name == "Calendar"


def test_resolve_without_prefix_searches_all_apps(engine):
    r = engine.resolve("turn on the lights")
    assert r.app.name == "Home"
    assert r.intent.name == "Turn on"


def test_resolve_prefix_case_insensitive(engine):
    r = engine.resolve("home, turn off the light")
    assert r.app.name == "Home"


def test_resolve_longest_key_phrase_wins(tmp_path, store, sender):
    import json as _json

    from openpda.registry import Registry, parse_descriptor

    reg = Registry(tmp_path / "apps2")
    reg.register(parse_descriptor(_json.dumps({
        "name": "Media",
        "description": "music player",
        "type": "RemoteApp",
        "url": "http://127.0.0.1:9999",
        "intents": [
            {"name": "Play", "key_phrases": ["play"]},
            {"name": "Play loud", "key_phrases": ["play loud"]},
        ],
    })))
    eng = DialogEngine(reg, store, EngineConfig(reference_time=REFERENCE_TIME),
                       send_fn=sender)
    r = eng.resolve("play loud anthems")
    assert r.intent.name == "Play loud"
    assert r.phrase == "play loud"


def test_resolve_sample_beats_key_phrase_when_close(engine):
    # distance search runs first; "set up the mood" sits near the
    # "Set up 5 degree" sample so key phrases are never consulted
    r = engine.resolve("Home, set up the mood")
    assert r.intent.name == "Set temperature"
    assert r.matched_by == "sample"


def test_resolve_rephrase_via_distance(engine):
    # shares no content word with "Change temperature" yet lands within the
    # threshold thanks to the embedding geometry
    r = engine.resolve("Home, I feel hot, limit heater till 20")
    assert r.intent.name == "Set temperature"
    assert r.matched_by == "sample"
    assert 0 < r.distance < 1.0


# transcripts


def test_ex01_two_turn_dialog(engine, sender):
    reply = engine.handle_message("s1", "Home, turn off")
    assert reply.kind == "question"
    assert reply.text == "What should I turn off?"
    reply = engine.handle_message("s1", "the computer")
    data = dispatched(reply)
    assert data == {"AppName": "Home", "Intent": "Turn off", "object": "the computer"}
    assert len(sender.commands) == 1


def test_ex02_one_shot(engine):
    reply = engine.handle_message("s1", "Calendar, remind 16th of November to meet Sasha")
    data = dispatched(reply)
    assert data == {
        "AppName": "Calendar",
        "Intent": "Create remind",
        "Subject": "meet Sasha",
        "Date": "16th of November",
    }


def test_ex03_multi_turn(engine):
    assert engine.handle_message("s1", "Calendar, remind").text == "When should I remind you?"
    assert engine.handle_message("s1", "on Monday").text == "What should I remind you?"
    reply = engine.handle_message("s1", "meet Sasha on the airport")
    data = dispatched(reply)
    assert data == {
        "AppName": "Calendar",
        "Intent": "Create remind",
        "Subject": "meet Sasha on the airport",
        "Date": "Monday",
    }


def test_ex04_one_shot(engine):
    reply = engine.handle_message("s1", "Home, turn off air conditioning")
    data = dispatched(reply)
    assert data == {"AppName": "Home", "Intent": "Turn off", "object": "air conditioning"}


def test_tc01_one_shot(engine):
    reply = engine.handle_message("s1", "Home, turn on the lights")
    data = dispatched(reply)
    assert data == {"AppName": "Home", "Intent": "Turn on", "object": "the lights"}


def test_set_temperature_one_shot(engine):
    reply = engine.handle_message("s1", "Home, Set up temperature at 25 degree")
    data = dispatched(reply)
    assert data["Intent"] == "Set temperature"
    assert data["temperature"] == "25"


def test_number_question_flow(engine):
    reply = engine.handle_message("s1", "Home, Change temperature")
    assert reply.kind == "question"
    assert reply.text == "What temperature I should setup?"
    reply = engine.handle_message("s1", "25")
    assert dispatched(reply)["temperature"] == "25"


# dialog mechanics


def test_unrecognized_notice(engine):
    reply = engine.handle_message("s1", "zorp glorp")
    assert reply.kind == "unrecognized"
    assert reply.text == UNRECOGNIZED_TEXT
    assert reply.command is None


def test_reask_then_abort(engine, sender):
    engine.handle_message("s1", "Home, Change temperature")
    r1 = engine.handle_message("s1", "very warm please")
    assert r1.kind == "question"  # first re-ask
    r2 = engine.handle_message("s1", "no numbers here")
    assert r2.kind == "question"  # second re-ask
    r3 = engine.handle_message("s1", "still nothing")
    assert r3.kind == "aborted"
    assert r3.text == ABORTED_TEXT
    assert sender.commands == []
    # session is idle again and usable
    reply = engine.handle_message("s1", "Home, turn on the lights")
    assert reply.kind == "result"


def test_command_only_after_all_obligatory_filled(engine, sender):
    engine.handle_message("s1", "Calendar, remind")
    assert sender.commands == []
    engine.handle_message("s1", "on Monday")
    assert sender.commands == []
    engine.handle_message("s1", "pick up the cake")
    assert len(sender.commands) == 1


def test_string_answer_fills_other_pending_slot(engine):
    engine.handle_message("s1", "Calendar, remind")
    reply = engine.handle_message("s1", "on Friday")  # Date slot
    assert reply.kind == "question"
    # the Subject answer happens to contain nothing typed, plain fill
    reply = engine.handle_message("s1", "buy milk")
    assert dispatched(reply)["Subject"] == "buy milk"


def test_session_isolation(engine):
    engine.handle_message("a", "Home, turn off")
    engine.handle_message("b", "Calendar, remind")
    reply_a = engine.handle_message("a", "the computer")
    reply_b = engine.handle_message("b", "on Monday")
    assert dispatched(reply_a)["object"] == "the computer"
    assert reply_b.kind == "question"
    assert reply_b.text == "What should I remind you?"


def test_dispatch_failure_is_a_result_and_resets(engine, registry, store):
    failing = CapturingSender(result=DispatchResult(status="unreachable", text="boom"))
    engine_fail = DialogEngine(registry=registry, store=store,
                               config=EngineConfig(reference_time=REFERENCE_TIME),
                               send_fn=failing)
    reply = engine_fail.handle_message("s1", "Home, turn on the lights")
    assert reply.kind == "result"
    assert "could not reach" in reply.text
    assert reply.command is not None  # the attempt is still echoed
    # engine is idle again
    next_reply = engine_fail.handle_message("s1", "Home, turn off")
    assert next_reply.kind == "question"


def test_question_texts_verbatim_from_descriptor(engine, registry):
    app = registry.get("Home")
    questions = {p.question for it in app.intents for p in it.parameters}
    reply = engine.handle_message("s1", "Home, turn off")
    assert reply.text in questions


def test_determinism(registry, store):
    script = ["Calendar, remind", "on Monday", "meet Sasha on the airport"]

    def run():
        eng = DialogEngine(registry=registry, store=store,
                           config=EngineConfig(reference_time=REFERENCE_TIME),
                           send_fn=CapturingSender())
        return [(r.kind, r.text, r.command_bytes)
                for r in (eng.handle_message("s", m) for m in script)]

    assert run() == run()


def test_scaling_invariance(registry, sender):
    # scaling every vector by k scales every distance by k; with the
    # threshold scaled too the chosen intent is unchanged
    base = toy_store()
    k = 3.7
    scaled = EmbeddingStore(
        base.dimension,
        {w: np.asarray(base.vector(w)) * k for w in base._vectors},
    )
    text = "Home, I feel hot, limit heater till 20"
    eng1 = DialogEngine(registry, base,
                        EngineConfig(threshold=1.0, reference_time=REFERENCE_TIME),
                        send_fn=sender)
    eng2 = DialogEngine(registry, scaled,
                        EngineConfig(threshold=1.0 * k, reference_time=REFERENCE_TIME),
                        send_fn=sender)
    r1, r2 = eng1.resolve(text), eng2.resolve(text)
    assert r1.intent.name == r2.intent.name
    assert r2.distance == pytest.approx(r1.distance * k, rel=1e-6)


def test_config_validation():
    with pytest.raises(ConfigError):
        EngineConfig(threshold=-1)
    with pytest.raises(ConfigError):
        EngineConfig(threshold=float("inf"))
    with pytest.raises(ConfigError):
        EngineConfig(max_reasks=0)


def test_session_holds_its_transcript(engine):
    engine.handle_message("s7", "Home, turn off")
    engine.handle_message("s7", "the computer")
    session = engine._session("s7")
    directions = [d for d, _ in session.transcript]
    assert directions == ["user", "dpa", "user", "dpa"]
    assert session.transcript[1] == ("dpa", "What should I turn off?")


def test_transcript_log(engine, tmp_path, registry, store, sender):
    path = tmp_path / "transcript.jsonl"
    eng = DialogEngine(registry, store,
                       EngineConfig(reference_time=REFERENCE_TIME),
                       send_fn=sender, transcript_path=path)
    eng.handle_message("s9", "Home, turn on the lights")
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert [l["direction"] for l in lines] == ["user", "dpa"]
    assert lines[0]["session"] == "s9"
    assert lines[0]["text"] == "Home, turn on the lights"
    assert set(lines[0]) == {"ts", "session", "direction", "text"}

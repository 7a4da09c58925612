import json
from importlib import resources

import pytest

from openpda.errors import (
    DuplicateIntent,
    NameConflict,
    NotFound,
    SchemaViolation,
    TwoParamsSameType,
    UnreachableIntent,
)
from openpda.registry import Registry, parse_descriptor, serialize_descriptor


def fixture_bytes(name):
    return resources.files("openpda").joinpath(f"data/apps/{name}.json").read_bytes()


def home_dict():
    return json.loads(fixture_bytes("Home"))


def test_home_fixture_parses():
    app = parse_descriptor(fixture_bytes("Home"))
    assert app.name == "Home"
    assert app.url == "http://127.0.0.1:7878"
    temp = app.intents[0]
    assert temp.name == "Set temperature"
    assert temp.samples == ("Change temperature", "Set up 5 degree")
    assert temp.key_phrases == ("set", "set up")
    assert temp.parameters[0].question == "What temperature I should setup?"
    assert temp.parameters[0].obligatory


def test_calendar_fixture_parses():
    app = parse_descriptor(fixture_bytes("Calendar"))
    names = [p.name for p in app.intents[0].parameters]
    assert names == ["Date", "Subject"]


def test_unknown_field_rejected():
    d = home_dict()
    d["surprise"] = 1
    with pytest.raises(SchemaViolation) as e:
        parse_descriptor(json.dumps(d))
    assert "surprise" in str(e.value)


def test_missing_url_rejected():
    d = home_dict()
    del d["url"]
    with pytest.raises(SchemaViolation) as e:
        parse_descriptor(json.dumps(d))
    assert "url" in str(e.value)


def test_bad_url_rejected():
    d = home_dict()
    d["url"] = "not a url"
    with pytest.raises(SchemaViolation):
        parse_descriptor(json.dumps(d))


def test_unreachable_intent():
    d = home_dict()
    d["intents"][0]["samples"] = []
    d["intents"][0]["key_phrases"] = []
    with pytest.raises(UnreachableIntent):
        parse_descriptor(json.dumps(d))


def test_duplicate_intent():
    d = home_dict()
    d["intents"].append(dict(d["intents"][0]))
    with pytest.raises(DuplicateIntent):
        parse_descriptor(json.dumps(d))


def test_two_params_same_type():
    d = home_dict()
    d["intents"][0]["parameters"].append(
        {"name": "other", "data_type": "Number", "obligatory": False}
    )
    with pytest.raises(TwoParamsSameType):
        parse_descriptor(json.dumps(d))


def test_obligatory_needs_question():
    d = home_dict()
    del d["intents"][0]["parameters"][0]["question"]
    with pytest.raises(SchemaViolation) as e:
        parse_descriptor(json.dumps(d))
    assert "question" in str(e.value)


def test_pattern_only_for_string():
    d = home_dict()
    d["intents"][0]["parameters"][0]["pattern"] = "x+"
    with pytest.raises(SchemaViolation):
        parse_descriptor(json.dumps(d))


def test_pattern_must_compile():
    d = home_dict()
    d["intents"][2]["parameters"][0]["pattern"] = "("
    with pytest.raises(SchemaViolation):
        parse_descriptor(json.dumps(d))


def test_roundtrip_identity():
    app = parse_descriptor(fixture_bytes("Home"))
    again = parse_descriptor(serialize_descriptor(app))
    assert again == app


def test_register_get_list_remove(tmp_path):
    reg = Registry(tmp_path)
    reg.register(parse_descriptor(fixture_bytes("Home")))
    reg.register(parse_descriptor(fixture_bytes("Calendar")))
    assert len(reg.list()) == 2
    assert reg.get("Home").name == "Home"
    assert (tmp_path / "Home.json").exists()
    reg.remove("Home")
    assert not (tmp_path / "Home.json").exists()
    with pytest.raises(NotFound):
        reg.get("Home")
    with pytest.raises(NotFound):
        reg.remove("Home")


def test_name_conflict_case_insensitive(tmp_path):
    reg = Registry(tmp_path)
    reg.register(parse_descriptor(fixture_bytes("Home")))
    lower = home_dict()
    lower["name"] = "home"
    with pytest.raises(NameConflict):
        reg.register(parse_descriptor(json.dumps(lower)))


def test_registry_persists_across_restart(tmp_path):
    reg = Registry(tmp_path)
    reg.register(parse_descriptor(fixture_bytes("Home")))
    reborn = Registry(tmp_path)
    assert reborn.get("Home").name == "Home"


def test_registry_skips_invalid_files(tmp_path):
    (tmp_path / "junk.json").write_text("{nope", encoding="utf-8")
    reg = Registry(tmp_path)
    assert reg.list() == []


def test_lookup_by_token(tmp_path):
    reg = Registry(tmp_path)
    reg.register(parse_descriptor(fixture_bytes("Home")))
    assert reg.find_app_by_token("home").name == "Home"
    assert reg.find_app_by_token("nope") is None

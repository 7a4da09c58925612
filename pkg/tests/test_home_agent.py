import json

import pytest
from fastapi.testclient import TestClient

from openpda.errors import (
    ConfigError,
    MalformedReading,
    MissingParam,
    UnknownObject,
    UnknownRelay,
)
from openpda.home.agent import (
    HomeAgent,
    SynonymTable,
    create_agent_app,
    parse_reading,
    replay_journal,
    thermostat_step,
)


class FakeBus:
    def __init__(self):
        self.published = []

    def publish(self, topic, payload):
        self.published.append((topic, json.loads(payload)))
        return len(self.published)

    def close(self):
        pass


@pytest.fixture
def agent(tmp_path):
    a = HomeAgent(journal_path=tmp_path / "readings.jsonl")
    a._bus = FakeBus()
    return a


def bus_of(agent):
    return agent._bus.published


def reading_payload(ts=1000.0, temperature=21.5, humidity=40.0, light=0.8, device="esp-1"):
    return json.dumps({"device": device, "temperature": temperature,
                       "humidity": humidity, "light": light, "ts": ts})


# synonyms


def test_synonym_resolution():
    table = SynonymTable.default()
    assert table.resolve("the light") == "light"
    assert table.resolve("lights") == "light"
    assert table.resolve("The Lights") == "light"
    assert table.resolve("air conditioning") == "air_conditioning"
    assert table.resolve("the computer") == "computer"


def test_synonym_unknown_object():
    with pytest.raises(UnknownObject):
        SynonymTable.default().resolve("the dishwasher")


def test_synonym_conflicts_rejected():
    with pytest.raises(ConfigError):
        SynonymTable({"a": ["thing"], "b": ["thing"]})


# commands


def test_turn_off_light(agent):
    text = agent.handle_command(
        {"AppName": "Home", "Intent": "Turn off", "object": "the light"})
    assert "off" in text
    assert agent.actuators["light"].on is False
    topic, cmd = bus_of(agent)[0]
    assert topic == "home/commands"
    assert cmd["relay"] == "light" and cmd["action"] == "off"
    assert cmd["correlation_id"]


def test_turn_on_then_off_flips_state(agent):
    agent.handle_command({"Intent": "Turn on", "object": "the lights"})
    assert agent.actuators["light"].on is True
    agent.handle_command({"Intent": "Turn off", "object": "the lights"})
    assert agent.actuators["light"].on is False


def test_set_temperature(agent):
    text = agent.handle_command({"Intent": "Set temperature", "temperature": "25"})
    assert "25" in text
    assert agent.actuators["heater"].setpoint == 25.0
    topic, cmd = bus_of(agent)[0]
    assert cmd == {"relay": "heater", "action": "set_setpoint", "setpoint": 25.0,
                   "correlation_id": cmd["correlation_id"]}


def test_unknown_object(agent):
    with pytest.raises(UnknownObject):
        agent.handle_command({"Intent": "Turn off", "object": "the dishwasher"})


def test_missing_param(agent):
    with pytest.raises(MissingParam):
        agent.handle_command({"Intent": "Turn off"})
    with pytest.raises(MissingParam):
        agent.handle_command({"Intent": "Set temperature"})
    with pytest.raises(MissingParam):
        agent.handle_command({"Intent": "Dance"})


def test_every_command_publishes_exactly_once_with_fresh_correlation(agent):
    agent.handle_command({"Intent": "Turn on", "object": "light"})
    agent.handle_command({"Intent": "Turn off", "object": "light"})
    agent.handle_command({"Intent": "Set temperature", "temperature": "22"})
    ids = [cmd["correlation_id"] for _, cmd in bus_of(agent)]
    assert len(ids) == 3
    assert len(set(ids)) == 3


# readings


def test_ingest_stores_three_sensors(agent):
    assert agent.ingest_reading(reading_payload()) is True
    state = agent.query_state()
    sensors = {(r["device"], r["sensor"]): r["value"] for r in state["readings"]}
    assert sensors[("esp-1", "temperature")] == 21.5
    assert sensors[("esp-1", "humidity")] == 40.0
    assert sensors[("esp-1", "light")] == 0.8


def test_ingest_rejects_bad_humidity(agent):
    with pytest.raises(MalformedReading):
        agent.ingest_reading(reading_payload(humidity=140))


def test_parse_reading_validation():
    with pytest.raises(MalformedReading):
        parse_reading("not json")
    with pytest.raises(MalformedReading):
        parse_reading(json.dumps({"device": "x", "temperature": "hot",
                                  "humidity": 1, "light": 0, "ts": 1}))
    with pytest.raises(MalformedReading):
        parse_reading(json.dumps({"temperature": 1, "humidity": 1, "light": 0, "ts": 1}))


def test_duplicate_redelivery_is_deduped(agent, tmp_path):
    payload = reading_payload(ts=2000.0)
    assert agent.ingest_reading(payload) is True
    assert agent.ingest_reading(payload) is False
    lines = (tmp_path / "readings.jsonl").read_text().splitlines()
    assert len(lines) == 1


def test_stale_reading_dropped(agent):
    agent.ingest_reading(reading_payload(ts=3000.0))
    assert agent.ingest_reading(reading_payload(ts=2999.0)) is False


def test_query_state_empty(agent):
    state = agent.query_state()
    assert state["readings"] == []
    assert {a["relay"] for a in state["actuators"]} == {
        "light", "heater", "computer", "air_conditioning"}


def test_journal_replay_reconstructs_latest(agent, tmp_path):
    agent.ingest_reading(reading_payload(ts=1.0, temperature=20.0))
    agent.ingest_reading(reading_payload(ts=2.0, temperature=21.0))
    agent.ingest_reading(reading_payload(ts=3.0, temperature=22.5))
    replayed = replay_journal(tmp_path / "readings.jsonl")
    live = {(r["device"], r["sensor"]): r for r in agent.query_state()["readings"]}
    assert replayed == live


def test_set_actuator(agent):
    agent.set_actuator("light", True)
    assert agent.actuators["light"].on is True
    with pytest.raises(UnknownRelay):
        agent.set_actuator("toaster", True)


# thermostat


def test_thermostat_below_band_turns_on():
    assert thermostat_step(20.0, 25.0, heater_on=False) == {"relay": "heater", "action": "on"}


def test_thermostat_inside_band_no_command():
    assert thermostat_step(25.0, 25.0, heater_on=False) is None
    assert thermostat_step(25.0, 25.0, heater_on=True) is None


def test_thermostat_above_band_turns_off():
    assert thermostat_step(26.0, 25.0, heater_on=True) == {"relay": "heater", "action": "off"}


def test_thermostat_without_setpoint_is_inert():
    assert thermostat_step(10.0, None, heater_on=False) is None


def test_thermostat_drives_heater_from_readings(agent):
    agent.handle_command({"Intent": "Set temperature", "temperature": "25"})
    agent.ingest_reading(reading_payload(ts=1.0, temperature=20.0))
    assert agent.actuators["heater"].on is True
    commands = [cmd for _, cmd in bus_of(agent) if cmd["action"] in ("on", "off")]
    assert commands[-1] == {"relay": "heater", "action": "on",
                            "correlation_id": commands[-1]["correlation_id"]}
    agent.ingest_reading(reading_payload(ts=2.0, temperature=26.0))
    assert agent.actuators["heater"].on is False


def test_thermostat_publishes_over_real_bus_without_stall(tmp_path):
    # the thermostat command is triggered from the bus reader thread; it
    # must go out promptly instead of stalling on its own acknowledgment
    import time

    from openpda.bus.broker import BrokerThread
    from openpda.bus.client import BusClient

    from .test_bus import wait_until

    broker = BrokerThread(port=0, retry_interval=0.2).start()
    agent = HomeAgent(journal_path=tmp_path / "r.jsonl", bus_port=broker.port)
    agent.connect_bus()
    commands = []
    watcher = BusClient("cmd-watch", port=broker.port,
                        on_message=lambda f: commands.append(json.loads(f.payload))).connect()
    watcher.subscribe("home/commands")
    sensor = BusClient("fake-esp", port=broker.port).connect()
    try:
        agent.handle_command({"Intent": "Set temperature", "temperature": "25"})
        assert wait_until(lambda: any(c["action"] == "set_setpoint" for c in commands),
                          timeout=3)
        start = time.monotonic()
        sensor.publish("home/sensorData", reading_payload(ts=time.time(), temperature=18.0))
        assert wait_until(
            lambda: any(c["action"] == "on" and c["relay"] == "heater" for c in commands),
            timeout=3), "heater command never reached the bus"
        assert time.monotonic() - start < 2.0
        assert agent.actuators["heater"].on is True
    finally:
        sensor.close()
        watcher.close()
        agent.close()
        broker.stop()


# HTTP surface


@pytest.fixture
def client(agent):
    return TestClient(create_agent_app(agent))


def test_http_command_roundtrip(client, agent):
    resp = client.post("/command", json={"AppName": "Home", "Intent": "Turn off",
                                         "object": "the light"})
    assert resp.status_code == 200
    assert "off" in resp.text
    assert agent.actuators["light"].on is False


def test_http_unknown_object_is_422(client):
    resp = client.post("/command", json={"Intent": "Turn off", "object": "the moon"})
    assert resp.status_code == 422
    assert "Sorry" in resp.text


def test_http_missing_param_is_400(client):
    assert client.post("/command", json={"Intent": "Turn off"}).status_code == 400
    assert client.post("/command", content=b"garbage").status_code == 400


def test_http_state_and_actuators(client, agent):
    agent.ingest_reading(reading_payload())
    state = client.get("/state").json()
    assert len(state["readings"]) == 3
    resp = client.post("/actuators/light", json={"on": True})
    assert resp.status_code == 200
    assert agent.actuators["light"].on is True
    assert client.post("/actuators/toaster", json={"on": True}).status_code == 422
    assert client.post("/actuators/light", json={"on": "yes"}).status_code == 400


def test_http_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.text == "ok"

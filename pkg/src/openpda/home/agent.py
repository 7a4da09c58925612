"""Smart-home agent.

Receives dispatched commands over HTTP, maps the spoken object to a relay
through a synonym table, and drives the device over the bus. Sensor
readings arriving on the bus are deduplicated, journaled to a JSON-lines
file and folded into a latest-value map served by the console API. A
bang-bang thermostat with 0.5 degree hysteresis keeps the heater on
target once a setpoint is set.
"""
from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..bus.client import BusClient
from ..errors import (
    ConfigError,
    MalformedReading,
    MissingParam,
    NotConnected,
    UnknownObject,
    UnknownRelay,
)
from ..language import normalize_text, tokenize

log = logging.getLogger(__name__)

COMMANDS_TOPIC = "home/commands"
SENSOR_TOPIC = "home/sensorData"
SENSORS = ("temperature", "humidity", "light")
THERMOSTAT_HYSTERESIS = 0.5
THERMOSTAT_RELAY = "heater"


@dataclass
class ActuatorState:
    relay_id: str
    on: bool = False
    last_changed: float = 0.0
    setpoint: float | None = None


class SynonymTable:
    """Normalized phrase -> relay id, with leading articles stripped."""

    ARTICLES = ("the", "a", "an")

    def __init__(self, entries: dict[str, list[str]]):
        self._phrases: dict[str, str] = {}
        self.relays = tuple(entries.keys())
        for relay, phrases in entries.items():
            for phrase in phrases:
                key = self._normalize(phrase)
                if not key:
                    continue
                if key in self._phrases and self._phrases[key] != relay:
                    raise ConfigError(
                        f"synonym {phrase!r} maps to both {self._phrases[key]} and {relay}"
                    )
                self._phrases[key] = relay

    @staticmethod
    def _normalize(phrase: str) -> str:
        words = [normalize_text(w) for w in phrase.split()]
        return " ".join(w for w in words if w)

    def resolve(self, surface: str) -> str:
        try:
            words = [t.normalized for t in tokenize(surface) if not t.is_punct]
        except Exception:
            words = []
        candidates = [" ".join(words)]
        trimmed = list(words)
        while trimmed and trimmed[0] in self.ARTICLES:
            trimmed.pop(0)
            candidates.append(" ".join(trimmed))
        for key in candidates:
            if key and key in self._phrases:
                return self._phrases[key]
        raise UnknownObject(f"I don't know anything called {surface!r}")

    @classmethod
    def from_file(cls, path) -> "SynonymTable":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls._from_config(data)

    @classmethod
    def default(cls) -> "SynonymTable":
        raw = resources.files("openpda").joinpath("data/synonyms.json").read_text("utf-8")
        return cls._from_config(json.loads(raw))

    @classmethod
    def _from_config(cls, data: dict) -> "SynonymTable":
        entries: dict[str, list[str]] = {}
        for device in data.get("devices", []):
            if device.get("kind") != "relay":
                continue
            entries[device["device_id"]] = list(device.get("synonyms", []))
        if not entries:
            raise ConfigError("synonym table defines no relays")
        return cls(entries)


def parse_reading(payload: str) -> dict:
    """Validate one sensor payload; raises MalformedReading."""
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedReading(f"undecodable reading: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedReading("reading must be a JSON object")
    device = obj.get("device")
    if not isinstance(device, str) or not device:
        raise MalformedReading("reading needs a device id")
    for key in ("temperature", "humidity", "light", "ts"):
        if not isinstance(obj.get(key), (int, float)) or isinstance(obj.get(key), bool):
            raise MalformedReading(f"reading field {key!r} must be a number")
    if not 0 <= obj["humidity"] <= 100:
        raise MalformedReading(f"humidity {obj['humidity']} out of [0, 100]")
    if not 0 <= obj["light"] <= 1:
        raise MalformedReading(f"light {obj['light']} out of [0, 1]")
    return obj


def thermostat_step(temperature: float, setpoint: float | None,
                    heater_on: bool) -> dict | None:
    """Bang-bang control: returns the relay command to issue, if any."""
    if setpoint is None:
        return None
    if temperature < setpoint - THERMOSTAT_HYSTERESIS and not heater_on:
        return {"relay": THERMOSTAT_RELAY, "action": "on"}
    if temperature > setpoint + THERMOSTAT_HYSTERESIS and heater_on:
        return {"relay": THERMOSTAT_RELAY, "action": "off"}
    return None


def replay_journal(path) -> dict[tuple[str, str], dict]:
    """Rebuild the latest-value map from the journal file."""
    latest: dict[tuple[str, str], dict] = {}
    journal = Path(path)
    if not journal.exists():
        return latest
    for line in journal.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            obj = parse_reading(line)
        except MalformedReading:
            continue
        for sensor in SENSORS:
            key = (obj["device"], sensor)
            if key not in latest or obj["ts"] >= latest[key]["ts"]:
                latest[key] = {"device": obj["device"], "sensor": sensor,
                               "value": obj[sensor], "ts": obj["ts"]}
    return latest


class HomeAgent:
    """Core logic, HTTP-free; the FastAPI app below is a thin wrapper."""

    def __init__(self, journal_path, synonyms: SynonymTable | None = None,
                 bus_host: str = "127.0.0.1", bus_port: int = 1883,
                 event_sink=None):
        self.journal_path = Path(journal_path)
        self.synonyms = synonyms or SynonymTable.default()
        self.bus_host = bus_host
        self.bus_port = bus_port
        self._event_sink = event_sink
        self._lock = threading.Lock()
        self._latest = replay_journal(self.journal_path)
        self._last_ts: dict[str, float] = {}
        for (device, _sensor), entry in self._latest.items():
            self._last_ts[device] = max(self._last_ts.get(device, 0.0), entry["ts"])
        self.actuators: dict[str, ActuatorState] = {
            relay: ActuatorState(relay_id=relay) for relay in self.synonyms.relays
        }
        self._bus: BusClient | None = None
        self.issued_commands: list[dict] = []

    # bus wiring

    def connect_bus(self) -> None:
        client = BusClient("home-agent", self.bus_host, self.bus_port,
                           on_message=self._on_bus_message)
        client.connect()
        client.subscribe(SENSOR_TOPIC)
        self._bus = client

    def close(self) -> None:
        if self._bus is not None:
            self._bus.close()
            self._bus = None

    def _on_bus_message(self, frame):
        # poison payloads are logged and acknowledged, never retried forever
        try:
            self.ingest_reading(frame.payload)
        except MalformedReading as exc:
            log.warning("agent: dropping reading: %s", exc)

    def _publish(self, command: dict) -> None:
        command = dict(command)
        command["correlation_id"] = uuid.uuid4().hex
        if self._bus is None:
            raise NotConnected("agent has no bus connection")
        self._bus.publish(COMMANDS_TOPIC, json.dumps(command))
        self.issued_commands.append(command)
        if self._event_sink:
            self._event_sink({"type": "actuator", **command})

    # operations

    def ingest_reading(self, payload: str) -> bool:
        """Returns True when the reading was new and stored."""
        obj = parse_reading(payload)
        device, ts = obj["device"], obj["ts"]
        with self._lock:
            last = self._last_ts.get(device)
            if last is not None and ts <= last:
                # redelivered duplicate (equal ts) or stale out-of-order reading;
                # either way the journal's per-device monotonicity holds
                if ts < last:
                    log.info("agent: stale reading from %s at %s dropped", device, ts)
                return False
            self._last_ts[device] = ts
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            for sensor in SENSORS:
                self._latest[(device, sensor)] = {
                    "device": device, "sensor": sensor,
                    "value": obj[sensor], "ts": ts,
                }
            heater = self.actuators.get(THERMOSTAT_RELAY)
            step = thermostat_step(obj["temperature"],
                                   heater.setpoint if heater else None,
                                   heater.on if heater else False)
        if self._event_sink:
            self._event_sink({"type": "reading", **obj})
        if step is not None:
            self._set_relay(step["relay"], step["action"] == "on")
        return True

    def handle_command(self, command: dict) -> str:
        intent = command.get("Intent", "")
        if intent in ("Turn on", "Turn off"):
            surface = command.get("object")
            if not surface:
                raise MissingParam("the command needs an 'object' parameter")
            relay = self.synonyms.resolve(surface)
            turn_on = intent == "Turn on"
            self._set_relay(relay, turn_on)
            pretty = relay.replace("_", " ")
            return f"Okay, the {pretty} is now {'on' if turn_on else 'off'}."
        if intent == "Set temperature":
            raw = command.get("temperature")
            if raw is None:
                raise MissingParam("the command needs a 'temperature' parameter")
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise MissingParam(f"temperature {raw!r} is not a number") from None
            with self._lock:
                heater = self.actuators[THERMOSTAT_RELAY]
                if heater.setpoint != value:
                    heater.setpoint = value
                    heater.last_changed = time.time()
            self._publish({"relay": THERMOSTAT_RELAY, "action": "set_setpoint",
                           "setpoint": value})
            return f"Okay, I will keep the temperature at {value:g} degrees."
        raise MissingParam(f"unsupported intent {intent!r}")

    def _set_relay(self, relay: str, turn_on: bool) -> None:
        if relay not in self.actuators:
            raise UnknownRelay(f"no relay named {relay!r}")
        with self._lock:
            state = self.actuators[relay]
            if state.on != turn_on:
                state.on = turn_on
                state.last_changed = time.time()
        self._publish({"relay": relay, "action": "on" if turn_on else "off"})

    def set_actuator(self, relay: str, turn_on: bool) -> None:
        self._set_relay(relay, turn_on)

    def query_state(self) -> dict:
        with self._lock:
            readings = sorted(self._latest.values(),
                              key=lambda r: (r["device"], r["sensor"]))
            actuators = [
                {"relay": a.relay_id, "on": a.on,
                 "last_changed": a.last_changed, "setpoint": a.setpoint}
                for a in self.actuators.values()
            ]
        return {"readings": readings, "actuators": actuators}


def create_agent_app(agent: HomeAgent) -> FastAPI:
    app = FastAPI(title="home-agent", docs_url=None, redoc_url=None)

    @app.post("/command")
    async def command(request: Request):
        try:
            body = json.loads(await request.body())
            if not isinstance(body, dict):
                raise ValueError("command must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            return PlainTextResponse(f"bad command: {exc}", status_code=400)
        try:
            text = agent.handle_command(body)
        except MissingParam as exc:
            return PlainTextResponse(str(exc), status_code=400)
        except UnknownObject as exc:
            return PlainTextResponse(f"Sorry, {exc}", status_code=422)
        except NotConnected:
            return PlainTextResponse("the home bus is down", status_code=503)
        return PlainTextResponse(text)

    @app.get("/state")
    async def state():
        return JSONResponse(agent.query_state())

    @app.post("/actuators/{relay_id}")
    async def actuator(relay_id: str, request: Request):
        try:
            body = json.loads(await request.body())
            turn_on = body["on"]
            if not isinstance(turn_on, bool):
                raise ValueError
        except Exception:
            return PlainTextResponse('body must be {"on": true|false}', status_code=400)
        try:
            agent.set_actuator(relay_id, turn_on)
        except UnknownRelay as exc:
            return PlainTextResponse(str(exc), status_code=422)
        except NotConnected:
            return PlainTextResponse("the home bus is down", status_code=503)
        return JSONResponse({"relay": relay_id, "on": turn_on})

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    return app

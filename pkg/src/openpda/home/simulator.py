"""Simulated sensor/relay node.

Stands in for the microcontroller: four relays, a first-order thermal
model, a humidity random walk and a light level driven by the lamp relay.
The physics step is a pure function; the runner wires it to the bus,
publishing a reading on a fixed interval and applying relay commands as
they arrive.
"""
from __future__ import annotations

import json
import logging
import random
import threading
import time
from dataclasses import dataclass

from ..errors import ConfigError, NotConnected, UnknownRelay
from ..bus.client import BusClient

log = logging.getLogger(__name__)

COMMANDS_TOPIC = "home/commands"
SENSOR_TOPIC = "home/sensorData"
ACK_TOPIC = "home/ack"

DEFAULT_RELAYS = ("light", "heater", "computer", "air_conditioning")
AIR_CONDITIONING_PULL = 5.0  # degrees subtracted from the target while on


@dataclass(frozen=True)
class SimConfig:
    publish_interval: float = 2.0
    ambient_temp: float = 18.0
    heated_temp: float = 30.0
    time_constant: float = 120.0
    base_light: float = 0.3
    lamp_light_boost: float = 0.5
    noise_amplitude: float = 0.02
    rng_seed: int = 42
    device_id: str = "esp-1"
    relays: tuple[str, ...] = DEFAULT_RELAYS
    initial_temp: float = 18.0
    initial_humidity: float = 45.0

    def __post_init__(self):
        if self.publish_interval <= 0:
            raise ConfigError("publish_interval must be positive")
        if self.time_constant <= 0:
            raise ConfigError("time_constant must be positive")
        if self.heated_temp <= self.ambient_temp:
            raise ConfigError("heated_temp must exceed ambient_temp")


@dataclass(frozen=True)
class SimState:
    relays: dict[str, bool]
    temperature: float
    humidity: float
    light: float
    clock: float


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


def _light_for(relays: dict[str, bool], config: SimConfig, noise: float = 0.0) -> float:
    boost = config.lamp_light_boost if relays.get("light") else 0.0
    return _clamp(config.base_light + boost + noise, 0.0, 1.0)


def initial_state(config: SimConfig, start_time: float = 0.0) -> SimState:
    relays = {r: False for r in config.relays}
    return SimState(
        relays=relays,
        temperature=config.initial_temp,
        humidity=config.initial_humidity,
        light=_light_for(relays, config),
        clock=start_time,
    )


def tick(state: SimState, dt: float, config: SimConfig, rng: random.Random) -> SimState:
    """Advance the physics by dt seconds."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    target = config.heated_temp if state.relays.get("heater") else config.ambient_temp
    if state.relays.get("air_conditioning"):
        target -= AIR_CONDITIONING_PULL
    temperature = state.temperature + (dt / config.time_constant) * (target - state.temperature)

    # both draws always happen so the sequence is a function of the schedule
    humidity_step = rng.uniform(-1.0, 1.0) * config.noise_amplitude * 25.0
    light_noise = rng.uniform(-1.0, 1.0) * config.noise_amplitude
    humidity = _clamp(state.humidity + humidity_step, 30.0, 60.0)

    return SimState(
        relays=dict(state.relays),
        temperature=temperature,
        humidity=humidity,
        light=_light_for(state.relays, config, light_noise),
        clock=state.clock + dt,
    )


def apply_command(state: SimState, command: dict, config: SimConfig) -> SimState:
    """Execute one relay command; setpoint changes are not the device's job."""
    relay = command.get("relay")
    action = command.get("action")
    if action == "set_setpoint":
        return state
    if relay not in config.relays:
        raise UnknownRelay(f"no relay named {relay!r}")
    if action not in ("on", "off"):
        raise UnknownRelay(f"unsupported action {action!r}")
    relays = dict(state.relays)
    relays[relay] = action == "on"
    return SimState(
        relays=relays,
        temperature=state.temperature,
        humidity=state.humidity,
        light=_light_for(relays, config),  # relay change shows up immediately
        clock=state.clock,
    )


def reading(state: SimState, config: SimConfig, ts: float | None = None) -> dict:
    return {
        "device": config.device_id,
        "temperature": state.temperature,
        "humidity": state.humidity,
        "light": state.light,
        "ts": state.clock if ts is None else ts,
    }


class Simulator:
    """Owns the state and serializes ticks and commands onto one lock."""

    def __init__(self, config: SimConfig | None = None, start_time: float = 0.0):
        self.config = config or SimConfig()
        self.rng = random.Random(self.config.rng_seed)
        self.state = initial_state(self.config, start_time)
        self._lock = threading.Lock()
        self.applied_commands: list[dict] = []

    def tick(self, dt: float) -> SimState:
        with self._lock:
            self.state = tick(self.state, dt, self.config, self.rng)
            return self.state

    def apply(self, command: dict) -> SimState:
        with self._lock:
            self.state = apply_command(self.state, command, self.config)
            self.applied_commands.append(command)
            return self.state

    def reading(self, ts: float | None = None) -> dict:
        with self._lock:
            return reading(self.state, self.config, ts)

    def relay(self, name: str) -> bool:
        with self._lock:
            return self.state.relays[name]


class SimulatorRunner:
    """Connects the simulator to a broker and keeps it alive.

    Lost connections are retried with doubling backoff (1 s, 2 s, 4 s,
    capped at 30 s). Commands are applied the moment they arrive; a
    reading goes out every publish interval.
    """

    def __init__(self, simulator: Simulator, bus_host: str = "127.0.0.1",
                 bus_port: int = 1883, backoff_base: float = 1.0,
                 backoff_cap: float = 30.0, client_id: str = "device-sim"):
        self.sim = simulator
        self.bus_host = bus_host
        self.bus_port = bus_port
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.client_id = client_id
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._client: BusClient | None = None
        self.published_count = 0

    def _on_command(self, frame):
        try:
            command = json.loads(frame.payload)
        except json.JSONDecodeError:
            log.warning("sim: undecodable command payload: %r", frame.payload)
            return
        try:
            self.sim.apply(command)
        except UnknownRelay as exc:
            log.warning("sim: %s", exc)
            nack = {"ok": False, "error": str(exc),
                    "correlation_id": command.get("correlation_id")}
            client = self._client
            if client is not None:
                try:
                    client.publish(ACK_TOPIC, json.dumps(nack))
                except NotConnected:
                    pass

    def _serve_once(self):
        client = BusClient(self.client_id, self.bus_host, self.bus_port,
                           on_message=self._on_command)
        client.connect()
        client.subscribe(COMMANDS_TOPIC)
        self._client = client
        interval = self.sim.config.publish_interval
        try:
            while not self._stop.is_set():
                if self._stop.wait(interval):
                    break
                self.sim.tick(interval)
                payload = self.sim.reading(ts=time.time())
                client.publish(SENSOR_TOPIC, json.dumps(payload))
                self.published_count += 1
        finally:
            client.close()
            self._client = None

    def _run(self):
        backoff = self.backoff_base
        while not self._stop.is_set():
            try:
                self._serve_once()
                backoff = self.backoff_base
            except (NotConnected, OSError) as exc:
                log.info("sim: bus unavailable (%s); retrying in %.1fs", exc, backoff)
                if self._stop.wait(backoff):
                    break
                backoff = min(backoff * 2, self.backoff_cap)

    def start(self) -> "SimulatorRunner":
        self._thread = threading.Thread(target=self._run, daemon=True, name="device-sim")
        self._thread.start()
        return self

    def stop(self):
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)

    @property
    def alive(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

"""Umbrella command line: every process of the platform under one tool.

The heavy lifting lives in the library modules; each subcommand just
parses flags, builds the objects and runs them. All flags can also be
set through OPENPDA_* environment variables.
"""
from __future__ import annotations

import asyncio
import logging
import sys
import threading
import time
from importlib import resources
from pathlib import Path

import click
import uvicorn

from .bus.broker import Broker
from .dialog import DialogEngine, EngineConfig
from .embeddings import load_embeddings, toy_store
from .errors import BindFailure, NotConnected, OpenPdaError
from .home.agent import HomeAgent, SynonymTable, create_agent_app
from .home.simulator import SimConfig, Simulator, SimulatorRunner
from .registry import Registry
from .service.app import ServiceConfig, create_app

log = logging.getLogger(__name__)


def _parse_hostport(value: str, what: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise click.UsageError(f"{what} must look like HOST:PORT, got {value!r}")
    return host or "127.0.0.1", int(port)


def _seed_apps_dir(apps_dir: Path) -> None:
    apps_dir.mkdir(parents=True, exist_ok=True)
    if any(apps_dir.glob("*.json")):
        return
    for name in ("Home", "Calendar"):
        data = resources.files("openpda").joinpath(f"data/apps/{name}.json").read_bytes()
        (apps_dir / f"{name}.json").write_bytes(data)
    log.info("seeded %s with the bundled app descriptors", apps_dir)


def _default_static_dir() -> str | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


@click.group()
def cli():
    """Personal assistant platform: chat front-end, app registry and a
    simulated smart home on a pub/sub bus."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format='{"ts": "%(asctime)s", "level": "%(levelname)s", '
               '"logger": "%(name)s", "msg": "%(message)s"}',
    )
    logging.getLogger("httpx").setLevel(logging.WARNING)


@cli.command()
@click.option("--listen", default="127.0.0.1:8080", show_default=True)
@click.option("--apps-dir", default="./apps", show_default=True)
@click.option("--embeddings", default=None,
              help="word2vec text file; the bundled toy set when omitted.")
@click.option("--threshold", default=1.0, show_default=True, type=float,
              help="distance below which a sample match is accepted.")
@click.option("--keep-stopwords", is_flag=True,
              help="keep stopwords when scoring utterances.")
@click.option("--bus", default=None,
              help="HOST:PORT of the broker, enables the console event feed.")
@click.option("--agent-url", default="http://127.0.0.1:7878", show_default=True)
@click.option("--transcript", default=None, help="append dialog lines to this JSONL file.")
@click.option("--static-dir", default=None,
              help="serve the web console from this directory (default: frontend/dist).")
def serve(listen, apps_dir, embeddings, threshold, keep_stopwords, bus,
          agent_url, transcript, static_dir):
    """Run the assistant's HTTP service."""
    host, port = _parse_hostport(listen, "--listen")
    bus_host, bus_port = (None, 1883)
    if bus:
        bus_host, bus_port = _parse_hostport(bus, "--bus")
    if embeddings and not Path(embeddings).exists():
        raise click.UsageError(f"embeddings file {embeddings!r} does not exist")
    _seed_apps_dir(Path(apps_dir))
    cfg = ServiceConfig(
        apps_dir=apps_dir,
        embeddings_path=embeddings,
        threshold=threshold,
        drop_stopwords=not keep_stopwords,
        agent_url=agent_url,
        bus_host=bus_host,
        bus_port=bus_port,
        transcript_path=transcript,
        static_dir=static_dir or _default_static_dir(),
    )
    try:
        app = create_app(cfg)
    except OpenPdaError as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(app, host=host, port=port, log_level="info")


@cli.command()
@click.option("--bind", default="127.0.0.1:1883", show_default=True)
@click.option("--retry-ms", default=1000, show_default=True, type=int,
              help="redelivery interval for unacknowledged messages.")
def broker(bind, retry_ms):
    """Run the message broker."""
    host, port = _parse_hostport(bind, "--bind")
    if retry_ms <= 0:
        raise click.UsageError("--retry-ms must be positive")
    b = Broker(host=host, port=port, retry_interval=retry_ms / 1000.0)
    try:
        asyncio.run(b.serve_forever())
    except BindFailure as exc:
        raise click.ClickException(str(exc))
    except KeyboardInterrupt:
        pass


@cli.command(name="home-agent")
@click.option("--listen", default="127.0.0.1:7878", show_default=True)
@click.option("--bus", default="127.0.0.1:1883", show_default=True)
@click.option("--journal", default="readings.jsonl", show_default=True)
@click.option("--synonyms", default=None,
              help="synonym table JSON; the bundled table when omitted.")
def home_agent(listen, bus, journal, synonyms):
    """Run the smart-home agent server."""
    host, port = _parse_hostport(listen, "--listen")
    bus_host, bus_port = _parse_hostport(bus, "--bus")
    table = SynonymTable.from_file(synonyms) if synonyms else SynonymTable.default()
    agent = HomeAgent(journal_path=journal, synonyms=table,
                      bus_host=bus_host, bus_port=bus_port)

    def keep_bus_connected():
        backoff = 1.0
        while True:
            try:
                agent.connect_bus()
                log.info("agent connected to bus %s:%d", bus_host, bus_port)
                return
            except (NotConnected, OSError) as exc:
                log.info("bus unavailable (%s); retrying in %.0fs", exc, backoff)
                time.sleep(backoff)
                backoff = min(backoff * 2, 30.0)

    threading.Thread(target=keep_bus_connected, daemon=True).start()
    uvicorn.run(create_agent_app(agent), host=host, port=port, log_level="info")


@cli.command(name="device-sim")
@click.option("--bus", default="127.0.0.1:1883", show_default=True)
@click.option("--interval-ms", default=2000, show_default=True, type=int)
@click.option("--seed", default=42, show_default=True, type=int)
def device_sim(bus, interval_ms, seed):
    """Run the simulated sensor/relay device."""
    bus_host, bus_port = _parse_hostport(bus, "--bus")
    if interval_ms <= 0:
        raise click.UsageError("--interval-ms must be positive")
    sim = Simulator(SimConfig(publish_interval=interval_ms / 1000.0, rng_seed=seed),
                    start_time=time.time())
    runner = SimulatorRunner(sim, bus_host=bus_host, bus_port=bus_port).start()
    click.echo(f"device-sim publishing every {interval_ms} ms; Ctrl-C to stop", err=True)
    try:
        while runner.alive:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        runner.stop()


@cli.command()
@click.option("--apps-dir", default="./apps", show_default=True)
@click.option("--embeddings", default=None)
@click.option("--threshold", default=1.0, show_default=True, type=float)
def chat(apps_dir, embeddings, threshold):
    """Talk to the assistant in the terminal (local engine, no HTTP)."""
    _seed_apps_dir(Path(apps_dir))
    store = load_embeddings(embeddings) if embeddings else toy_store()
    try:
        engine = DialogEngine(
            registry=Registry(apps_dir),
            store=store,
            config=EngineConfig(threshold=threshold),
        )
    except OpenPdaError as exc:
        raise click.ClickException(str(exc))
    click.echo("Type a request (Ctrl-D to quit).", err=True)
    while True:
        try:
            line = input("you> ")
        except (EOFError, KeyboardInterrupt):
            click.echo("", err=True)
            break
        if not line.strip():
            continue
        try:
            reply = engine.handle_message("repl", line)
        except OpenPdaError as exc:
            click.echo(f"dpa> error: {exc}")
            continue
        click.echo(f"dpa> {reply.text}")
        if reply.command_bytes:
            click.echo(f"     sent: {reply.command_bytes.decode('utf-8')}")


@cli.command()
def demo():
    """Boot everything in-process and replay the canonical dialogs."""
    from .demo import run_demo

    failures = run_demo(out=click.echo)
    if failures:
        raise SystemExit(1)


def main():
    cli(auto_envvar_prefix="OPENPDA")


if __name__ == "__main__":
    main()

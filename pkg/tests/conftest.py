import datetime as dt
from importlib import resources

import pytest

from openpda.dialog import DialogEngine, EngineConfig
from openpda.dispatch import DispatchResult
from openpda.embeddings import toy_store
from openpda.registry import Registry, parse_descriptor

REFERENCE_TIME = dt.datetime(2018, 11, 1, 10, 0, 0)  # a Thursday


@pytest.fixture(scope="session")
def store():
    return toy_store()


def fixture_descriptor(name, url=None):
    raw = resources.files("openpda").joinpath(f"data/apps/{name}.json").read_bytes()
    app = parse_descriptor(raw)
    if url is not None:
        from dataclasses import replace
        app = replace(app, url=url)
    return app


@pytest.fixture
def registry(tmp_path):
    reg = Registry(tmp_path / "apps")
    reg.register(fixture_descriptor("Home"))
    reg.register(fixture_descriptor("Calendar"))
    return reg


class CapturingSender:
    """send_fn stand-in that records commands instead of doing HTTP."""

    def __init__(self, result=None):
        self.commands = []
        self.result = result or DispatchResult(status="ok", text="done", code=200)

    def __call__(self, command, url, timeout=5.0):
        self.commands.append((command, url))
        return self.result


@pytest.fixture
def sender():
    return CapturingSender()


@pytest.fixture
def engine(registry, store, sender):
    return DialogEngine(
        registry=registry,
        store=store,
        config=EngineConfig(threshold=1.0, reference_time=REFERENCE_TIME),
        send_fn=sender,
    )

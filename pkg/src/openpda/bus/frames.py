"""Wire frames for the pub/sub bus: one JSON object per line, UTF-8.

Fields: "op", "client", "topic", "id", "payload". Frames are capped at
64 KiB including the newline.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import BadFilter

OPS = ("CONNECT", "CONNACK", "SUBSCRIBE", "SUBACK", "PUBLISH", "PUBACK", "PING", "PONG")
MAX_FRAME_BYTES = 64 * 1024


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    op: str
    client: str = ""
    topic: str | None = None
    id: int | None = None
    payload: str | None = None


def encode_frame(frame: Frame) -> bytes:
    obj: dict = {"op": frame.op, "client": frame.client}
    if frame.topic is not None:
        obj["topic"] = frame.topic
    if frame.id is not None:
        obj["id"] = frame.id
    if frame.payload is not None:
        obj["payload"] = frame.payload
    data = (json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {len(data)} bytes exceeds the {MAX_FRAME_BYTES} limit")
    return data


def decode_frame(line: bytes) -> Frame:
    if len(line) > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {len(line)} bytes exceeds the {MAX_FRAME_BYTES} limit")
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"undecodable frame: {exc}") from None
    if not isinstance(obj, dict):
        raise FrameError("frame must be a JSON object")
    op = obj.get("op")
    if op not in OPS:
        raise FrameError(f"unknown op {op!r}")
    client = obj.get("client", "")
    if not isinstance(client, str):
        raise FrameError("client must be a string")
    topic = obj.get("topic")
    if topic is not None and not isinstance(topic, str):
        raise FrameError("topic must be a string")
    msg_id = obj.get("id")
    if msg_id is not None and not isinstance(msg_id, int):
        raise FrameError("id must be an integer")
    payload = obj.get("payload")
    if payload is not None and not isinstance(payload, str):
        raise FrameError("payload must be a string")

    frame = Frame(op=op, client=client, topic=topic, id=msg_id, payload=payload)
    if op == "PUBLISH" and (not topic or msg_id is None or payload is None):
        raise FrameError("PUBLISH requires topic, id and payload")
    if op == "SUBSCRIBE" and not topic:
        raise FrameError("SUBSCRIBE requires a topic filter")
    return frame


def validate_filter(topic_filter: str) -> None:
    """Exact topics plus a trailing '/#' (or bare '#') wildcard."""
    if not topic_filter or "\n" in topic_filter:
        raise BadFilter(f"invalid topic filter {topic_filter!r}")
    if "#" in topic_filter:
        if topic_filter != "#" and not topic_filter.endswith("/#"):
            raise BadFilter(f"'#' only allowed as the final segment: {topic_filter!r}")
        if topic_filter.count("#") != 1:
            raise BadFilter(f"at most one '#' allowed: {topic_filter!r}")


def filter_matches(topic_filter: str, topic: str) -> bool:
    if topic_filter == "#":
        return True
    if topic_filter.endswith("/#"):
        prefix = topic_filter[:-2]
        return topic == prefix or topic.startswith(prefix + "/")
    return topic_filter == topic

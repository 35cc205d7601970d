"""Single-session line server: hello first, one JSON response per request
line, errors never kill the session, EOF exits cleanly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, IO, Sequence

Points = Sequence[Sequence[float]]


@dataclass(frozen=True)
class BridgeConfig:
    classes: int
    handler: Callable
    mode: str = "classify"  # or "complete"

    def __post_init__(self):
        if self.mode not in ("classify", "complete"):
            raise ValueError(f"mode must be classify or complete, got {self.mode}")
        if self.mode == "classify" and self.classes < 2:
            raise ValueError("classify mode needs at least 2 classes")


def _error(out: IO[str], req_id, message: str) -> None:
    out.write(json.dumps({"type": "error", "id": req_id, "message": message}) + "\n")
    out.flush()


def _handle(config: BridgeConfig, msg: dict, out: IO[str]) -> None:
    req_id = msg.get("id")
    req_type = msg.get("type")
    expected = "predict" if config.mode == "classify" else "complete"
    if req_type != expected:
        _error(out, req_id, f"unsupported request type: {req_type!r}")
        return
    points = msg.get("points")
    if not isinstance(points, list):
        _error(out, req_id, "request needs a points array")
        return
    try:
        if config.mode == "classify":
            label = int(config.handler(points))
            if not 1 <= label <= config.classes:
                raise ValueError(f"handler produced out-of-range label {label}")
            resp = {"type": "label", "id": req_id, "label": label}
        else:
            completed = config.handler(points)
            resp = {"type": "points", "id": req_id, "points": completed}
    except Exception as exc:  # the session must survive handler failures
        _error(out, req_id, str(exc))
        return
    out.write(json.dumps(resp) + "\n")
    out.flush()


def serve(config: BridgeConfig, stdin: IO[str], stdout: IO[str]) -> int:
    """Run until stdin closes. Returns the process exit code (always 0)."""
    hello = {"type": "hello", "protocol": 1, "classes": config.classes}
    stdout.write(json.dumps(hello) + "\n")
    stdout.flush()
    for line in stdin:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            _error(stdout, None, "malformed JSON request line")
            continue
        if not isinstance(msg, dict):
            _error(stdout, None, "request must be a JSON object")
            continue
        _handle(config, msg, stdout)
    return 0

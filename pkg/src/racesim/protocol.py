"""Line-delimited message codec for the environment wire protocol.

One JSON object per line. Floats are serialized with 17 significant digits,
so decode(encode(x)) is value-exact for every finite double. Decoding is
strict: duplicate keys, unknown kinds, unknown or missing fields, and
non-finite numbers are all rejected.
"""

from __future__ import annotations

import json
import math

OBS_DIM = 108
ACTION_DIM = 2


class ProtocolParseError(ValueError):
    """Raised when a line cannot be decoded into a valid message."""


REQUEST_KINDS = {
    "spec": (),
    "reset": ("seed", "context"),
    "step": ("action",),
    "close": (),
}
RESPONSE_KINDS = {
    "spec": ("obs_dim", "action_dim", "rates", "context_train", "context_eval"),
    "state": ("obs", "reward", "done", "info"),
    "error": ("code", "detail"),
    "closed": (),
}


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    s = format(float(x), ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _encode_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    if isinstance(value, dict):
        items = ",".join(f"{json.dumps(str(k))}:{_encode_value(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_encode_value(v) for v in value) + "]"
    # numpy scalars and arrays arrive from the env; coerce them
    if hasattr(value, "tolist"):
        return _encode_value(value.tolist())
    raise ValueError(f"cannot serialize {type(value).__name__} in a protocol message")


def _encode_with_schema(message: dict, schemas: dict) -> str:
    if "kind" not in message:
        raise ValueError("message must carry a 'kind'")
    kind = message["kind"]
    if kind not in schemas:
        raise ValueError(f"unknown message kind {kind!r}")
    ordered = {"kind": kind}
    for field in schemas[kind]:
        if field not in message:
            raise ValueError(f"message kind {kind!r} missing field {field!r}")
        ordered[field] = message[field]
    extra = set(message) - set(ordered)
    if extra:
        raise ValueError(f"unexpected field(s) for {kind!r}: {sorted(extra)}")
    return _encode_value(ordered)


def encode_request(message: dict) -> str:
    """Canonical single-line encoding of a client request (no newline)."""
    return _encode_with_schema(message, REQUEST_KINDS)


def encode_response(message: dict) -> str:
    """Canonical single-line encoding of a server response (no newline)."""
    return _encode_with_schema(message, RESPONSE_KINDS)


def _reject_duplicates(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise ProtocolParseError(f"duplicate key {key!r}")
        seen.add(key)
        out[key] = value
    return out


def _reject_constant(token):
    raise ProtocolParseError(f"non-finite number {token!r} not allowed")


def decode_request(line: str) -> dict:
    """Parse and validate one client request line."""
    message = _decode_object(line)
    kind = message.get("kind")
    if kind not in REQUEST_KINDS:
        raise ProtocolParseError(f"unknown request kind {kind!r}")
    fields = REQUEST_KINDS[kind]
    missing = set(fields) - set(message)
    if missing:
        raise ProtocolParseError(f"{kind!r} request missing field(s) {sorted(missing)}")
    extra = set(message) - set(fields) - {"kind"}
    if extra:
        raise ProtocolParseError(f"unknown field(s) {sorted(extra)} in {kind!r} request")
    if kind == "reset":
        if not isinstance(message["seed"], int) or isinstance(message["seed"], bool):
            raise ProtocolParseError("reset.seed must be an integer")
        ctx = message["context"]
        if (
            not isinstance(ctx, list)
            or len(ctx) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in ctx)
        ):
            raise ProtocolParseError("reset.context must be a list of 2 numbers")
        message["context"] = [float(v) for v in ctx]
    if kind == "step":
        action = message["action"]
        if (
            not isinstance(action, list)
            or len(action) != ACTION_DIM
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in action)
        ):
            raise ProtocolParseError(f"step.action must be a list of {ACTION_DIM} numbers")
        message["action"] = [float(v) for v in action]
    return message


def decode_response(line: str) -> dict:
    """Parse and validate one server response line (used by clients)."""
    message = _decode_object(line)
    kind = message.get("kind")
    if kind not in RESPONSE_KINDS:
        raise ProtocolParseError(f"unknown response kind {kind!r}")
    missing = set(RESPONSE_KINDS[kind]) - set(message)
    if missing:
        raise ProtocolParseError(f"{kind!r} response missing field(s) {sorted(missing)}")
    if kind == "state":
        obs = message["obs"]
        if not isinstance(obs, list) or len(obs) != OBS_DIM:
            raise ProtocolParseError(f"state.obs must have {OBS_DIM} elements")
        if not all(isinstance(v, (int, float)) and 0.0 <= v <= 1.0 for v in obs):
            raise ProtocolParseError("state.obs values must lie in [0, 1]")
    return message


def _decode_object(line: str) -> dict:
    line = line.strip()
    if not line:
        raise ProtocolParseError("empty line")
    try:
        message = json.loads(
            line, object_pairs_hook=_reject_duplicates, parse_constant=_reject_constant
        )
    except ProtocolParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ProtocolParseError(f"invalid JSON: {exc}") from None
    if not isinstance(message, dict):
        raise ProtocolParseError("message must be a JSON object")
    return message


# -- message constructors ------------------------------------------------------


def spec_response(
    physics_hz: float = 100.0,
    agent_hz: float = 10.0,
    train_bound: float = 0.15,
    eval_bound: float = 0.3,
) -> dict:
    return {
        "kind": "spec",
        "obs_dim": OBS_DIM,
        "action_dim": ACTION_DIM,
        "rates": {"physics_hz": physics_hz, "agent_hz": agent_hz},
        "context_train": [-train_bound, train_bound],
        "context_eval": [-eval_bound, eval_bound],
    }


def state_response(obs, reward: float, done: bool, info: dict) -> dict:
    return {
        "kind": "state",
        "obs": [float(v) for v in obs],
        "reward": float(reward),
        "done": bool(done),
        "info": info,
    }


def error_response(code: str, detail: str) -> dict:
    return {"kind": "error", "code": code, "detail": detail}

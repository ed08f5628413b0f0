"""Environment server: one env per connection, strict request/response.

External agents drive an episode by sending line-delimited requests (spec,
reset, step, close) and reading exactly one response per request. A stdio
transport serves a single embedded connection; the TCP transport hosts many
isolated connections concurrently.
"""

from __future__ import annotations

import socketserver
import sys

from .adversary import Context
from .config import RaceSetup
from .errors import ConfigurationError, EpisodeProtocolError
from . import protocol


class EnvSession:
    """Per-connection request handler around one environment instance."""

    def __init__(self, setup: RaceSetup):
        self.setup = setup
        self.env = None
        self.closed = False

    def handle_line(self, line: str) -> str:
        try:
            request = protocol.decode_request(line)
        except protocol.ProtocolParseError as exc:
            shown = line.strip()
            if len(shown) > 200:
                shown = shown[:200] + "..."
            return protocol.encode_response(
                protocol.error_response("PARSE", f"{exc} (offending input: {shown!r})")
            )
        try:
            return protocol.encode_response(self._dispatch(request))
        except EpisodeProtocolError as exc:
            return protocol.encode_response(protocol.error_response("PROTOCOL", str(exc)))
        except ConfigurationError as exc:
            return protocol.encode_response(protocol.error_response("CONFIG", str(exc)))
        except Exception as exc:  # never let the session die on a request
            return protocol.encode_response(
                protocol.error_response("INTERNAL", f"{type(exc).__name__}: {exc}")
            )

    def _dispatch(self, request: dict) -> dict:
        kind = request["kind"]
        if kind == "spec":
            cfg = self.setup.config
            return protocol.spec_response(
                physics_hz=1.0 / cfg.physics_dt,
                agent_hz=1.0 / (cfg.physics_dt * cfg.n_substeps),
                train_bound=cfg.context_sample_bound,
            )
        if kind == "reset":
            if self.env is None:
                self.env = self.setup.make_env()
            ctx = Context(request["context"][0], request["context"][1])
            obs, info = self.env.reset(request["seed"], ctx)
            return protocol.state_response(obs, 0.0, False, info)
        if kind == "step":
            if self.env is None:
                raise EpisodeProtocolError("step before reset")
            result = self.env.step(request["action"])
            return protocol.state_response(result.obs, result.reward, result.done, result.info)
        if kind == "close":
            self.closed = True
            return {"kind": "closed"}
        raise EpisodeProtocolError(f"unhandled request kind {kind!r}")


def serve_stream(setup: RaceSetup, reader, writer) -> None:
    """Serve one connection over text streams until close or EOF."""
    session = EnvSession(setup)
    for line in reader:
        writer.write(session.handle_line(line) + "\n")
        writer.flush()
        if session.closed:
            break


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        try:
            reader = (raw.decode("utf-8", errors="replace") for raw in self.rfile)
            writer = _SocketWriter(self.wfile)
            serve_stream(self.server.setup, reader, writer)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client went away; the server keeps running


class _SocketWriter:
    def __init__(self, wfile):
        self.wfile = wfile

    def write(self, text: str) -> None:
        self.wfile.write(text.encode("utf-8"))

    def flush(self) -> None:
        self.wfile.flush()


class _ThreadedTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve(setup: RaceSetup, transport: str) -> None:
    """Run the server until EOF (stdio) or forever (tcp:<port>)."""
    if transport == "stdio":
        serve_stream(setup, sys.stdin, sys.stdout)
    elif transport.startswith("tcp:"):
        port = int(transport.split(":", 1)[1])
        with _ThreadedTCPServer(("127.0.0.1", port), _Handler) as server:
            server.setup = setup
            server.serve_forever()
    else:
        raise ConfigurationError(f"unknown transport {transport!r}; use stdio or tcp:<port>")

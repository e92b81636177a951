"""Client side of the navigation policy wire protocol.

The simulator is the server: it sends `hello`, then per episode a `reset`
followed by `observe` frames, and closes each episode with `done`.  The
client answers the server hello once and every observe with exactly one
`act`.  Frames are single-line UTF-8 JSON objects.

    from navclient import connect
    session = connect("tcp:127.0.0.1:7001")
    for obs in session.observations():
        session.act(my_policy(obs))

Images are never decoded here; `Observation.image` carries whatever the
server sent (a path string, or a {"path", "b64"} object in inline mode).
"""

from __future__ import annotations

import json
import socket
import sys
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1

ACTIONS = ("MOVE_FORWARD", "TURN_LEFT", "TURN_RIGHT", "STOP")


class SessionError(RuntimeError):
    """Protocol violation or server-reported error."""


@dataclass(frozen=True)
class Observation:
    episode_id: int
    step: int
    image: object
    goal_distance: float
    goal_bearing: float
    prev_action: str | None
    raw: dict = field(repr=False)


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: int
    outcome: str
    final_distance: float


class StdioTransport:
    """Line transport over this process's stdin/stdout (spawned clients)."""

    def __init__(self, stdin=None, stdout=None):
        self._in = stdin if stdin is not None else sys.stdin
        self._out = stdout if stdout is not None else sys.stdout

    def read_line(self):
        line = self._in.readline()
        return line if line else None

    def write_line(self, line: str) -> None:
        self._out.write(line + "\n")
        self._out.flush()

    def close(self) -> None:
        pass


class TcpTransport:
    """Line transport over a TCP connection to the simulator."""

    def __init__(self, host: str, port: int, timeout: float = 60.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._buffer = b""

    def read_line(self):
        while b"\n" not in self._buffer:
            chunk = self._sock.recv(65536)
            if not chunk:
                return None
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def write_line(self, line: str) -> None:
        self._sock.sendall((line + "\n").encode("utf-8"))

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class Session:
    """One protocol session: handshake on construction, then iterate."""

    def __init__(self, transport):
        self._transport = transport
        self._episode_id = None
        self._awaiting_act = False
        self.metadata = {}
        self.results = []
        hello = self._read()
        if hello is None or hello.get("kind") != "hello":
            raise SessionError(f"expected hello frame, got {hello!r}")
        if hello.get("version") != PROTOCOL_VERSION:
            raise SessionError(f"unsupported protocol version {hello.get('version')!r}")
        self.metadata = {k: v for k, v in hello.items() if k not in ("kind", "version")}
        self._write({"kind": "hello", "version": PROTOCOL_VERSION})

    def _read(self):
        line = self._transport.read_line()
        if line is None:
            return None
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise SessionError(f"malformed frame from server: {exc}") from exc

    def _write(self, obj) -> None:
        self._transport.write_line(json.dumps(obj))

    def observations(self):
        """Yield observations until the server closes the session.

        `reset` and `done` frames are consumed internally; completed
        episode results accumulate in `self.results`.
        """
        while True:
            frame = self._read()
            if frame is None:
                return
            kind = frame.get("kind")
            if kind == "reset":
                self._episode_id = frame["episode_id"]
            elif kind == "observe":
                if self._awaiting_act:
                    raise SessionError("server sent observe before act was consumed")
                self._awaiting_act = True
                yield Observation(
                    episode_id=self._episode_id,
                    step=frame["step"],
                    image=frame["image"],
                    goal_distance=frame["goal_distance"],
                    goal_bearing=frame["goal_bearing"],
                    prev_action=frame["prev_action"],
                    raw=frame,
                )
            elif kind == "done":
                self.results.append(
                    EpisodeResult(
                        episode_id=self._episode_id,
                        outcome=frame["outcome"],
                        final_distance=frame["final_distance"],
                    )
                )
            elif kind == "error":
                raise SessionError(f"server error: {frame.get('message')}")
            else:
                raise SessionError(f"unexpected frame kind {kind!r}")

    def act(self, action: str) -> None:
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r} (expected one of {ACTIONS})")
        if not self._awaiting_act:
            raise SessionError("act() called without a pending observation")
        self._awaiting_act = False
        self._write({"kind": "act", "action": action})

    def close(self) -> None:
        self._transport.close()


def connect(spec: str) -> Session:
    """Open a session from a transport spec: 'stdio' or 'tcp:<host>:<port>'."""
    if spec == "stdio":
        return Session(StdioTransport())
    if spec.startswith("tcp:"):
        rest = spec[len("tcp:"):]
        host, sep, port = rest.rpartition(":")
        if not sep:
            raise ValueError("tcp spec must be tcp:<host>:<port>")
        return Session(TcpTransport(host, int(port)))
    raise ValueError(f"unknown transport spec {spec!r}")

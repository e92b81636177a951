"""Policy wire protocol: newline-delimited JSON over stdio or TCP.

The simulator is the server and drives the session; the external policy
answers.  Message kinds and exact field names:

    server -> client
      {"kind": "hello", "version": 1}            (+"image_size": [w, h] when known)
      {"kind": "reset", "episode_id": N}
      {"kind": "observe", "step": N, "image": ..., "goal_distance": f,
       "goal_bearing": f, "prev_action": s|null}  (+"virtual_image" in hybrid mode)
      {"kind": "done", "outcome": "success"|"failure", "final_distance": f}
      {"kind": "error", "message": s}
    client -> server
      {"kind": "hello", "version": 1}
      {"kind": "act", "action": "MOVE_FORWARD"|"TURN_LEFT"|"TURN_RIGHT"|"STOP"}

Session state machine: hello/hello once, then per episode reset followed
by observe/act pairs and one done.  Every observe is answered by exactly
one act.  A malformed, out-of-order or late (default 30 s) message makes
the server emit an error frame and close; the running episode is recorded
as aborted.

Images travel by reference (path string).  With inline payloads enabled
the image field becomes {"path": p, "b64": base64-bytes-or-null}.
"""

from __future__ import annotations

import base64
import json
import queue
import shlex
import socket
import subprocess
import threading

from realnav.engine import Action, run_episode
from realnav.errors import AbortedEpisodeError, ProtocolError

PROTOCOL_VERSION = 1

_ACTION_NAMES = {a.value for a in Action}

REQUIRED_FIELDS = {
    "hello": {"kind", "version"},
    "reset": {"kind", "episode_id"},
    "observe": {"kind", "step", "image", "goal_distance", "goal_bearing",
                "prev_action"},
    "act": {"kind", "action"},
    "done": {"kind", "outcome", "final_distance"},
    "error": {"kind", "message"},
}
OPTIONAL_FIELDS = {
    "hello": {"image_size"},
    "observe": {"virtual_image"},
}


def validate_message(obj) -> str:
    """Check one decoded frame against the schemas; returns its kind."""
    if not isinstance(obj, dict):
        raise ProtocolError("frame is not a JSON object")
    kind = obj.get("kind")
    if kind not in REQUIRED_FIELDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    required = REQUIRED_FIELDS[kind]
    allowed = required | OPTIONAL_FIELDS.get(kind, set())
    missing = required - obj.keys()
    if missing:
        raise ProtocolError(f"{kind} frame missing fields {sorted(missing)}")
    unknown = obj.keys() - allowed
    if unknown:
        raise ProtocolError(f"{kind} frame has unknown fields {sorted(unknown)}")
    if kind == "act" and obj["action"] not in _ACTION_NAMES:
        raise ProtocolError(f"invalid action name {obj['action']!r}")
    if kind == "hello" and obj["version"] != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {obj['version']!r}")
    return kind


# -- transports ---------------------------------------------------------------


class SubprocessTransport:
    """Spawned policy process; frames over its stdin/stdout."""

    def __init__(self, argv):
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
            bufsize=1,
        )
        self._queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        try:
            for line in self.proc.stdout:
                self._queue.put(line)
        finally:
            self._queue.put(None)

    def send(self, obj) -> None:
        try:
            self.proc.stdin.write(json.dumps(obj) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ProtocolError(f"policy process pipe closed: {exc}") from exc

    def recv(self, timeout: float):
        try:
            line = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise ProtocolError(f"no frame from policy within {timeout} s") from None
        if line is None:
            raise ProtocolError("policy process closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed frame: {exc}") from exc

    def close(self) -> None:
        # Never close stdout from here: the reader thread may hold its lock
        # mid-read, which would block until the child speaks or exits.
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        self._reader.join(timeout=2)
        try:
            self.proc.stdout.close()
        except OSError:
            pass


class TcpServerTransport:
    """Listen at host:port and serve the first policy client that connects."""

    def __init__(self, host: str, port: int, accept_timeout: float = 30.0):
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(accept_timeout)
        self.address = self._listener.getsockname()
        self._conn = None
        self._buffer = b""

    def accept(self) -> None:
        if self._conn is None:
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                raise ProtocolError("no policy client connected in time") from None
            self._conn = conn

    def send(self, obj) -> None:
        self.accept()
        try:
            self._conn.sendall((json.dumps(obj) + "\n").encode("utf-8"))
        except OSError as exc:
            raise ProtocolError(f"policy connection closed: {exc}") from exc

    def recv(self, timeout: float):
        self.accept()
        self._conn.settimeout(timeout)
        while b"\n" not in self._buffer:
            try:
                chunk = self._conn.recv(65536)
            except socket.timeout:
                raise ProtocolError(f"no frame from policy within {timeout} s") from None
            except OSError as exc:
                raise ProtocolError(f"policy connection error: {exc}") from exc
            if not chunk:
                raise ProtocolError("policy client closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        try:
            return json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"malformed frame: {exc}") from exc

    def close(self) -> None:
        if self._conn is not None:
            try:
                self._conn.close()
            except OSError:
                pass
        self._listener.close()


def transport_from_spec(spec: str):
    """Build a transport from 'cmd:<argv>' or 'tcp:<host>:<port>'."""
    if spec.startswith("cmd:"):
        argv = shlex.split(spec[len("cmd:"):])
        if not argv:
            raise ValueError("cmd: policy spec has no command")
        return SubprocessTransport(argv)
    if spec.startswith("tcp:"):
        rest = spec[len("tcp:"):]
        host, sep, port = rest.rpartition(":")
        if not sep:
            raise ValueError("tcp: policy spec must be tcp:<host>:<port>")
        return TcpServerTransport(host, int(port))
    raise ValueError(f"unknown transport spec {spec!r}")


# -- server-side session ------------------------------------------------------


def _observation_frame(obs, cfg):
    image = obs.image_ref
    if cfg.inline_images:
        payload = None
        try:
            with open(obs.image_ref, "rb") as fh:
                payload = base64.b64encode(fh.read()).decode("ascii")
        except OSError:
            payload = None
        image = {"path": obs.image_ref, "b64": payload}
    frame = {
        "kind": "observe",
        "step": obs.step_index,
        "image": image,
        "goal_distance": obs.goal_distance,
        "goal_bearing": obs.goal_bearing,
        "prev_action": obs.prev_action.value if obs.prev_action else None,
    }
    if obs.virtual_ref is not None:
        frame["virtual_image"] = obs.virtual_ref
    return frame


class ExternalPolicy:
    """Engine-facing adapter that proxies decisions over a transport.

    Accepts a transport spec string or a ready transport object.  The
    hello handshake runs lazily on the first episode; a session-level
    protocol error poisons the policy, so later episodes abort fast.
    """

    def __init__(self, transport_or_spec, cfg):
        self.cfg = cfg
        self._spec = (
            transport_or_spec if isinstance(transport_or_spec, str) else None
        )
        self._transport = None if self._spec else transport_or_spec
        self._greeted = False
        self._dead = None  # error message once the session is poisoned

    # -- session plumbing --

    def _ensure_session(self):
        if self._dead:
            raise AbortedEpisodeError(f"policy session closed: {self._dead}")
        if self._transport is None:
            self._transport = transport_from_spec(self._spec)
        if not self._greeted:
            hello = {"kind": "hello", "version": PROTOCOL_VERSION}
            if self.cfg.image_size is not None:
                hello["image_size"] = list(self.cfg.image_size)
            self._transport.send(hello)
            reply = self._recv_validated(expect="hello")
            del reply
            self._greeted = True

    def _recv_validated(self, expect: str):
        obj = self._transport.recv(self.cfg.message_timeout)
        kind = validate_message(obj)
        if kind != expect:
            raise ProtocolError(f"expected {expect} frame, got {kind}")
        return obj

    def _poison(self, message: str):
        self._dead = message
        try:
            self._transport.send({"kind": "error", "message": message})
        except ProtocolError:
            pass
        try:
            self._transport.close()
        except Exception:
            pass

    # -- engine-facing policy interface --

    def reset(self, spec) -> None:
        try:
            self._ensure_session()
            self._transport.send({"kind": "reset", "episode_id": spec.id})
        except ProtocolError as exc:
            self._poison(str(exc))
            raise AbortedEpisodeError(str(exc)) from exc

    def decide(self, obs, ctx) -> Action:
        if self._dead:
            raise AbortedEpisodeError(f"policy session closed: {self._dead}")
        try:
            self._transport.send(_observation_frame(obs, self.cfg))
            reply = self._recv_validated(expect="act")
        except ProtocolError as exc:
            self._poison(str(exc))
            raise
        return Action(reply["action"])

    def episode_done(self, outcome: str, final_distance: float) -> None:
        if self._dead:
            return
        try:
            self._transport.send(
                {"kind": "done", "outcome": outcome, "final_distance": final_distance}
            )
        except ProtocolError as exc:
            self._poison(str(exc))

    def episode_error(self, message: str) -> None:
        if not self._dead:
            self._poison(message)

    def close(self) -> None:
        if self._transport is not None and not self._dead:
            try:
                self._transport.close()
            except Exception:
                pass
        self._transport = None


def serve_policy_session(transport, specs, grid, index, cfg):
    """Drive a full session over an existing transport.

    Runs hello, then reset/observe-act/done per episode spec; returns the
    trajectories in spec order (protocol failures yield aborted entries).
    """
    policy = ExternalPolicy(transport, cfg)
    try:
        return [run_episode(policy, spec, grid, index, cfg) for spec in specs]
    finally:
        policy.close()

"""Uniform policy abstraction and the line-based policy wire protocol.

A policy is anything that maps a FEN to a move, optionally exposing a
full 1968-way action distribution. The gateway never filters or repairs
policy output: an illegal or malformed move travels untouched to the
metrics that count it.

Wire protocol v1 (newline-framed ASCII, over stdio or TCP):

    C: HELLO oodchess-policy 1
    S: OK 1 caps=dist            (caps empty for move-only policies)
    C: MOVE <fen>                S: BEST <uci>
    C: DIST <fen>                S: DIST <1968 space-separated log-probs>
    C: QUIT
    S: ERR <code> <message>      (on any failure)
"""

from __future__ import annotations

import math
import random
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import codec, engine, kernel
from .codec import ACTION_SPACE_SIZE
from .kernel import Variant

PROTOCOL_NAME = "oodchess-policy"
PROTOCOL_VERSION = 1
NORMALIZATION_TOLERANCE = 1e-6


class PolicyError(Exception):
    pass


class PolicyTransportError(PolicyError):
    """Connection/process failure while querying a policy."""


class MalformedPolicyOutputError(PolicyError):
    pass


class UnsupportedCapabilityError(PolicyError):
    """Policy does not expose the requested capability."""


@dataclass
class PolicyDistribution:
    """Log-probability vector over the canonical 1968-action space."""

    log_probs: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.log_probs = np.asarray(self.log_probs, dtype=np.float64)
        if self.log_probs.shape != (ACTION_SPACE_SIZE,):
            raise MalformedPolicyOutputError(
                f"distribution length {self.log_probs.shape} != {ACTION_SPACE_SIZE}")
        if self.normalized:
            total = float(np.exp(self.log_probs).sum())
            if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
                raise MalformedPolicyOutputError(f"probabilities sum to {total}")

    def probabilities(self) -> np.ndarray:
        probs = np.exp(self.log_probs - self.log_probs.max())
        return probs / probs.sum()

    def argmax_move(self) -> kernel.Move:
        return codec.decode_action(int(self.log_probs.argmax()))


@dataclass
class PolicyVerdict:
    """The policy's chosen move verbatim (legality NOT checked here)."""

    move: str
    distribution: Optional[PolicyDistribution] = None


class Policy:
    """Base policy interface. Subclasses override move(); distribution
    support is advertised via supports_distribution()."""

    name = "policy"

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        raise NotImplementedError

    def supports_distribution(self) -> bool:
        return False

    def distribution(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyDistribution:
        raise UnsupportedCapabilityError(f"{self.name} exposes moves only")

    def close(self):
        pass


def policy_move(policy: Policy, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
    verdict = policy.move(fen, variant)
    if verdict.distribution is not None:
        expected = verdict.distribution.argmax_move().uci()
        if verdict.move != expected:
            raise MalformedPolicyOutputError(
                f"chosen move {verdict.move} is not the distribution argmax {expected}")
    return verdict


def policy_distribution(policy: Policy, fen: str,
                        variant: Variant = Variant.STANDARD) -> PolicyDistribution:
    if not policy.supports_distribution():
        raise UnsupportedCapabilityError(f"{policy.name} exposes moves only")
    return policy.distribution(fen, variant)


# ---------------------------------------------------------------------------
# Built-in baselines.

class RandomLegalPolicy(Policy):
    """Uniform choice over kernel-legal moves; reproducible per seed."""

    def __init__(self, seed: int = 0):
        self.name = f"random-legal[{seed}]"
        self.seed = seed
        self._rng = random.Random(seed)

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        pos = codec.parse_fen(fen, variant)
        moves = sorted(m.uci() for m in kernel.legal_moves(pos))
        if not moves:
            raise PolicyError(f"no legal moves on {fen}")
        return PolicyVerdict(move=self._rng.choice(moves))


class UniformRandomPolicy(Policy):
    """Uniform over the whole action space; mostly illegal by design."""

    name = "random-uniform"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def supports_distribution(self) -> bool:
        return True

    def distribution(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyDistribution:
        log_p = np.full(ACTION_SPACE_SIZE, -math.log(ACTION_SPACE_SIZE))
        return PolicyDistribution(log_p, normalized=True)

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        index = self._rng.randrange(ACTION_SPACE_SIZE)
        return PolicyVerdict(move=codec.decode_action(index).uci())


class ScriptedPolicy(Policy):
    """Answers from a fen->uci mapping or a callable; test fixture."""

    name = "scripted"

    def __init__(self, script, default: Optional[str] = None):
        self._script = script
        self._default = default

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        if callable(self._script):
            answer = self._script(fen)
        else:
            answer = self._script.get(fen, self._default)
        if answer is None:
            raise PolicyError(f"scripted policy has no answer for {fen}")
        return PolicyVerdict(move=answer)


class EnginePolicy(Policy):
    """best_move passthrough over a live engine handle; no distribution."""

    def __init__(self, handle: engine.EngineHandle, limit: engine.SearchLimit,
                 name: Optional[str] = None):
        self.handle = handle
        self.limit = limit
        self.name = name or f"engine[{handle.name}]"

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        try:
            best = engine.best_move(self.handle, fen, self.limit, variant)
        except engine.EngineError as exc:
            raise PolicyTransportError(str(exc)) from exc
        return PolicyVerdict(move=best.uci())

    def close(self):
        self.handle.quit()


# ---------------------------------------------------------------------------
# Wire protocol: client.

class _LineTransport:
    def send_line(self, line: str):
        raise NotImplementedError

    def recv_line(self) -> str:
        raise NotImplementedError

    def close(self):
        pass


class _SubprocessTransport(_LineTransport):
    def __init__(self, argv):
        import shlex
        if isinstance(argv, str):
            argv = shlex.split(argv)
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as exc:
            raise PolicyTransportError(f"cannot start policy {argv!r}: {exc}") from None

    def send_line(self, line: str):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise PolicyTransportError(f"policy stdin closed: {exc}") from None

    def recv_line(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise PolicyTransportError("policy closed its output stream")
        return line.rstrip("\n")

    def close(self):
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=3)
        except subprocess.TimeoutExpired:
            self.proc.kill()


class _TcpTransport(_LineTransport):
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise PolicyTransportError(f"cannot connect to {host}:{port}: {exc}") from None
        self.reader = self.sock.makefile("r", newline="\n")

    def send_line(self, line: str):
        try:
            self.sock.sendall((line + "\n").encode())
        except OSError as exc:
            raise PolicyTransportError(f"socket send failed: {exc}") from None

    def recv_line(self) -> str:
        line = self.reader.readline()
        if not line:
            raise PolicyTransportError("policy closed the connection")
        return line.rstrip("\n")

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


class WirePolicy(Policy):
    """Client side of wire protocol v1; one serialized request stream."""

    def __init__(self, transport: _LineTransport, name: str = "wire-policy"):
        self.name = name
        self._transport = transport
        self._lock = threading.Lock()
        self.caps: tuple = ()
        self._handshake()

    @classmethod
    def connect_tcp(cls, host: str, port: int) -> "WirePolicy":
        return cls(_TcpTransport(host, port), name=f"wire[{host}:{port}]")

    @classmethod
    def connect_exec(cls, argv) -> "WirePolicy":
        return cls(_SubprocessTransport(argv), name=f"wire[{argv if isinstance(argv, str) else ' '.join(argv)}]")

    def _handshake(self):
        self._transport.send_line(f"HELLO {PROTOCOL_NAME} {PROTOCOL_VERSION}")
        reply = self._transport.recv_line()
        parts = reply.split()
        if len(parts) < 2 or parts[0] != "OK":
            raise PolicyTransportError(f"bad handshake reply: {reply!r}")
        if parts[1] != str(PROTOCOL_VERSION):
            raise PolicyTransportError(f"protocol version mismatch: {reply!r}")
        caps = ()
        for token in parts[2:]:
            if token.startswith("caps="):
                caps = tuple(c for c in token[5:].split(",") if c)
        self.caps = caps

    def _request(self, line: str) -> str:
        with self._lock:
            self._transport.send_line(line)
            reply = self._transport.recv_line()
        if reply.startswith("ERR"):
            raise MalformedPolicyOutputError(reply)
        return reply

    def supports_distribution(self) -> bool:
        return "dist" in self.caps

    def move(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyVerdict:
        reply = self._request(f"MOVE {fen}")
        if not reply.startswith("BEST ") or len(reply.split()) != 2:
            raise MalformedPolicyOutputError(f"bad MOVE reply: {reply!r}")
        return PolicyVerdict(move=reply.split()[1])

    def distribution(self, fen: str, variant: Variant = Variant.STANDARD) -> PolicyDistribution:
        if not self.supports_distribution():
            raise UnsupportedCapabilityError(f"{self.name} lacks caps=dist")
        reply = self._request(f"DIST {fen}")
        parts = reply.split()
        if parts[0] != "DIST":
            raise MalformedPolicyOutputError(f"bad DIST reply: {reply[:60]!r}")
        try:
            values = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise MalformedPolicyOutputError(f"non-numeric DIST value: {exc}") from None
        return PolicyDistribution(values, normalized=True)

    def close(self):
        try:
            with self._lock:
                self._transport.send_line("QUIT")
        except PolicyTransportError:
            pass
        self._transport.close()


# ---------------------------------------------------------------------------
# Wire protocol: server scaffold (used by tests and any in-process policy;
# the trainable policy package implements its own server side).

def serve_connection(policy: Policy, recv_line: Callable[[], Optional[str]],
                     send_line: Callable[[str], None]):
    """Serve one connection until QUIT/EOF. Frames are handled strictly
    in order; errors are answered with ERR and the loop continues."""
    line = recv_line()
    if line is None:
        return
    parts = line.split()
    if (len(parts) != 3 or parts[0] != "HELLO" or parts[1] != PROTOCOL_NAME):
        send_line("ERR 400 expected HELLO")
        return
    if parts[2] != str(PROTOCOL_VERSION):
        send_line(f"ERR 505 unsupported version {parts[2]}")
        return
    caps = "dist" if policy.supports_distribution() else ""
    send_line(f"OK {PROTOCOL_VERSION} caps={caps}")
    while True:
        line = recv_line()
        if line is None or line == "QUIT":
            return
        try:
            if line.startswith("MOVE "):
                verdict = policy.move(line[5:].strip())
                send_line(f"BEST {verdict.move}")
            elif line.startswith("DIST "):
                dist = policy.distribution(line[5:].strip())
                send_line("DIST " + " ".join(f"{v:.9g}" for v in dist.log_probs))
            else:
                send_line("ERR 400 bad frame")
        except UnsupportedCapabilityError:
            send_line("ERR 501 unsupported capability")
        except Exception as exc:  # noqa: BLE001 - protocol surface
            send_line(f"ERR 500 {type(exc).__name__}: {exc}")


def serve_stdio(policy: Policy, stdin=None, stdout=None):
    import sys
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def recv():
        line = stdin.readline()
        return None if not line else line.rstrip("\n")

    def send(line):
        stdout.write(line + "\n")
        stdout.flush()

    serve_connection(policy, recv, send)


class TcpPolicyServer:
    """Threaded TCP server; each connection is serialized internally."""

    def __init__(self, policy: Policy, host: str = "127.0.0.1", port: int = 0):
        self.policy = policy
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.listen(8)
        self.address = self.sock.getsockname()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> "TcpPolicyServer":
        self._thread.start()
        return self

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self.sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn: socket.socket):
        reader = conn.makefile("r", newline="\n")

        def recv():
            line = reader.readline()
            return None if not line else line.rstrip("\n")

        def send(line):
            conn.sendall((line + "\n").encode())

        try:
            serve_connection(self.policy, recv, send)
        except OSError:
            pass
        finally:
            conn.close()

    def stop(self):
        self._stop.set()
        self.sock.close()


# ---------------------------------------------------------------------------
# Endpoint spec strings, shared by the CLI and the arena:
#   random-legal[:seed] | uniform[:seed] | engine:<command> | tcp:host:port
#   | exec:<command>

def policy_from_spec(spec: str, engine_limit: Optional[engine.SearchLimit] = None,
                     engine_options: Optional[dict] = None) -> Policy:
    if spec.startswith("random-legal"):
        _, _, seed = spec.partition(":")
        return RandomLegalPolicy(int(seed) if seed else 0)
    if spec.startswith("uniform"):
        _, _, seed = spec.partition(":")
        return UniformRandomPolicy(int(seed) if seed else 0)
    if spec.startswith("engine:"):
        handle = engine.spawn(spec[len("engine:"):], options=engine_options or {})
        return EnginePolicy(handle, engine_limit or engine.SearchLimit(depth=20))
    if spec.startswith("tcp:"):
        _, host, port = spec.split(":")
        return WirePolicy.connect_tcp(host, int(port))
    if spec.startswith("exec:"):
        return WirePolicy.connect_exec(spec[len("exec:"):])
    raise PolicyError(f"unknown policy spec {spec!r}")

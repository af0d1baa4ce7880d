"""UCI client supervising reference engines.

One handle owns one engine process and one serialized command stream.
Handles may live on different threads but must never be shared
concurrently. A handle that times out or whose process dies is
poisoned: every later call fails fast with EngineCrashError.

Wire commands used: uci, isready, ucinewgame, setoption, position fen,
go depth / go movetime, and the info/bestmove replies.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Optional

from . import kernel
from .kernel import Move, Variant
from . import codec

HANDSHAKE_TIMEOUT = 10.0
DEPTH_SEARCH_TIMEOUT = 120.0
MOVETIME_GRACE = 10.0


class EngineError(Exception):
    pass


class SpawnError(EngineError):
    pass


class ProtocolError(EngineError):
    pass


class EngineCrashError(EngineError):
    pass


class TerminalPositionError(EngineError):
    """Engine reported no best move (mate/stalemate position)."""


@dataclass
class SearchLimit:
    """Exactly one of depth (plies) or movetime (milliseconds)."""
    depth: Optional[int] = None
    movetime_ms: Optional[int] = None

    def __post_init__(self):
        if (self.depth is None) == (self.movetime_ms is None):
            raise ValueError("set exactly one of depth or movetime_ms")

    def go_command(self) -> str:
        if self.depth is not None:
            return f"go depth {self.depth}"
        return f"go movetime {self.movetime_ms}"

    def timeout(self) -> float:
        if self.depth is not None:
            return DEPTH_SEARCH_TIMEOUT
        return self.movetime_ms / 1000.0 + MOVETIME_GRACE


@dataclass
class TopKQuery:
    fen: str
    k: int
    limit: SearchLimit
    variant: Variant = Variant.STANDARD

    def __post_init__(self):
        if not 1 <= self.k <= 256:
            raise ValueError("k must be in 1..256")


class EngineHandle:
    """Live UCI engine process. Create via spawn()."""

    def __init__(self, proc: subprocess.Popen, kind: str, command):
        self.proc = proc
        self.kind = kind
        self.command = command
        self.options: dict = {}
        self.name = ""
        self._lines: queue.Queue = queue.Queue()
        self._dead = False
        self._lock = threading.Lock()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)  # EOF marker

    @property
    def alive(self) -> bool:
        return not self._dead and self.proc.poll() is None

    def _poison(self, why: str):
        self._dead = True
        try:
            self.proc.kill()
        except OSError:
            pass
        raise EngineCrashError(why)

    def _require_alive(self):
        if self._dead:
            raise EngineCrashError("handle is poisoned")
        if self.proc.poll() is not None:
            self._dead = True
            raise EngineCrashError("engine process exited")

    def send(self, command: str):
        self._require_alive()
        try:
            self.proc.stdin.write(command + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._poison("engine stdin closed")

    def read_until(self, predicate, timeout: float) -> list:
        """Collect lines until predicate(line) is true; returns all lines
        seen including the matching one."""
        import time
        deadline = time.monotonic() + timeout
        seen = []
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self._poison(f"timeout waiting for engine reply after {timeout}s")
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                self._poison(f"timeout waiting for engine reply after {timeout}s")
            if line is None:
                self._poison("engine closed its output stream")
            seen.append(line)
            if predicate(line):
                return seen

    def sync(self, timeout: float = HANDSHAKE_TIMEOUT):
        self.send("isready")
        self.read_until(lambda l: l.strip() == "readyok", timeout)

    def set_option(self, name: str, value):
        self.send(f"setoption name {name} value {value}")
        self.options[name] = value

    def quit(self):
        if self._dead:
            return
        try:
            self.send("quit")
            self.proc.wait(timeout=3)
        except (EngineError, subprocess.TimeoutExpired):
            self.proc.kill()
        self._dead = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.quit()


def spawn(command, kind: str = "classic", options: Optional[dict] = None,
          handshake_timeout: float = HANDSHAKE_TIMEOUT) -> EngineHandle:
    """Start an engine and complete the uci/isready handshake."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1,
        )
    except OSError as exc:
        raise SpawnError(f"cannot start engine {argv!r}: {exc}") from None
    handle = EngineHandle(proc, kind, argv)
    try:
        handle.send("uci")
        lines = handle.read_until(lambda l: l.strip() == "uciok", handshake_timeout)
        for line in lines:
            if line.startswith("id name "):
                handle.name = line[len("id name "):]
        for name, value in (options or {}).items():
            handle.set_option(name, value)
        handle.sync(handshake_timeout)
    except EngineError:
        raise
    return handle


def set_skill(handle: EngineHandle, level: int):
    """Configure the engine's Skill Level (0..20)."""
    if not 0 <= level <= 20:
        raise ValueError(f"skill level {level} out of range 0..20")
    handle.set_option("Skill Level", level)
    handle.sync()


def _position_command(fen: str) -> str:
    return f"position fen {fen}"


def _legal_on(fen: str, variant: Variant) -> dict:
    pos = codec.parse_fen(fen, variant)
    return {m.uci(): m for m in kernel.legal_moves(pos)}


def best_move(handle: EngineHandle, fen: str, limit: SearchLimit,
              variant: Variant = Variant.STANDARD) -> Move:
    """The engine's bestmove from a fresh search, verified kernel-legal."""
    legal = _legal_on(fen, variant)
    handle.send("ucinewgame")
    handle.sync()
    handle.send(_position_command(fen))
    handle.send(limit.go_command())
    lines = handle.read_until(lambda l: l.startswith("bestmove"), limit.timeout())
    token = lines[-1].split()
    if len(token) < 2 or token[1] in ("(none)", "0000"):
        raise TerminalPositionError(f"no best move for {fen}")
    uci = token[1]
    if uci not in legal:
        raise ProtocolError(f"engine move {uci} is illegal on {fen}")
    return legal[uci]


def top_k_moves(handle: EngineHandle, query: TopKQuery) -> list:
    """Up to k distinct legal moves in score order from one MultiPV=k
    search; all legal moves when fewer than k exist."""
    legal = _legal_on(query.fen, query.variant)
    k = min(query.k, max(len(legal), 1))
    handle.send("ucinewgame")
    handle.sync()
    handle.set_option("MultiPV", k)
    handle.send(_position_command(query.fen))
    handle.send(query.limit.go_command())
    pv_moves: dict = {}
    lines = handle.read_until(lambda l: l.startswith("bestmove"), query.limit.timeout())
    handle.set_option("MultiPV", 1)
    handle.sync()
    for line in lines:
        if not line.startswith("info"):
            continue
        tokens = line.split()
        if "multipv" in tokens and "pv" in tokens:
            idx = int(tokens[tokens.index("multipv") + 1])
            pv_moves[idx] = tokens[tokens.index("pv") + 1]
    bestmove_token = lines[-1].split()
    if len(bestmove_token) < 2 or bestmove_token[1] in ("(none)", "0000"):
        raise TerminalPositionError(f"no moves for {query.fen}")
    if 1 not in pv_moves:
        pv_moves[1] = bestmove_token[1]
    out = []
    seen = set()
    for idx in sorted(pv_moves):
        uci = pv_moves[idx]
        if uci in seen:
            continue
        if uci not in legal:
            raise ProtocolError(f"engine move {uci} is illegal on {query.fen}")
        seen.add(uci)
        out.append(legal[uci])
        if len(out) == query.k:
            break
    return out

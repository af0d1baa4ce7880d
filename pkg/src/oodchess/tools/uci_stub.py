"""Minimal UCI engine for tests and engine-less environments.

Run with ``python -m oodchess.tools.uci_stub``. Plays a deterministic
one-ply material search seeded per position, honors Skill Level (noise
grows as skill drops), MultiPV, UCI_Variant (standard/chess960/horde),
and UCI_Chess960. Not a strong engine; a well-behaved one.
"""

from __future__ import annotations

import hashlib
import random
import sys

from .. import codec, kernel
from ..kernel import Variant

PIECE_VALUES = {kernel.PAWN: 100, kernel.KNIGHT: 300, kernel.BISHOP: 310,
                kernel.ROOK: 500, kernel.QUEEN: 900, kernel.KING: 0}
MATE_SCORE = 100000


def _material(board, white: bool) -> int:
    total = 0
    for piece in board:
        if piece and (piece > 0) == white:
            total += PIECE_VALUES[abs(piece)]
    return total


def _score_move(pos, move, jitter_rng, noise: int) -> int:
    nxt = kernel._apply_unchecked(pos, move)
    # full successor movegen only when the move gives check (mate scan)
    if nxt.in_check() and not kernel.legal_moves(nxt):
        return MATE_SCORE
    score = _material(nxt.board, pos.white_to_move) - _material(nxt.board, not pos.white_to_move)
    # nudge toward advancing pawns so stub games develop
    rank = kernel.square_rank(move.to_sq)
    score += (rank if pos.white_to_move else 7 - rank)
    return score + (jitter_rng.randrange(noise + 1) if noise else 0)


class Stub:
    def __init__(self):
        self.options = {"Skill Level": 20, "MultiPV": 1, "Seed": 0,
                        "UCI_Variant": "standard", "UCI_Chess960": "false"}
        self.position = kernel.Position.initial()

    def variant(self) -> Variant:
        name = str(self.options.get("UCI_Variant", "standard")).lower()
        if name == "horde":
            return Variant.HORDE
        if str(self.options.get("UCI_Chess960", "false")).lower() == "true":
            return Variant.CHESS960
        if name == "chess960":
            return Variant.CHESS960
        return Variant.STANDARD

    def set_position(self, args: list):
        variant = self.variant()
        if args and args[0] == "startpos":
            pos = kernel.Position.initial(variant)
            rest = args[1:]
        elif args and args[0] == "fen":
            fen = " ".join(args[1:7])
            pos = codec.parse_fen(fen, variant)
            rest = args[7:]
        else:
            raise ValueError(f"bad position command: {args}")
        if rest and rest[0] == "moves":
            for uci in rest[1:]:
                pos = kernel.apply_move(pos, kernel.Move.from_uci(uci))
        self.position = pos

    def search(self) -> list:
        """Moves in descending score order, deterministic per position."""
        pos = self.position
        moves = kernel.legal_moves(pos)
        if not moves:
            return []
        skill = int(self.options.get("Skill Level", 20))
        noise = (20 - skill) * 60
        key = hashlib.sha256(
            f"{codec.format_fen(pos)}|{self.options.get('Seed', 0)}|{skill}".encode()
        ).digest()
        rng = random.Random(int.from_bytes(key[:8], "big"))
        scored = [(_score_move(pos, m, rng, noise), m.uci()) for m in moves]
        scored.sort(key=lambda s: (-s[0], s[1]))
        return [uci for _, uci in scored]

    def go(self, out):
        ranked = self.search()
        if not ranked:
            out("bestmove (none)")
            return
        multipv = max(1, int(self.options.get("MultiPV", 1)))
        for i, uci in enumerate(ranked[:multipv], start=1):
            out(f"info depth 1 multipv {i} score cp 0 pv {uci}")
        out(f"bestmove {ranked[0]}")


def main(stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stub = Stub()

    def out(line):
        stdout.write(line + "\n")
        stdout.flush()

    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        cmd = parts[0]
        if cmd == "uci":
            out("id name oodchess-stub")
            out("id author oodchess")
            out("option name Skill Level type spin default 20 min 0 max 20")
            out("option name MultiPV type spin default 1 min 1 max 256")
            out("option name Seed type spin default 0 min 0 max 1000000")
            out("option name UCI_Variant type combo default standard var standard var chess960 var horde")
            out("option name UCI_Chess960 type check default false")
            out("uciok")
        elif cmd == "isready":
            out("readyok")
        elif cmd == "setoption":
            try:
                name_idx = parts.index("name") + 1
                value_idx = parts.index("value")
                name = " ".join(parts[name_idx:value_idx])
                value = " ".join(parts[value_idx + 1:])
                stub.options[name] = value
            except ValueError:
                pass
        elif cmd == "ucinewgame":
            stub.position = kernel.Position.initial(stub.variant())
        elif cmd == "position":
            stub.set_position(parts[1:])
        elif cmd == "go":
            stub.go(out)
        elif cmd == "quit":
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())

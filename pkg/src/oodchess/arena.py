"""Round-robin tournament driver across the three variants.

Players are engines (via the UCI bridge) or gateway policies. Games are
adjudicated by the kernel; an illegal or failed move loses on the spot
and is flagged as a forfeit. Every game is persisted as PGN with a
Termination tag, and tournament results as JSONL plus a score table.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import codec, engine, kernel
from .kernel import Move, Reason, Status, Variant
from . import policy as policy_mod

MAX_PLIES_DEFAULT = 400


class ArenaError(Exception):
    pass


# ---------------------------------------------------------------------------
# SAN / PGN writing. The arena only ever writes PGN; re-validation happens
# by replaying the stored UCI moves, never by parsing movetext back.

_SAN_PIECE = {kernel.KNIGHT: "N", kernel.BISHOP: "B", kernel.ROOK: "R",
              kernel.QUEEN: "Q", kernel.KING: "K"}


def move_to_san(pos: kernel.Position, move: Move) -> str:
    board = pos.board
    piece = board[move.from_sq]
    kind = abs(piece)
    if kernel._is_castling(list(board), move, pos.white_to_move, pos.variant):
        kingside = kernel.square_file(move.to_sq) > kernel.square_file(move.from_sq)
        san = "O-O" if kingside else "O-O-O"
    elif kind == kernel.PAWN:
        capture = (board[move.to_sq] != 0) or (
            move.to_sq == pos.ep_square and pos.ep_square is not None)
        san = ""
        if capture:
            san += kernel.FILES[kernel.square_file(move.from_sq)] + "x"
        san += kernel.square_name(move.to_sq)
        if move.promotion:
            san += "=" + _SAN_PIECE[move.promotion]
    else:
        ambiguous = [m for m in kernel.legal_moves(pos)
                     if m.to_sq == move.to_sq and m != move
                     and abs(board[m.from_sq]) == kind]
        disambig = ""
        if ambiguous:
            same_file = any(kernel.square_file(m.from_sq) == kernel.square_file(move.from_sq)
                            for m in ambiguous)
            same_rank = any(kernel.square_rank(m.from_sq) == kernel.square_rank(move.from_sq)
                            for m in ambiguous)
            if not same_file:
                disambig = kernel.FILES[kernel.square_file(move.from_sq)]
            elif not same_rank:
                disambig = str(kernel.square_rank(move.from_sq) + 1)
            else:
                disambig = kernel.square_name(move.from_sq)
        capture = board[move.to_sq] != 0
        san = _SAN_PIECE[kind] + disambig + ("x" if capture else "") + kernel.square_name(move.to_sq)
    after = kernel.apply_move(pos, move)
    if after.in_check():
        outcome = kernel.game_outcome(after)
        san += "#" if outcome.reason is Reason.CHECKMATE else "+"
    return san


_RESULT_TEXT = {Status.WHITE_WINS: "1-0", Status.BLACK_WINS: "0-1",
                Status.DRAW: "1/2-1/2", Status.ONGOING: "*"}


def write_pgn(tags: dict, start: kernel.Position, moves: Iterable[Move], result: str) -> str:
    lines = []
    roster = ["Event", "Site", "Date", "Round", "White", "Black", "Result"]

    def tag_line(tag, value):
        escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
        return f'[{tag} "{escaped}"]'

    for tag in roster:
        lines.append(tag_line(tag, tags.get(tag, "?")))
    for tag, value in tags.items():
        if tag not in roster:
            lines.append(tag_line(tag, value))
    lines.append("")
    pos = start
    tokens = []
    for move in moves:
        if pos.white_to_move:
            tokens.append(f"{pos.fullmove_number}.")
        elif not tokens:
            tokens.append(f"{pos.fullmove_number}...")
        tokens.append(move_to_san(pos, move))
        pos = kernel.apply_move(pos, move)
    tokens.append(result)
    text = ""
    line = ""
    for token in tokens:
        if len(line) + len(token) + 1 > 80:
            text += line.rstrip() + "\n"
            line = ""
        line += token + " "
    text += line.rstrip()
    lines.append(text)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Players.

@dataclass
class PlayerSpec:
    """Declarative player: an engine command or a policy endpoint."""
    name: str
    engine_cmd: Optional[object] = None  # str or argv list
    engine_options: dict = field(default_factory=dict)
    limit: Optional[engine.SearchLimit] = None
    policy_spec: Optional[str] = None

    def make_player(self, variant: Variant) -> "ArenaPlayer":
        if self.engine_cmd is not None:
            options = dict(self.engine_options)
            if variant is Variant.HORDE:
                options.setdefault("UCI_Variant", "horde")
            if variant is Variant.CHESS960:
                options.setdefault("UCI_Chess960", "true")
            handle = engine.spawn(self.engine_cmd, options=options)
            return EnginePlayer(self.name, handle, self.limit or engine.SearchLimit(movetime_ms=50))
        if self.policy_spec is not None:
            return PolicyPlayer(self.name, policy_mod.policy_from_spec(self.policy_spec))
        raise ArenaError(f"player {self.name} has neither engine nor policy backing")


class ArenaPlayer:
    name = "?"

    def pick_move(self, fen: str, variant: Variant) -> str:
        """The player's raw move text; legality is the arena's business."""
        raise NotImplementedError

    def close(self):
        pass


class EnginePlayer(ArenaPlayer):
    def __init__(self, name: str, handle: engine.EngineHandle, limit: engine.SearchLimit):
        self.name = name
        self.handle = handle
        self.limit = limit

    def pick_move(self, fen: str, variant: Variant) -> str:
        return engine.best_move(self.handle, fen, self.limit, variant).uci()

    def close(self):
        self.handle.quit()


class PolicyPlayer(ArenaPlayer):
    def __init__(self, name: str, policy: policy_mod.Policy):
        self.name = name
        self.policy = policy

    def pick_move(self, fen: str, variant: Variant) -> str:
        return policy_mod.policy_move(self.policy, fen, variant).move

    def close(self):
        self.policy.close()


# ---------------------------------------------------------------------------
# Openings.

@dataclass
class Opening:
    opening_id: str
    moves: list
    start_fen: Optional[str] = None  # None = variant default start


def load_opening_book(path: Optional[str] = None) -> list:
    """ECO book: tab-separated code, name, space-separated UCI moves."""
    if path is None:
        text = resources.files("oodchess.data").joinpath("openings.tsv").read_text()
    else:
        text = Path(path).read_text()
    book = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        code, name, moves = line.split("\t")
        book.append(Opening(opening_id=f"{code} {name}", moves=moves.split()))
    if not book:
        raise ArenaError("opening book is empty")
    return book


def prepare_chess960_openings(oracle_cmd, count: int, seed: int,
                              prep_plies: int = 20,
                              limit: Optional[engine.SearchLimit] = None) -> list:
    """Chess960 openings: sampled starts with an oracle-played prefix
    (default prep: 10 full moves at depth 20, maximum skill)."""
    from . import ood
    starts = list(ood.gen_chess960(seed=seed, include_classical=False))[:count]
    limit = limit or engine.SearchLimit(depth=20)
    openings = []
    with engine.spawn(oracle_cmd, options={"UCI_Chess960": "true"}) as handle:
        for i, start in enumerate(starts):
            fen = codec.format_fen(start)
            pos = start
            moves = []
            for _ in range(prep_plies):
                if kernel.game_outcome(pos).over:
                    break
                best = engine.best_move(handle, codec.format_fen(pos), limit, Variant.CHESS960)
                moves.append(best.uci())
                pos = kernel.apply_move(pos, best)
            openings.append(Opening(opening_id=f"960-{i}", moves=moves, start_fen=fen))
    return openings


# ---------------------------------------------------------------------------
# Single game.

@dataclass
class MatchResult:
    white: str
    black: str
    result: str
    status: Status
    reason: Optional[Reason]
    variant: Variant
    opening_id: str
    start_fen: str
    moves: list
    ply_count: int
    forfeit: bool
    forfeit_detail: str
    pgn: str
    game_id: str = ""

    def score_for(self, name: str) -> float:
        if self.result == "1/2-1/2":
            return 0.5
        winner = self.white if self.result == "1-0" else self.black
        return 1.0 if winner == name else 0.0

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "white": self.white,
            "black": self.black,
            "result": self.result,
            "status": self.status.value,
            "reason": self.reason.value if self.reason else None,
            "variant": self.variant.value,
            "opening_id": self.opening_id,
            "start_fen": self.start_fen,
            "moves": self.moves,
            "ply_count": self.ply_count,
            "forfeit": self.forfeit,
            "forfeit_detail": self.forfeit_detail,
            "pgn": self.pgn,
        }


def play_game(white: ArenaPlayer, black: ArenaPlayer, variant: Variant,
              opening: Optional[Opening] = None, max_plies: int = MAX_PLIES_DEFAULT,
              game_id: str = "", round_label: str = "1") -> MatchResult:
    if opening is not None and opening.start_fen is not None:
        start = codec.parse_fen(opening.start_fen, variant)
    else:
        start = kernel.Position.initial(variant)
    pos = start
    moves: list = []
    for uci in (opening.moves if opening else []):
        move = Move.from_uci(uci)
        pos = kernel.apply_move(pos, move)  # book errors surface loudly
        moves.append(move)

    forfeit = False
    forfeit_detail = ""
    status, reason = Status.DRAW, Reason.ADJUDICATED
    while True:
        outcome = kernel.game_outcome(pos)
        if outcome.over:
            status, reason = outcome.status, outcome.reason
            break
        if len(moves) >= max_plies:
            status, reason = Status.DRAW, Reason.ADJUDICATED
            break
        player = white if pos.white_to_move else black
        mover_is_white = pos.white_to_move
        try:
            raw = player.pick_move(codec.format_fen(pos), variant)
            move = Move.from_uci(raw)
            pos = kernel.apply_move(pos, move)
            moves.append(move)
        except (kernel.KernelError, engine.EngineError, policy_mod.PolicyError) as exc:
            forfeit = True
            forfeit_detail = f"{player.name}: {type(exc).__name__}: {exc}"
            status = Status.BLACK_WINS if mover_is_white else Status.WHITE_WINS
            reason = Reason.RESIGNATION
            break

    result = _RESULT_TEXT[status]
    tags = {
        "Event": "oodchess tournament",
        "Site": "local",
        "Date": "????.??.??",
        "Round": round_label,
        "White": white.name,
        "Black": black.name,
        "Result": result,
    }
    if variant is not Variant.STANDARD:
        tags["Variant"] = "Chess960" if variant is Variant.CHESS960 else "Horde"
    start_fen = codec.format_fen(start)
    if start_fen != codec.format_fen(kernel.Position.initial(variant)):
        tags["SetUp"] = "1"
        tags["FEN"] = start_fen
    if opening is not None:
        tags["Opening"] = opening.opening_id
    tags["PlyCount"] = str(len(moves))
    if forfeit:
        tags["Termination"] = f"forfeit: {forfeit_detail}"
    elif reason is Reason.ADJUDICATED:
        tags["Termination"] = "adjudicated: move limit"
    else:
        tags["Termination"] = reason.value if reason else "normal"
    pgn = write_pgn(tags, start, moves, result)
    return MatchResult(
        white=white.name, black=black.name, result=result, status=status,
        reason=reason, variant=variant, opening_id=opening.opening_id if opening else "",
        start_fen=start_fen, moves=[m.uci() for m in moves], ply_count=len(moves),
        forfeit=forfeit, forfeit_detail=forfeit_detail, pgn=pgn, game_id=game_id,
    )


# ---------------------------------------------------------------------------
# Tournament.

@dataclass
class TournamentPlan:
    variant: Variant
    players: list  # PlayerSpec
    games_per_pair: int
    openings: Optional[list] = None  # Opening list; None = variant default
    seed: int = 0
    max_plies: int = MAX_PLIES_DEFAULT

    def __post_init__(self):
        if self.games_per_pair % 2:
            raise ArenaError("games_per_pair must be even for color balance")
        names = [p.name for p in self.players]
        if len(set(names)) != len(names):
            raise ArenaError("player names must be unique")


def tournament_score(points: float, games: int) -> float:
    """score = (1 * wins + 0.5 * draws) / games, expressed via points."""
    return points / games if games else 0.0


def build_schedule(plan: TournamentPlan) -> list:
    """(pair index, game index, white spec, black spec, opening) tuples;
    colors alternate within each pairing, openings pre-drawn from the
    seed so reruns pair identically."""
    rng = random.Random(plan.seed)
    openings = plan.openings
    if openings is None and plan.variant is Variant.STANDARD:
        openings = load_opening_book()
    pairs = []
    for i in range(len(plan.players)):
        for j in range(i + 1, len(plan.players)):
            pairs.append((plan.players[i], plan.players[j]))
    schedule = []
    for pair_idx, (a, b) in enumerate(pairs):
        for game_idx in range(plan.games_per_pair):
            white_spec, black_spec = (a, b) if game_idx % 2 == 0 else (b, a)
            opening = rng.choice(openings) if openings else None
            schedule.append((pair_idx, game_idx, white_spec, black_spec, opening))
    return schedule


def run_tournament(plan: TournamentPlan, out_dir: Optional[Path] = None,
                   workers: int = 1,
                   progress: Optional[Callable[[str], None]] = None) -> tuple:
    """Play the full round robin; returns (results, score table dict).

    Results are ordered by (pair, game index) regardless of completion
    order. Openings are pre-drawn from the seed so reruns pair
    identically. A game whose setup crashes is retried once.
    """
    schedule = build_schedule(plan)

    def play_one(task):
        pair_idx, game_idx, white_spec, black_spec, opening = task
        game_id = f"p{pair_idx}g{game_idx}"
        last_error = None
        for attempt in range(2):  # aborted setups are replayed once
            white = black = None
            try:
                white = white_spec.make_player(plan.variant)
                black = black_spec.make_player(plan.variant)
                result = play_game(white, black, plan.variant, opening,
                                   plan.max_plies, game_id=game_id,
                                   round_label=str(pair_idx + 1))
                if progress:
                    progress(f"{game_id} {result.white} vs {result.black}: {result.result}")
                return (pair_idx, game_idx), result
            except (engine.EngineError, policy_mod.PolicyError, ArenaError) as exc:
                last_error = exc
            finally:
                for p in (white, black):
                    if p is not None:
                        p.close()
        raise ArenaError(f"game {game_id} failed twice: {last_error}")

    results_by_key = {}
    if workers <= 1:
        for task in schedule:
            key, result = play_one(task)
            results_by_key[key] = result
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for key, result in pool.map(play_one, schedule):
                results_by_key[key] = result

    results = [results_by_key[k] for k in sorted(results_by_key)]
    table = score_table(plan, results)
    if out_dir is not None:
        save_tournament(out_dir, results, table)
    return results, table


def score_table(plan: TournamentPlan, results: list) -> dict:
    points = {p.name: 0.0 for p in plan.players}
    games = {p.name: 0 for p in plan.players}
    draws = {p.name: 0 for p in plan.players}
    white_games = {p.name: 0 for p in plan.players}
    for r in results:
        points[r.white] += r.score_for(r.white)
        points[r.black] += r.score_for(r.black)
        games[r.white] += 1
        games[r.black] += 1
        white_games[r.white] += 1
        if r.result == "1/2-1/2":
            draws[r.white] += 1
            draws[r.black] += 1
    return {
        name: {
            "points": points[name],
            "games": games[name],
            "draws": draws[name],
            "white_games": white_games[name],
            "score": tournament_score(points[name], games[name]),
        }
        for name in sorted(points)
    }


def save_tournament(out_dir: Path, results: list, table: dict):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.jsonl", "w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    pgn_dir = out_dir / "pgn"
    pgn_dir.mkdir(exist_ok=True)
    for r in results:
        (pgn_dir / f"{r.game_id}.pgn").write_text(r.pgn)
    with open(out_dir / "scores.json", "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)

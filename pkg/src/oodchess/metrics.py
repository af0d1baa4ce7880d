"""Move-quality metrics over any policy.

Covers legal move accuracy with illegal-cause breakdown, oracle top-K
accuracy with independent per-K queries and per-K denominators, puzzle
sequence accuracy with the mate-in-1 exception, and opening-move
histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import codec, engine, kernel
from .kernel import Move, Variant
from .policy import Policy, PolicyTransportError, policy_move

TRANSPORT_FAILURE_BUDGET = 0.01

CAUSE_MALFORMED = "malformed_move"
CAUSE_NO_SUCH_PIECE = "no_such_piece"
CAUSE_GEOMETRY = "piece_geometry"
CAUSE_PIN = "pin_violation"
CAUSE_KING_EXPOSURE = "other_king_exposure"
ALL_CAUSES = (CAUSE_GEOMETRY, CAUSE_PIN, CAUSE_KING_EXPOSURE,
              CAUSE_NO_SUCH_PIECE, CAUSE_MALFORMED)


class MetricsError(Exception):
    pass


@dataclass
class EvalBoard:
    """A board under evaluation: FEN plus the variant it parses under."""
    fen: str
    variant: Variant = Variant.STANDARD

    @classmethod
    def coerce(cls, item) -> "EvalBoard":
        if isinstance(item, EvalBoard):
            return item
        if isinstance(item, str):
            return cls(fen=item)
        return cls(fen=item["fen"], variant=Variant(item.get("variant", "standard")))


def classify_illegal(pos: kernel.Position, move_text: str) -> str:
    """Why a move is illegal on pos; assumes it is not legal."""
    try:
        move = Move.from_uci(move_text)
        codec.encode_action(move_text)
    except (kernel.MoveParseError, codec.ActionEncodingError):
        return CAUSE_MALFORMED
    piece = pos.board[move.from_sq]
    if piece == 0 or (piece > 0) != pos.white_to_move:
        return CAUSE_NO_SUCH_PIECE
    pseudo = kernel._pseudo_moves(pos.board, pos.white_to_move, pos.castling,
                                  pos.ep_square, pos.variant)
    if move not in pseudo:
        return CAUSE_GEOMETRY
    if not pos.in_check() and move.from_sq in kernel.pinned_pieces(pos):
        return CAUSE_PIN
    return CAUSE_KING_EXPOSURE


@dataclass
class LegalAccuracyReport:
    total: int
    legal: int
    illegal_causes: dict
    transport_failures: int
    per_board: list = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.legal / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "legal": self.legal,
            "accuracy": self.accuracy,
            "illegal_causes": {c: self.illegal_causes.get(c, 0) for c in ALL_CAUSES},
            "transport_failures": self.transport_failures,
        }


def _check_transport_budget(failures: int, attempted: int):
    if attempted and failures / attempted > TRANSPORT_FAILURE_BUDGET:
        raise MetricsError(
            f"{failures}/{attempted} policy transport failures exceed the "
            f"{TRANSPORT_FAILURE_BUDGET:.0%} budget")


def legal_accuracy(policy: Policy, boards: Iterable, keep_details: bool = False) -> LegalAccuracyReport:
    """Query the policy once per board and score next-move legality."""
    causes = {c: 0 for c in ALL_CAUSES}
    total = legal = failures = attempted = 0
    details = []
    for item in boards:
        board = EvalBoard.coerce(item)
        pos = codec.parse_fen(board.fen, board.variant)
        attempted += 1
        try:
            verdict = policy_move(policy, board.fen, board.variant)
        except PolicyTransportError:
            failures += 1
            continue
        total += 1
        legal_set = {m.uci() for m in kernel.legal_moves(pos)}
        if verdict.move in legal_set:
            legal += 1
            if keep_details:
                details.append({"fen": board.fen, "move": verdict.move, "legal": True})
        else:
            cause = classify_illegal(pos, verdict.move)
            causes[cause] += 1
            if keep_details:
                details.append({"fen": board.fen, "move": verdict.move,
                                "legal": False, "cause": cause})
    _check_transport_budget(failures, attempted)
    return LegalAccuracyReport(total=total, legal=legal, illegal_causes=causes,
                               transport_failures=failures, per_board=details)


# ---------------------------------------------------------------------------
# Top-K accuracy.

class TopKOracle:
    """Anything that returns an ordered top-k move list for a FEN."""

    def top_k(self, fen: str, k: int, variant: Variant) -> list:
        raise NotImplementedError


class EngineOracle(TopKOracle):
    def __init__(self, handle: engine.EngineHandle, limit: Optional[engine.SearchLimit] = None):
        self.handle = handle
        self.limit = limit or engine.SearchLimit(depth=20)

    def top_k(self, fen: str, k: int, variant: Variant) -> list:
        query = engine.TopKQuery(fen=fen, k=k, limit=self.limit, variant=variant)
        return [m.uci() for m in engine.top_k_moves(self.handle, query)]


class ScriptedOracle(TopKOracle):
    """fen -> ranked uci list; each top_k slices independently."""

    def __init__(self, rankings: dict):
        self.rankings = rankings

    def top_k(self, fen: str, k: int, variant: Variant) -> list:
        return list(self.rankings[fen][:k])


@dataclass
class TopKReport:
    entries: list  # per-k dicts: {k, matched, eligible, accuracy}
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"per_k": self.entries, "oracle_skipped": self.skipped}


def topk_accuracy(policy: Policy, boards: Sequence, ks: Sequence[int],
                  oracle: TopKOracle) -> TopKReport:
    """For each k, one independent oracle query per board with >= k legal
    moves; a board matches when the policy move is in the oracle list.
    Non-monotonicity across k is expected."""
    prepared = []
    failures = attempted = 0
    for item in boards:
        board = EvalBoard.coerce(item)
        pos = codec.parse_fen(board.fen, board.variant)
        n_legal = len(kernel.legal_moves(pos))
        attempted += 1
        try:
            verdict = policy_move(policy, board.fen, board.variant)
        except PolicyTransportError:
            failures += 1
            continue
        prepared.append((board, n_legal, verdict.move))
    _check_transport_budget(failures, attempted)

    entries = []
    skipped = 0
    for k in ks:
        matched = eligible = 0
        for board, n_legal, predicted in prepared:
            if n_legal < k:
                continue
            try:
                ranked = oracle.top_k(board.fen, k, board.variant)
            except engine.EngineError:
                skipped += 1
                continue
            eligible += 1
            if predicted in ranked:
                matched += 1
        entries.append({
            "k": k,
            "matched": matched,
            "eligible": eligible,
            "accuracy": matched / eligible if eligible else 0.0,
        })
    return TopKReport(entries=entries, skipped=skipped)


# ---------------------------------------------------------------------------
# Puzzle sequence accuracy.

@dataclass
class PuzzleCase:
    """Lichess-convention puzzle: the first move of `moves` is the
    opponent's setup move, applied before the first player ply."""
    puzzle_id: str
    fen: str
    moves: list
    variant: Variant = Variant.STANDARD


@dataclass
class PuzzleVerdict:
    puzzle_id: str
    correct: bool
    reason: str = ""
    plies_played: int = 0


@dataclass
class PuzzleReport:
    verdicts: list
    transport_failures: int = 0

    @property
    def total(self) -> int:
        return len(self.verdicts)

    @property
    def solved(self) -> int:
        return sum(1 for v in self.verdicts if v.correct)

    @property
    def accuracy(self) -> float:
        return self.solved / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "solved": self.solved,
            "accuracy": self.accuracy,
            "transport_failures": self.transport_failures,
        }


def _is_checkmate(pos: kernel.Position) -> bool:
    outcome = kernel.game_outcome(pos)
    return outcome.reason is kernel.Reason.CHECKMATE


def evaluate_puzzle(policy: Policy, puzzle: PuzzleCase) -> PuzzleVerdict:
    pos = codec.parse_fen(puzzle.fen, puzzle.variant)
    plies = 0
    for idx, solution_uci in enumerate(puzzle.moves):
        if idx % 2 == 1:  # player ply
            verdict = policy_move(policy, codec.format_fen(pos), puzzle.variant)
            plies += 1
            if verdict.move != solution_uci:
                # Mate-in-1 exception: any move that checkmates is correct.
                try:
                    move = Move.from_uci(verdict.move)
                except kernel.MoveParseError:
                    return PuzzleVerdict(puzzle.puzzle_id, False, "illegal-move", plies)
                try:
                    after = kernel.apply_move(pos, move)
                except kernel.IllegalMoveError:
                    return PuzzleVerdict(puzzle.puzzle_id, False, "illegal-move", plies)
                if _is_checkmate(after):
                    return PuzzleVerdict(puzzle.puzzle_id, True, "alternate-mate", plies)
                return PuzzleVerdict(puzzle.puzzle_id, False, "deviation", plies)
        pos = kernel.apply_move(pos, Move.from_uci(solution_uci))
    return PuzzleVerdict(puzzle.puzzle_id, True, "", plies)


def puzzle_sequence_accuracy(policy: Policy, puzzles: Iterable[PuzzleCase]) -> PuzzleReport:
    verdicts = []
    failures = attempted = 0
    for puzzle in puzzles:
        attempted += 1
        try:
            verdicts.append(evaluate_puzzle(policy, puzzle))
        except PolicyTransportError:
            failures += 1
    _check_transport_budget(failures, attempted)
    return PuzzleReport(verdicts=verdicts, transport_failures=failures)


# ---------------------------------------------------------------------------
# Opening-move histogram (knight moves share one bucket).

KNIGHT_BUCKET = "knight"
ILLEGAL_BUCKET = "illegal"


def opening_move_histogram(policy: Policy, boards: Iterable) -> dict:
    histogram: dict = {}
    for item in boards:
        board = EvalBoard.coerce(item)
        pos = codec.parse_fen(board.fen, board.variant)
        verdict = policy_move(policy, board.fen, board.variant)
        legal = {m.uci(): m for m in kernel.legal_moves(pos)}
        if verdict.move not in legal:
            key = ILLEGAL_BUCKET
        else:
            move = legal[verdict.move]
            if abs(pos.board[move.from_sq]) == kernel.KNIGHT:
                key = KNIGHT_BUCKET
            else:
                key = verdict.move
        histogram[key] = histogram.get(key, 0) + 1
    return dict(sorted(histogram.items(), key=lambda kv: (-kv[1], kv[0])))


# ---------------------------------------------------------------------------
# Combined dataset report in the shape of the accuracy table
# (Legal | top1 | top3 | top5 | top10 | Puzzle seq.).

def render_accuracy_table(rows: list) -> str:
    """rows: dicts with dataset plus optional legal/topk/puzzle values."""
    headers = ["Dataset", "Legal", "Sf. top1", "Sf. top3", "Sf. top5", "Sf. top10", "Puzzle seq."]
    table = [headers]
    for row in rows:
        cells = [row.get("dataset", "?")]
        legal = row.get("legal")
        cells.append(f"{legal * 100:.2f}" if legal is not None else "-")
        per_k = {e["k"]: e for e in row.get("topk", [])}
        for k in (1, 3, 5, 10):
            entry = per_k.get(k)
            cells.append(f"{entry['accuracy'] * 100:.2f}" if entry else "-")
        puzzle = row.get("puzzle")
        cells.append(f"{puzzle * 100:.2f}" if puzzle is not None else "-")
        table.append(cells)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines)

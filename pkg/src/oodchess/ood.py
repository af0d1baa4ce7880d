"""Classifiers and generators for the out-of-distribution board sets.

Two position flags mark promotion-reachable material: MORE_PIECES
(any color with >1 queen, >2 rooks/bishops/knights) and
SAME_COLOR_BISHOPS (two bishops of one color on same-colored squares).
Generators cover the Chess960 starting universe (960 boards), the full
back-rank permutation universe (2520 arrangements), and the synthetic
knights-and-rooks stress set.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Optional

from . import kernel
from .kernel import BISHOP, KING, KNIGHT, PAWN, QUEEN, ROOK, Position, Variant, square


MORE_PIECES = "more_pieces"
SAME_COLOR_BISHOPS = "same_color_bishops"

ORIGIN_FROM_GAME = "from_game"
ORIGIN_CHESS960 = "chess960_start"
ORIGIN_NONSTANDARD = "nonstandard_start"
ORIGIN_KNIGHTS_ROOKS = "knights_rooks"

STANDARD_BACK_RANK = "RNBQKBNR"


class GenerationError(Exception):
    pass


def classify(pos: Position) -> frozenset:
    """OOD flags of a position; empty set means in-distribution material."""
    flags = set()
    for sign in (1, -1):
        counts = {QUEEN: 0, ROOK: 0, BISHOP: 0, KNIGHT: 0}
        bishop_square_colors = []
        for sq in range(64):
            piece = pos.board[sq]
            if piece * sign <= 0:
                continue
            kind = abs(piece)
            if kind in counts:
                counts[kind] += 1
            if kind == BISHOP:
                bishop_square_colors.append((kernel.square_file(sq) + kernel.square_rank(sq)) & 1)
        if counts[QUEEN] > 1 or counts[ROOK] > 2 or counts[BISHOP] > 2 or counts[KNIGHT] > 2:
            flags.add(MORE_PIECES)
        for color in (0, 1):
            if bishop_square_colors.count(color) >= 2:
                flags.add(SAME_COLOR_BISHOPS)
    return frozenset(flags)


# ---------------------------------------------------------------------------
# Starting-position construction.

def _start_from_back_rank(back_rank: str, variant: Variant) -> Position:
    """Mirror-symmetric start: White's back rank given, Black mirrored
    file-by-file, pawns standard, rights Chess960-style where a rook
    sits on a wing of the king (outermost rook per wing)."""
    board = [0] * 64
    for f, ch in enumerate(back_rank):
        piece = kernel.CHAR_PIECES[ch]
        board[square(f, 0)] = piece
        board[square(f, 7)] = -piece
    for f in range(8):
        board[square(f, 1)] = PAWN
        board[square(f, 6)] = -PAWN
    king_file = back_rank.index("K")
    rook_files = [f for f, ch in enumerate(back_rank) if ch == "R"]
    kingside = max((f for f in rook_files if f > king_file), default=None)
    queenside = min((f for f in rook_files if f < king_file), default=None)
    return Position(
        board=tuple(board),
        castling=(kingside, queenside, kingside, queenside),
        variant=variant,
    )


# Knight placement table for the Scharnagl numbering: index 0..9 selects
# which two of the five free squares take the knights.
_KNIGHT_PAIRS = ((0, 1), (0, 2), (0, 3), (0, 4), (1, 2),
                 (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


def chess960_back_rank(number: int) -> str:
    """Back rank of Chess960 start `number` (0..959, Scharnagl scheme).

    Number 518 is the classical RNBQKBNR arrangement.
    """
    if not 0 <= number < 960:
        raise GenerationError(f"Chess960 number {number} out of range")
    rank = [""] * 8
    n, b1 = divmod(number, 4)
    rank[1 + 2 * b1] = "B"  # light squares b, d, f, h
    n, b2 = divmod(n, 4)
    rank[2 * b2] = "B"  # dark squares a, c, e, g
    n, q = divmod(n, 6)
    free = [i for i in range(8) if not rank[i]]
    rank[free[q]] = "Q"
    free = [i for i in range(8) if not rank[i]]
    for idx in _KNIGHT_PAIRS[n]:
        rank[free[idx]] = "N"
    free = [i for i in range(8) if not rank[i]]
    for i, piece in zip(free, "RKR"):
        rank[i] = piece
    return "".join(rank)


def gen_chess960(seed: Optional[int] = None,
                 include_classical: bool = True) -> Iterator[Position]:
    """All Chess960 starting positions (960; 959 without the classical
    arrangement). Deterministic order; a seed shuffles it."""
    numbers = list(range(960))
    if seed is not None:
        random.Random(seed).shuffle(numbers)
    for number in numbers:
        back = chess960_back_rank(number)
        if not include_classical and back == STANDARD_BACK_RANK:
            continue
        yield _start_from_back_rank(back, Variant.CHESS960)


def all_back_ranks() -> list:
    """Every distinct arrangement of RRNNBBQK, mirror images identified
    (2520 by enumeration; the representative keeps the king on e-h so
    the classical arrangement is a member)."""
    seen = set()
    for perm in itertools.permutations("RRNNBBQK"):
        arrangement = "".join(perm)
        if arrangement.index("K") < 4:
            arrangement = arrangement[::-1]
        seen.add(arrangement)
    return sorted(seen)


def gen_all_starting(seed: int, n: int, include_classical: bool = False) -> list:
    """Sample `n` mirror-symmetric starting positions without replacement
    from the back-rank permutation universe (classical excluded unless
    asked for)."""
    universe = all_back_ranks()
    if not include_classical:
        universe = [b for b in universe if b != STANDARD_BACK_RANK]
    if n > len(universe):
        raise GenerationError(f"requested {n} boards from a universe of {len(universe)}")
    chosen = random.Random(seed).sample(universe, n)
    return [_start_from_back_rank(back, Variant.CHESS960) for back in chosen]


def gen_knights_rooks(seed: int, n: int) -> list:
    """Rejection-sampled boards with one king per color, 2-4 white rooks
    and 3-15 white knights, White to move, black king not in check."""
    rng = random.Random(seed)
    boards = []
    while len(boards) < n:
        pos = _try_knights_rooks(rng)
        if pos is not None:
            boards.append(pos)
    return boards


def _try_knights_rooks(rng: random.Random) -> Optional[Position]:
    rooks = rng.randint(2, 4)
    knights = rng.randint(3, 15)
    squares = rng.sample(range(64), 2 + rooks + knights)
    board = [0] * 64
    wk, bk = squares[0], squares[1]
    board[wk] = KING
    board[bk] = -KING
    for sq in squares[2:2 + rooks]:
        board[sq] = ROOK
    for sq in squares[2 + rooks:]:
        board[sq] = KNIGHT
    if max(abs(kernel.square_file(wk) - kernel.square_file(bk)),
           abs(kernel.square_rank(wk) - kernel.square_rank(bk))) <= 1:
        return None
    if kernel._attacked(board, bk, True):
        return None
    pos = Position(board=tuple(board), white_to_move=True, variant=Variant.STANDARD)
    try:
        kernel.validate(pos)
    except kernel.InvalidPositionError:
        return None
    return pos

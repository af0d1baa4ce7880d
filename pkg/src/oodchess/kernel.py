"""Rules engine for Standard chess, Chess960, and Horde.

Positions and moves are immutable values; every operation is a pure
function, so they are safe to share across threads.

Square indexing is a1=0 .. h8=63, rank-major from White's side.
Pieces are small ints (PAWN..KING), positive for White, negative for
Black, 0 for an empty square.

Castling rights are stored Chess960-style as the file of the rook a
side may still castle with, one slot per wing. Castling moves are
encoded per variant convention: king-two-files in Standard and Horde
(e1g1), king-onto-rook-square in Chess960 (e1h1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6

PIECE_CHARS = {
    PAWN: "P", KNIGHT: "N", BISHOP: "B", ROOK: "R", QUEEN: "Q", KING: "K",
    -PAWN: "p", -KNIGHT: "n", -BISHOP: "b", -ROOK: "r", -QUEEN: "q", -KING: "k",
}
CHAR_PIECES = {c: p for p, c in PIECE_CHARS.items()}
PROMO_CHARS = {QUEEN: "q", ROOK: "r", BISHOP: "b", KNIGHT: "n"}
CHAR_PROMOS = {c: p for p, c in PROMO_CHARS.items()}

FILES = "abcdefgh"


class Variant(str, Enum):
    STANDARD = "standard"
    CHESS960 = "chess960"
    HORDE = "horde"


class KernelError(Exception):
    """Base class for rules-engine errors."""


class InvalidPositionError(KernelError):
    """Position violates a structural invariant."""


class IllegalMoveError(KernelError):
    """Move rejected; carries the offending move."""

    def __init__(self, move: "Move", message: str = ""):
        self.move = move
        super().__init__(message or f"illegal move {move.uci()}")


class MoveParseError(KernelError):
    """Text does not parse as a UCI move."""


def square(file: int, rank: int) -> int:
    return rank * 8 + file


def square_file(sq: int) -> int:
    return sq & 7


def square_rank(sq: int) -> int:
    return sq >> 3


def square_name(sq: int) -> str:
    return FILES[sq & 7] + str((sq >> 3) + 1)


def parse_square(name: str) -> int:
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345678":
        raise MoveParseError(f"bad square {name!r}")
    return (int(name[1]) - 1) * 8 + FILES.index(name[0])


@dataclass(frozen=True)
class Move:
    from_sq: int
    to_sq: int
    promotion: Optional[int] = None

    def uci(self) -> str:
        promo = PROMO_CHARS[self.promotion] if self.promotion else ""
        return square_name(self.from_sq) + square_name(self.to_sq) + promo

    def __str__(self) -> str:
        return self.uci()

    @classmethod
    def from_uci(cls, text: str) -> "Move":
        if not 4 <= len(text) <= 5:
            raise MoveParseError(f"bad move {text!r}")
        frm = parse_square(text[0:2])
        to = parse_square(text[2:4])
        promo = None
        if len(text) == 5:
            if text[4] not in CHAR_PROMOS:
                raise MoveParseError(f"bad promotion in {text!r}")
            promo = CHAR_PROMOS[text[4]]
        return cls(frm, to, promo)


class Status(str, Enum):
    ONGOING = "ongoing"
    WHITE_WINS = "white_wins"
    BLACK_WINS = "black_wins"
    DRAW = "draw"


class Reason(str, Enum):
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    THREEFOLD = "threefold"
    FIFTY_MOVE = "fifty_move"
    INSUFFICIENT_MATERIAL = "insufficient_material"
    HORDE_ALL_CAPTURED = "horde_all_captured"
    RESIGNATION = "resignation"
    ADJUDICATED = "adjudicated"


@dataclass(frozen=True)
class GameOutcome:
    status: Status
    reason: Optional[Reason] = None

    @property
    def over(self) -> bool:
        return self.status is not Status.ONGOING


# ---------------------------------------------------------------------------
# Precomputed geometry tables.

_KNIGHT_DELTAS = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
_KING_DELTAS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
_ORTHO_DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0))
_DIAG_DIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _build_jump_table(deltas):
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        targets = []
        for df, dr in deltas:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                targets.append(nr * 8 + nf)
        table.append(tuple(targets))
    return tuple(table)


def _build_rays(dirs):
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        rays = []
        for df, dr in dirs:
            ray = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                ray.append(nr * 8 + nf)
                nf += df
                nr += dr
            rays.append(tuple(ray))
        table.append(tuple(rays))
    return tuple(table)


KNIGHT_MOVES = _build_jump_table(_KNIGHT_DELTAS)
KING_MOVES = _build_jump_table(_KING_DELTAS)
ORTHO_RAYS = _build_rays(_ORTHO_DIRS)
DIAG_RAYS = _build_rays(_DIAG_DIRS)

# Squares from which a pawn of the given color attacks the indexed square.
WHITE_PAWN_ATTACKERS = _build_jump_table(((1, -1), (-1, -1)))
BLACK_PAWN_ATTACKERS = _build_jump_table(((1, 1), (-1, 1)))
# Squares a pawn of the given color on the indexed square attacks.
WHITE_PAWN_TARGETS = _build_jump_table(((1, 1), (-1, 1)))
BLACK_PAWN_TARGETS = _build_jump_table(((1, -1), (-1, -1)))


# ---------------------------------------------------------------------------
# Core predicates over raw board arrays.

def _attacked(board, sq: int, by_white: bool) -> bool:
    """True if `sq` is attacked by any piece of the given color."""
    if by_white:
        pawn_from, n, b, r, q, k = WHITE_PAWN_ATTACKERS[sq], KNIGHT, BISHOP, ROOK, QUEEN, KING
    else:
        pawn_from = BLACK_PAWN_ATTACKERS[sq]
        n, b, r, q, k = -KNIGHT, -BISHOP, -ROOK, -QUEEN, -KING
    for s in pawn_from:
        if board[s] == (PAWN if by_white else -PAWN):
            return True
    for s in KNIGHT_MOVES[sq]:
        if board[s] == n:
            return True
    for s in KING_MOVES[sq]:
        if board[s] == k:
            return True
    for ray in ORTHO_RAYS[sq]:
        for s in ray:
            piece = board[s]
            if piece:
                if piece == r or piece == q:
                    return True
                break
    for ray in DIAG_RAYS[sq]:
        for s in ray:
            piece = board[s]
            if piece:
                if piece == b or piece == q:
                    return True
                break
    return False


def _find_king(board, white: bool) -> Optional[int]:
    target = KING if white else -KING
    for sq in range(64):
        if board[sq] == target:
            return sq
    return None


# ---------------------------------------------------------------------------
# Position.

_STANDARD_BACK = (ROOK, KNIGHT, BISHOP, QUEEN, KING, BISHOP, KNIGHT, ROOK)


def _standard_board() -> tuple:
    board = [0] * 64
    for f, piece in enumerate(_STANDARD_BACK):
        board[square(f, 0)] = piece
        board[square(f, 7)] = -piece
    for f in range(8):
        board[square(f, 1)] = PAWN
        board[square(f, 6)] = -PAWN
    return tuple(board)


def _horde_board() -> tuple:
    board = [0] * 64
    for r in range(4):
        for f in range(8):
            board[square(f, r)] = PAWN
    for f in (1, 2, 5, 6):
        board[square(f, 4)] = PAWN
    for f, piece in enumerate(_STANDARD_BACK):
        board[square(f, 7)] = -piece
    for f in range(8):
        board[square(f, 6)] = -PAWN
    return tuple(board)


@dataclass(frozen=True)
class Position:
    """Immutable full game state.

    `castling` holds the rook file (0..7) per slot (white kingside,
    white queenside, black kingside, black queenside), or None.
    `repetition_log` holds the keys of all positions since the last
    irreversible move, most recent last, including this one.
    """

    board: tuple
    white_to_move: bool = True
    castling: tuple = (None, None, None, None)
    ep_square: Optional[int] = None
    halfmove_clock: int = 0
    fullmove_number: int = 1
    variant: Variant = Variant.STANDARD
    repetition_log: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.repetition_log:
            object.__setattr__(self, "repetition_log", (position_key(self),))

    @classmethod
    def initial(cls, variant: Variant = Variant.STANDARD) -> "Position":
        if variant is Variant.HORDE:
            return cls(board=_horde_board(), castling=(None, None, 7, 0), variant=variant)
        return cls(board=_standard_board(), castling=(7, 0, 7, 0), variant=variant)

    def piece_at(self, sq: int) -> int:
        return self.board[sq]

    def king_square(self, white: bool) -> Optional[int]:
        return _find_king(self.board, white)

    def in_check(self) -> bool:
        ksq = self.king_square(self.white_to_move)
        if ksq is None:
            return False
        return _attacked(self.board, ksq, not self.white_to_move)

    def piece_squares(self, white: bool) -> list:
        if white:
            return [sq for sq in range(64) if self.board[sq] > 0]
        return [sq for sq in range(64) if self.board[sq] < 0]


def position_key(pos: Position) -> int:
    """Repetition key: placement, side to move, castling rights, and en
    passant only when a capture is actually available (FIDE rule)."""
    ep = pos.ep_square if pos.ep_square is not None and _ep_capture_possible(pos) else None
    return hash((pos.board, pos.white_to_move, pos.castling, ep, pos.variant.value))


def _ep_capture_possible(pos: Position) -> bool:
    ep = pos.ep_square
    attackers = WHITE_PAWN_ATTACKERS[ep] if pos.white_to_move else BLACK_PAWN_ATTACKERS[ep]
    own_pawn = PAWN if pos.white_to_move else -PAWN
    for frm in attackers:
        if pos.board[frm] == own_pawn:
            move = Move(frm, ep)
            if not _leaves_king_attacked(pos.board, pos.white_to_move, pos.ep_square,
                                         pos.variant, pos.castling, move):
                return True
    return False


# ---------------------------------------------------------------------------
# Validation.

def validate(pos: Position) -> None:
    """Raise InvalidPositionError if any structural invariant fails."""
    board = pos.board
    if len(board) != 64:
        raise InvalidPositionError("board must have 64 squares")
    wk = [s for s in range(64) if board[s] == KING]
    bk = [s for s in range(64) if board[s] == -KING]
    if pos.variant is Variant.HORDE:
        if wk:
            raise InvalidPositionError("Horde allows no white king")
        if len(bk) != 1:
            raise InvalidPositionError("Horde requires exactly one black king")
    else:
        if len(wk) != 1 or len(bk) != 1:
            raise InvalidPositionError("exactly one king per color required")
    min_white_pawn_rank = 0 if pos.variant is Variant.HORDE else 1
    for sq in range(64):
        piece = board[sq]
        if piece == PAWN and not min_white_pawn_rank <= square_rank(sq) <= 6:
            raise InvalidPositionError(f"white pawn on rank {square_rank(sq) + 1}")
        if piece == -PAWN and not 1 <= square_rank(sq) <= 6:
            raise InvalidPositionError(f"black pawn on rank {square_rank(sq) + 1}")
    _validate_castling(pos)
    ep = pos.ep_square
    if ep is not None:
        rank = square_rank(ep)
        if pos.white_to_move:
            if rank != 5:
                raise InvalidPositionError("en passant square must be on rank 6 with White to move")
            pawn_sq, behind = ep - 8, ep + 8
            if board[pawn_sq] != -PAWN or board[ep] or board[behind]:
                raise InvalidPositionError("en passant square inconsistent with a double push")
        else:
            if rank != 2:
                raise InvalidPositionError("en passant square must be on rank 3 with Black to move")
            pawn_sq, behind = ep + 8, ep - 8
            if board[pawn_sq] != PAWN or board[ep] or board[behind]:
                raise InvalidPositionError("en passant square inconsistent with a double push")
    if pos.halfmove_clock < 0:
        raise InvalidPositionError("halfmove clock must be >= 0")
    if pos.fullmove_number < 1:
        raise InvalidPositionError("fullmove number must be >= 1")
    opp_king = _find_king(board, not pos.white_to_move)
    if opp_king is not None and _attacked(board, opp_king, pos.white_to_move):
        raise InvalidPositionError("side not to move is in check")


def _validate_castling(pos: Position) -> None:
    board = pos.board
    for slot, (white, kingside) in enumerate(((True, True), (True, False), (False, True), (False, False))):
        rook_file = pos.castling[slot]
        if rook_file is None:
            continue
        back = 0 if white else 7
        ksq = _find_king(board, white)
        if ksq is None or square_rank(ksq) != back:
            raise InvalidPositionError("castling right without king on back rank")
        rsq = square(rook_file, back)
        if board[rsq] != (ROOK if white else -ROOK):
            raise InvalidPositionError(f"castling right without rook on {square_name(rsq)}")
        if kingside and rook_file <= square_file(ksq):
            raise InvalidPositionError("kingside rook must sit right of the king")
        if not kingside and rook_file >= square_file(ksq):
            raise InvalidPositionError("queenside rook must sit left of the king")


# ---------------------------------------------------------------------------
# Move generation.

def _pawn_moves(board, stm: bool, ep: Optional[int], variant: Variant, out: list) -> None:
    if stm:
        own_pawn, step, start_ranks, promo_rank = PAWN, 8, (1,), 7
        if variant is Variant.HORDE:
            start_ranks = (0, 1)
        targets_tbl = WHITE_PAWN_TARGETS
    else:
        own_pawn, step, start_ranks, promo_rank = -PAWN, -8, (6,), 0
        targets_tbl = BLACK_PAWN_TARGETS
    for sq in range(64):
        if board[sq] != own_pawn:
            continue
        rank = sq >> 3
        one = sq + step
        if not board[one]:
            if (one >> 3) == promo_rank:
                for promo in (QUEEN, ROOK, BISHOP, KNIGHT):
                    out.append(Move(sq, one, promo))
            else:
                out.append(Move(sq, one))
                if rank in start_ranks and not board[sq + 2 * step]:
                    out.append(Move(sq, sq + 2 * step))
        for to in targets_tbl[sq]:
            target = board[to]
            if (stm and target < 0) or (not stm and target > 0):
                if (to >> 3) == promo_rank:
                    for promo in (QUEEN, ROOK, BISHOP, KNIGHT):
                        out.append(Move(sq, to, promo))
                else:
                    out.append(Move(sq, to))
            elif to == ep and ep is not None:
                out.append(Move(sq, ep))


def _castling_moves(board, stm: bool, castling, variant: Variant, out: list) -> None:
    back = 0 if stm else 7
    ksq = _find_king(board, stm)
    if ksq is None or square_rank(ksq) != back:
        return
    slots = ((0, True), (1, False)) if stm else ((2, True), (3, False))
    for slot, kingside in slots:
        rook_file = castling[slot]
        if rook_file is None:
            continue
        rsq = square(rook_file, back)
        k_dest = square(6 if kingside else 2, back)
        r_dest = square(5 if kingside else 3, back)
        occupied = set()
        lo, hi = sorted((ksq, k_dest))
        occupied.update(range(lo, hi + 1))
        lo, hi = sorted((rsq, r_dest))
        occupied.update(range(lo, hi + 1))
        occupied.discard(ksq)
        occupied.discard(rsq)
        if any(board[s] for s in occupied):
            continue
        # Attack tests with the king lifted off, so sliders x-ray through
        # its origin; the destination is tested on the post-castle board
        # (the vacated rook square may open a discovered check).
        no_king = list(board)
        no_king[ksq] = 0
        step = 1 if k_dest >= ksq else -1
        pre_path = range(ksq, k_dest, step)
        if any(_attacked(no_king, s, not stm) for s in pre_path):
            continue
        after = list(board)
        after[ksq] = 0
        after[rsq] = 0
        after[k_dest] = KING if stm else -KING
        after[r_dest] = ROOK if stm else -ROOK
        if _attacked(after, k_dest, not stm):
            continue
        if variant is Variant.CHESS960:
            out.append(Move(ksq, rsq))
        else:
            out.append(Move(ksq, k_dest))


def _pseudo_moves(board, stm: bool, castling, ep: Optional[int], variant: Variant) -> list:
    out: list = []
    _pawn_moves(board, stm, ep, variant, out)
    for sq in range(64):
        piece = board[sq]
        if not piece or (piece > 0) != stm:
            continue
        kind = abs(piece)
        if kind == PAWN:
            continue
        if kind == KNIGHT:
            for to in KNIGHT_MOVES[sq]:
                t = board[to]
                if not t or (t > 0) != stm:
                    out.append(Move(sq, to))
        elif kind == KING:
            for to in KING_MOVES[sq]:
                t = board[to]
                if not t or (t > 0) != stm:
                    out.append(Move(sq, to))
        else:
            rays = ()
            if kind in (ROOK, QUEEN):
                rays += ORTHO_RAYS[sq]
            if kind in (BISHOP, QUEEN):
                rays += DIAG_RAYS[sq]
            for ray in rays:
                for to in ray:
                    t = board[to]
                    if not t:
                        out.append(Move(sq, to))
                    else:
                        if (t > 0) != stm:
                            out.append(Move(sq, to))
                        break
    _castling_moves(board, stm, castling, variant, out)
    return out


def _is_castling(board, move: Move, stm: bool, variant: Variant) -> bool:
    piece = board[move.from_sq]
    if abs(piece) != KING:
        return False
    if variant is Variant.CHESS960:
        target = board[move.to_sq]
        return target != 0 and (target > 0) == stm and abs(target) == ROOK
    return abs(square_file(move.to_sq) - square_file(move.from_sq)) == 2


def _apply_to_board(board: list, move: Move, stm: bool, variant: Variant) -> None:
    """Edit `board` in place; castling/ep/promotion aware. No clocks."""
    frm, to = move.from_sq, move.to_sq
    piece = board[frm]
    if _is_castling(board, move, stm, variant):
        back = 0 if stm else 7
        if variant is Variant.CHESS960:
            rsq = to
            kingside = square_file(to) > square_file(frm)
        else:
            kingside = square_file(to) > square_file(frm)
            rook_file = 7 if kingside else 0
            rsq = square(rook_file, back)
            rook = board[rsq]
            if abs(rook) != ROOK:
                # Rights-file rook lookup for non-corner standard rooks.
                rsq = next(s for s in range(back * 8, back * 8 + 8)
                           if abs(board[s]) == ROOK and (board[s] > 0) == stm)
        rook = board[rsq]
        board[frm] = 0
        board[rsq] = 0
        board[square(6 if kingside else 2, back)] = piece
        board[square(5 if kingside else 3, back)] = rook
        return
    if abs(piece) == PAWN and to != frm and not board[to] and square_file(to) != square_file(frm):
        board[to - 8 if stm else to + 8] = 0  # en passant victim
    board[frm] = 0
    if move.promotion:
        board[to] = move.promotion if stm else -move.promotion
    else:
        board[to] = piece


def _leaves_king_attacked(board, stm: bool, ep: Optional[int], variant: Variant,
                          castling, move: Move) -> bool:
    scratch = list(board)
    _apply_to_board(scratch, move, stm, variant)
    ksq = _find_king(scratch, stm)
    if ksq is None:
        return False
    return _attacked(scratch, ksq, not stm)


def _pinned_candidates(board, ksq: int, stm: bool) -> set:
    """Squares of own pieces shielding the king from an enemy slider."""
    pinned = set()
    for rays, sliders in ((ORTHO_RAYS, (ROOK, QUEEN)), (DIAG_RAYS, (BISHOP, QUEEN))):
        for ray in rays[ksq]:
            shield = None
            for s in ray:
                piece = board[s]
                if not piece:
                    continue
                if (piece > 0) == stm:
                    if shield is None:
                        shield = s
                        continue
                    break
                if shield is not None and abs(piece) in sliders:
                    pinned.add(shield)
                break
    return pinned


def _legal_moves_raw(board, stm: bool, castling, ep: Optional[int], variant: Variant) -> list:
    pseudo = _pseudo_moves(board, stm, castling, ep, variant)
    ksq = _find_king(board, stm)
    if ksq is None:
        return pseudo
    in_check = _attacked(board, ksq, not stm)
    pinned = _pinned_candidates(board, ksq, stm)
    own_pawn = PAWN if stm else -PAWN
    legal = []
    for move in pseudo:
        needs_test = (
            in_check
            or move.from_sq == ksq
            or move.from_sq in pinned
            or (ep is not None and move.to_sq == ep and board[move.from_sq] == own_pawn)
        )
        if needs_test and _leaves_king_attacked(board, stm, ep, variant, castling, move):
            continue
        legal.append(move)
    return legal


def legal_moves(pos: Position) -> list:
    """Exactly the legal moves of the side to move under pos.variant."""
    return _legal_moves_raw(pos.board, pos.white_to_move, pos.castling, pos.ep_square, pos.variant)


def is_legal(pos: Position, move: Move) -> bool:
    return move in legal_moves(pos)


# ---------------------------------------------------------------------------
# Move application.

def _next_castling(board, castling, move: Move, stm: bool, castled: bool):
    rights = list(castling)
    frm, to = move.from_sq, move.to_sq
    piece = board[frm]
    if castled or abs(piece) == KING:
        if stm:
            rights[0] = rights[1] = None
        else:
            rights[2] = rights[3] = None
    if abs(piece) == ROOK:
        back = 0 if stm else 7
        if square_rank(frm) == back:
            base = 0 if stm else 2
            for slot in (base, base + 1):
                if rights[slot] is not None and square(rights[slot], back) == frm:
                    rights[slot] = None
    # Capture on (or arrival at) an opposing rights rook square.
    opp_back = 7 if stm else 0
    if square_rank(to) == opp_back:
        base = 2 if stm else 0
        for slot in (base, base + 1):
            if rights[slot] is not None and square(rights[slot], opp_back) == to:
                rights[slot] = None
    return tuple(rights)


def apply_move(pos: Position, move: Move) -> Position:
    """Successor position; raises IllegalMoveError if move is not legal."""
    if move not in legal_moves(pos):
        raise IllegalMoveError(move)
    return _apply_unchecked(pos, move)


def _apply_unchecked(pos: Position, move: Move) -> Position:
    board = list(pos.board)
    stm = pos.white_to_move
    frm, to = move.from_sq, move.to_sq
    piece = board[frm]
    is_pawn = abs(piece) == PAWN
    castled = _is_castling(board, move, stm, pos.variant)
    was_capture = (not castled) and (
        (board[to] != 0) or (is_pawn and to == pos.ep_square and pos.ep_square is not None)
    )
    _apply_to_board(board, move, stm, pos.variant)

    new_ep = None
    if is_pawn and abs(to - frm) == 16:
        # Only classic-rank double pushes create an ep square (Horde
        # first-rank double steps do not).
        if stm and square_rank(frm) == 1:
            new_ep = frm + 8
        elif not stm and square_rank(frm) == 6:
            new_ep = frm - 8
    new_castling = _next_castling(pos.board, pos.castling, move, stm, castled)
    halfmove = 0 if (is_pawn or was_capture) else pos.halfmove_clock + 1
    fullmove = pos.fullmove_number + (0 if stm else 1)

    nxt = Position(
        board=tuple(board),
        white_to_move=not stm,
        castling=new_castling,
        ep_square=new_ep,
        halfmove_clock=halfmove,
        fullmove_number=fullmove,
        variant=pos.variant,
        repetition_log=("pending",),
    )
    key = position_key(nxt)
    if halfmove == 0 or new_castling != pos.castling:
        log = (key,)
    else:
        log = pos.repetition_log + (key,)
    object.__setattr__(nxt, "repetition_log", log)
    return nxt


# ---------------------------------------------------------------------------
# Outcomes.

def _insufficient_material(board) -> bool:
    minors = []
    bishop_colors = set()
    for sq in range(64):
        piece = board[sq]
        kind = abs(piece)
        if kind in (0, KING):
            continue
        if kind in (PAWN, ROOK, QUEEN):
            return False
        minors.append(kind)
        if kind == BISHOP:
            bishop_colors.add((square_file(sq) + square_rank(sq)) & 1)
    if len(minors) <= 1:
        return True
    # K+B vs K+B with all bishops on one square color is dead.
    return all(m == BISHOP for m in minors) and len(bishop_colors) == 1


def game_outcome(pos: Position) -> GameOutcome:
    """Detect mate, stalemate, Horde terminations, and the draw rules."""
    board = pos.board
    if pos.variant is Variant.HORDE:
        if not any(p > 0 for p in board):
            return GameOutcome(Status.BLACK_WINS, Reason.HORDE_ALL_CAPTURED)
    moves = legal_moves(pos)
    if not moves:
        if pos.in_check():
            winner = Status.BLACK_WINS if pos.white_to_move else Status.WHITE_WINS
            return GameOutcome(winner, Reason.CHECKMATE)
        return GameOutcome(Status.DRAW, Reason.STALEMATE)
    if pos.variant is not Variant.HORDE and _insufficient_material(board):
        return GameOutcome(Status.DRAW, Reason.INSUFFICIENT_MATERIAL)
    if pos.repetition_log:
        key = pos.repetition_log[-1]
        if pos.repetition_log.count(key) >= 3:
            return GameOutcome(Status.DRAW, Reason.THREEFOLD)
    if pos.halfmove_clock >= 100:
        return GameOutcome(Status.DRAW, Reason.FIFTY_MOVE)
    return GameOutcome(Status.ONGOING)


# ---------------------------------------------------------------------------
# Analysis helpers.

def pinned_pieces(pos: Position) -> frozenset:
    """Side-to-move pieces with at least one pseudo-legal move rejected
    solely because it would expose their own king."""
    board = pos.board
    stm = pos.white_to_move
    ksq = _find_king(board, stm)
    if ksq is None:
        return frozenset()
    result = set()
    for rays, sliders in ((ORTHO_RAYS, (ROOK, QUEEN)), (DIAG_RAYS, (BISHOP, QUEEN))):
        for ray in rays[ksq]:
            shield = None
            line = []
            for s in ray:
                piece = board[s]
                if not piece:
                    line.append(s)
                    continue
                if (piece > 0) == stm:
                    if shield is None:
                        shield = s
                        line.append(s)
                        continue
                    break
                if shield is not None and abs(piece) in sliders:
                    pin_line = set(line) | {s}
                    if _has_move_off_line(board, stm, pos, shield, pin_line):
                        result.add(shield)
                break
    return frozenset(result)


def _has_move_off_line(board, stm, pos: Position, sq: int, pin_line: set) -> bool:
    moves = _pseudo_moves(board, stm, pos.castling, pos.ep_square, pos.variant)
    return any(m.from_sq == sq and m.to_sq not in pin_line for m in moves)


def perft(pos: Position, depth: int) -> int:
    """Leaf count of the legal-move tree at exactly `depth` plies."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return _perft_raw(list(pos.board), pos.white_to_move, pos.castling,
                      pos.ep_square, pos.variant, depth)


def _perft_raw(board, stm, castling, ep, variant, depth: int) -> int:
    if depth == 0:
        return 1
    moves = _legal_moves_raw(board, stm, castling, ep, variant)
    if depth == 1:
        return len(moves)
    total = 0
    for move in moves:
        scratch = list(board)
        piece = scratch[move.from_sq]
        is_pawn = abs(piece) == PAWN
        castled = _is_castling(scratch, move, stm, variant)
        _apply_to_board(scratch, move, stm, variant)
        new_ep = None
        if is_pawn and abs(move.to_sq - move.from_sq) == 16:
            if stm and square_rank(move.from_sq) == 1:
                new_ep = move.from_sq + 8
            elif not stm and square_rank(move.from_sq) == 6:
                new_ep = move.from_sq - 8
        new_castling = _next_castling(board, castling, move, stm, castled)
        total += _perft_raw(scratch, not stm, new_castling, new_ep, variant, depth - 1)
    return total

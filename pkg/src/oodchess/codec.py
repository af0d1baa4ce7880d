"""Bit-exact text and index codecs.

Covers FEN parse/format (with Chess960 file-letter castling spellings),
the fixed 1968-entry move index space, and the fixed-width 77-token FEN
encoding. The move index order is pinned by the bundled golden file
``data/actions.txt``; it must never change between releases.
"""

from __future__ import annotations

from importlib import resources
from typing import Optional

from . import kernel
from .kernel import (
    CHAR_PIECES, FILES, KING, PIECE_CHARS, ROOK,
    Move, Position, Variant, square, square_file, square_name, square_rank,
)


class CodecError(Exception):
    pass


class FenError(CodecError):
    """FEN rejected; `field` names the offending FEN field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ActionEncodingError(CodecError):
    pass


class TokenizationError(CodecError):
    pass


STARTPOS_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"
HORDE_STARTPOS_FEN = "rnbqkbnr/pppppppp/8/1PP2PP1/PPPPPPPP/PPPPPPPP/PPPPPPPP/PPPPPPPP w kq - 0 1"


# ---------------------------------------------------------------------------
# FEN.

def parse_fen(text: str, variant: Variant = Variant.STANDARD) -> Position:
    """Parse a 6-field FEN into a validated Position.

    Castling accepts KQkq (mapped to the outermost rook on that wing)
    and Shredder file letters (A-H, a-h).
    """
    if not isinstance(text, str):
        raise FenError("fen", "not a string")
    fields = text.split()
    if len(fields) != 6:
        raise FenError("fen", f"expected 6 fields, got {len(fields)}")
    placement, side, castling, ep, halfmove, fullmove = fields

    board = _parse_placement(placement)

    if side == "w":
        white_to_move = True
    elif side == "b":
        white_to_move = False
    else:
        raise FenError("side", f"expected 'w' or 'b', got {side!r}")

    rights = _parse_castling(castling, board)

    if ep == "-":
        ep_square = None
    else:
        try:
            ep_square = kernel.parse_square(ep)
        except kernel.MoveParseError:
            raise FenError("en_passant", f"bad square {ep!r}") from None

    try:
        halfmove_clock = int(halfmove)
    except ValueError:
        raise FenError("halfmove", f"not an integer: {halfmove!r}") from None
    try:
        fullmove_number = int(fullmove)
    except ValueError:
        raise FenError("fullmove", f"not an integer: {fullmove!r}") from None

    pos = Position(
        board=tuple(board),
        white_to_move=white_to_move,
        castling=rights,
        ep_square=ep_square,
        halfmove_clock=halfmove_clock,
        fullmove_number=fullmove_number,
        variant=variant,
    )
    try:
        kernel.validate(pos)
    except kernel.InvalidPositionError as exc:
        raise FenError("semantic", str(exc)) from None
    return pos


def _parse_placement(placement: str) -> list:
    rows = placement.split("/")
    if len(rows) != 8:
        raise FenError("placement", f"expected 8 ranks, got {len(rows)}")
    board = [0] * 64
    for i, row in enumerate(rows):
        rank = 7 - i
        file = 0
        for ch in row:
            if ch.isdigit():
                if ch == "0":
                    raise FenError("placement", "zero run length")
                file += int(ch)
            elif ch in CHAR_PIECES:
                if file > 7:
                    raise FenError("placement", f"rank {rank + 1} overflows")
                board[square(file, rank)] = CHAR_PIECES[ch]
                file += 1
            else:
                raise FenError("placement", f"bad character {ch!r}")
        if file != 8:
            raise FenError("placement", f"rank {rank + 1} has {file} files")
    return board


def _parse_castling(text: str, board: list) -> tuple:
    rights = [None, None, None, None]
    if text == "-":
        return tuple(rights)
    for ch in text:
        white = ch.isupper()
        back = 0 if white else 7
        rook = ROOK if white else -ROOK
        king = KING if white else -KING
        king_file = next((f for f in range(8) if board[square(f, back)] == king), None)
        if king_file is None:
            raise FenError("castling", f"{ch!r} without a back-rank king")
        upper = ch.upper()
        if upper in ("K", "Q"):
            # K/Q map to the outermost rook on that wing.
            kingside = upper == "K"
            files = range(7, king_file, -1) if kingside else range(0, king_file)
            rook_file = next((f for f in files if board[square(f, back)] == rook), None)
            if rook_file is None:
                raise FenError("castling", f"no rook for {ch!r}")
        elif upper in "ABCDEFGH":
            rook_file = ord(upper) - ord("A")
            if board[square(rook_file, back)] != rook:
                raise FenError("castling", f"no rook on file {ch!r}")
            kingside = rook_file > king_file
            if rook_file == king_file:
                raise FenError("castling", f"rook file equals king file for {ch!r}")
        else:
            raise FenError("castling", f"bad character {ch!r}")
        slot = (0 if kingside else 1) + (0 if white else 2)
        if rights[slot] is not None:
            raise FenError("castling", f"duplicate right {ch!r}")
        rights[slot] = rook_file
    return tuple(rights)


def format_fen(pos: Position) -> str:
    """Canonical FEN; inverse of parse_fen up to canonicalization."""
    rows = []
    for rank in range(7, -1, -1):
        row = ""
        empty = 0
        for file in range(8):
            piece = pos.board[square(file, rank)]
            if piece:
                if empty:
                    row += str(empty)
                    empty = 0
                row += PIECE_CHARS[piece]
            else:
                empty += 1
        if empty:
            row += str(empty)
        rows.append(row)
    placement = "/".join(rows)
    side = "w" if pos.white_to_move else "b"
    castling = _format_castling(pos)
    ep = square_name(pos.ep_square) if pos.ep_square is not None else "-"
    return f"{placement} {side} {castling} {ep} {pos.halfmove_clock} {pos.fullmove_number}"


def _format_castling(pos: Position) -> str:
    # X-FEN convention: KQkq when the right names the outermost rook on
    # its wing, a file letter otherwise.
    parts = []
    for slot, (white, kingside, letter) in enumerate((
            (True, True, "K"), (True, False, "Q"),
            (False, True, "k"), (False, False, "q"))):
        rook_file = pos.castling[slot]
        if rook_file is None:
            continue
        back = 0 if white else 7
        rook = ROOK if white else -ROOK
        if kingside:
            outermost = next((f for f in range(7, -1, -1)
                              if pos.board[square(f, back)] == rook), None)
        else:
            outermost = next((f for f in range(8)
                              if pos.board[square(f, back)] == rook), None)
        if rook_file == outermost:
            parts.append(letter)
        else:
            ch = FILES[rook_file].upper() if white else FILES[rook_file]
            parts.append(ch)
    return "".join(parts) or "-"


# ---------------------------------------------------------------------------
# Action space: every from/to pair reachable by queen or knight geometry,
# plus explicit-piece promotion moves, sorted by UCI text. |space| = 1968.

_ACTIONS: Optional[tuple] = None
_ACTION_INDEX: Optional[dict] = None

ACTION_SPACE_SIZE = 1968


def _enumerate_actions() -> list:
    moves = set()
    for frm in range(64):
        for to in kernel.KNIGHT_MOVES[frm]:
            moves.add(square_name(frm) + square_name(to))
        for rays in (kernel.ORTHO_RAYS[frm], kernel.DIAG_RAYS[frm]):
            for ray in rays:
                for to in ray:
                    moves.add(square_name(frm) + square_name(to))
    promos = set()
    for text in moves:
        frm_rank, to_rank = text[1], text[3]
        file_delta = abs(ord(text[0]) - ord(text[2]))
        if file_delta <= 1 and (frm_rank, to_rank) in (("7", "8"), ("2", "1")):
            for piece in "bnqr":
                promos.add(text + piece)
    return sorted(moves | promos)


def action_space() -> tuple:
    global _ACTIONS, _ACTION_INDEX
    if _ACTIONS is None:
        actions = tuple(_enumerate_actions())
        assert len(actions) == ACTION_SPACE_SIZE
        _ACTIONS = actions
        _ACTION_INDEX = {uci: i for i, uci in enumerate(actions)}
    return _ACTIONS


def encode_action(move) -> int:
    """Index of a move (Move or UCI text) in the canonical action list."""
    uci = move.uci() if isinstance(move, Move) else str(move)
    action_space()
    try:
        return _ACTION_INDEX[uci]
    except KeyError:
        raise ActionEncodingError(f"{uci!r} is outside the canonical action list") from None


def decode_action(index: int) -> Move:
    actions = action_space()
    if not 0 <= index < len(actions):
        raise ActionEncodingError(f"index {index} out of range")
    return Move.from_uci(actions[index])


def load_golden_actions() -> tuple:
    """The shipped actions.txt, one UCI move per line in index order."""
    text = resources.files("oodchess.data").joinpath("actions.txt").read_text()
    return tuple(text.split())


# ---------------------------------------------------------------------------
# 77-token FEN encoding.
#
# Layout: 64 placement tokens in FEN scan order (rank 8 -> 1, file a -> h),
# then side (1), castling rook files (4: KQkq slots), en passant (2:
# file, rank), halfmove (3 digits), fullmove (3 digits). The action slot
# appended by consumers uses the reserved '@' symbol.

TOKENIZED_LEN = 77
ACTION_SLOT_SYMBOL = "@"

VOCABULARY = tuple(
    [".", "@", "-", "w"]
    + list("PNBRQK")
    + list("pnbrqk")
    + list("0123456789")
    + [c for c in FILES if c not in "pnbrqk"]
    + [c.upper() for c in FILES if c.upper() not in "PNBRQK"]
)
_SYMBOL_IDS = {s: i for i, s in enumerate(VOCABULARY)}


def tokenize_fen(fen: str, variant: Variant = Variant.STANDARD) -> list:
    """Fixed 77-symbol encoding of a FEN; raises TokenizationError when
    a field overflows its fixed width."""
    pos = parse_fen(fen, variant)
    return tokenize_position(pos)


def tokenize_position(pos: Position) -> list:
    tokens = []
    for rank in range(7, -1, -1):
        for file in range(8):
            piece = pos.board[square(file, rank)]
            tokens.append(PIECE_CHARS[piece] if piece else ".")
    tokens.append("w" if pos.white_to_move else "b")
    for slot in range(4):
        rook_file = pos.castling[slot]
        if rook_file is None:
            tokens.append("-")
        else:
            ch = FILES[rook_file]
            tokens.append(ch.upper() if slot < 2 else ch)
    if pos.ep_square is None:
        tokens.extend(["-", "-"])
    else:
        tokens.append(FILES[square_file(pos.ep_square)])
        tokens.append(str(square_rank(pos.ep_square) + 1))
    for value, name in ((pos.halfmove_clock, "halfmove"), (pos.fullmove_number, "fullmove")):
        if value > 999:
            raise TokenizationError(f"{name} {value} exceeds the 3-digit layout")
        tokens.extend(f"{value:03d}")
    assert len(tokens) == TOKENIZED_LEN
    return tokens


def token_ids(tokens) -> list:
    return [_SYMBOL_IDS[t] for t in tokens]


def detokenize(tokens, variant: Variant = Variant.STANDARD) -> Position:
    """Inverse of tokenize_position."""
    if len(tokens) != TOKENIZED_LEN:
        raise TokenizationError(f"expected {TOKENIZED_LEN} tokens, got {len(tokens)}")
    board = [0] * 64
    i = 0
    for rank in range(7, -1, -1):
        for file in range(8):
            sym = tokens[i]
            i += 1
            if sym != ".":
                board[square(file, rank)] = CHAR_PIECES[sym]
    white_to_move = tokens[64] == "w"
    rights = []
    for slot in range(4):
        sym = tokens[65 + slot]
        rights.append(None if sym == "-" else FILES.index(sym.lower()))
    ep_file, ep_rank = tokens[69], tokens[70]
    ep_square = None
    if ep_file != "-":
        ep_square = square(FILES.index(ep_file), int(ep_rank) - 1)
    halfmove = int("".join(tokens[71:74]))
    fullmove = int("".join(tokens[74:77]))
    return Position(
        board=tuple(board),
        white_to_move=white_to_move,
        castling=tuple(rights),
        ep_square=ep_square,
        halfmove_clock=halfmove,
        fullmove_number=fullmove,
        variant=variant,
    )

"""Fixed-width FEN tokenizer and the canonical action table.

The model's input is 77 symbols (64 placement squares in FEN scan
order, side, four castling rook-file slots, en passant file+rank,
3-digit halfmove, 3-digit fullmove) plus one '@' action slot, context
length 78. The output head indexes the 1968-entry action table shipped
as actions.txt; that file pins cross-component move indices and must
match the evaluation harness's golden file byte for byte.
"""

from __future__ import annotations

from importlib import resources

FEN_TOKENS = 77
CONTEXT = 78
ACTION_SLOT = "@"
FILES = "abcdefgh"

VOCABULARY = tuple(
    [".", "@", "-", "w"]
    + list("PNBRQK")
    + list("pnbrqk")
    + list("0123456789")
    + [c for c in FILES if c not in "pnbrqk"]
    + [c.upper() for c in FILES if c.upper() not in "PNBRQK"]
)
SYMBOL_IDS = {s: i for i, s in enumerate(VOCABULARY)}
VOCAB_SIZE = len(VOCABULARY)


class TokenizeError(Exception):
    pass


def tokenize(fen: str) -> list:
    """FEN text -> 77 symbols. Purely textual; no move generation."""
    fields = fen.split()
    if len(fields) != 6:
        raise TokenizeError(f"expected 6 FEN fields, got {len(fields)}")
    placement, side, castling, ep, halfmove, fullmove = fields

    tokens = []
    for row in placement.split("/"):
        for ch in row:
            if ch.isdigit():
                tokens.extend(["."] * int(ch))
            else:
                tokens.append(ch)
    if len(tokens) != 64:
        raise TokenizeError(f"placement expands to {len(tokens)} squares")

    if side not in ("w", "b"):
        raise TokenizeError(f"bad side {side!r}")
    tokens.append(side)

    tokens.extend(_castling_slots(placement, castling))

    if ep == "-":
        tokens.extend(["-", "-"])
    elif len(ep) == 2 and ep[0] in FILES and ep[1] in "36":
        tokens.extend([ep[0], ep[1]])
    else:
        raise TokenizeError(f"bad en passant field {ep!r}")

    for name, field in (("halfmove", halfmove), ("fullmove", fullmove)):
        try:
            value = int(field)
        except ValueError:
            raise TokenizeError(f"bad {name} {field!r}") from None
        if not 0 <= value <= 999:
            raise TokenizeError(f"{name} {value} outside the 3-digit layout")
        tokens.extend(f"{value:03d}")

    assert len(tokens) == FEN_TOKENS
    return tokens


def _king_file(placement: str, white: bool) -> int:
    rows = placement.split("/")
    row = rows[7] if white else rows[0]
    file = 0
    for ch in row:
        if ch.isdigit():
            file += int(ch)
        else:
            if ch == ("K" if white else "k"):
                return file
            file += 1
    raise TokenizeError("no king on the back rank for castling rights")


def _rook_files(placement: str, white: bool) -> list:
    rows = placement.split("/")
    row = rows[7] if white else rows[0]
    file = 0
    out = []
    for ch in row:
        if ch.isdigit():
            file += int(ch)
        else:
            if ch == ("R" if white else "r"):
                out.append(file)
            file += 1
    return out


def _castling_slots(placement: str, castling: str) -> list:
    """KQkq / Shredder letters -> four rook-file slots (K, Q, k, q)."""
    slots = ["-", "-", "-", "-"]
    if castling == "-":
        return slots
    for ch in castling:
        white = ch.isupper()
        upper = ch.upper()
        king = _king_file(placement, white)
        rooks = _rook_files(placement, white)
        if upper == "K":
            candidates = [f for f in rooks if f > king]
            if not candidates:
                raise TokenizeError(f"no kingside rook for {ch!r}")
            file = max(candidates)
        elif upper == "Q":
            candidates = [f for f in rooks if f < king]
            if not candidates:
                raise TokenizeError(f"no queenside rook for {ch!r}")
            file = min(candidates)
        elif upper in "ABCDEFGH":
            file = ord(upper) - ord("A")
        else:
            raise TokenizeError(f"bad castling character {ch!r}")
        kingside = file > king
        slot = (0 if kingside else 1) + (0 if white else 2)
        letter = FILES[file]
        slots[slot] = letter.upper() if white else letter
    return slots


def token_ids(fen: str) -> list:
    """77 FEN ids plus the action-slot id, length 78."""
    return [SYMBOL_IDS[t] for t in tokenize(fen)] + [SYMBOL_IDS[ACTION_SLOT]]


def piece_squares(fen: str, side_to_move_only: bool = True) -> set:
    """Square names occupied by the side to move (or by anyone)."""
    fields = fen.split()
    placement, side = fields[0], fields[1]
    squares = set()
    rank = 8
    for row in placement.split("/"):
        file = 0
        for ch in row:
            if ch.isdigit():
                file += int(ch)
                continue
            mine = ch.isupper() if side == "w" else ch.islower()
            if mine or not side_to_move_only:
                squares.add(FILES[file] + str(rank))
            file += 1
        rank -= 1
    return squares


# ---------------------------------------------------------------------------
# Action table.

_ACTIONS = None
_ACTION_IDS = None

ACTION_COUNT = 1968


def actions() -> tuple:
    global _ACTIONS, _ACTION_IDS
    if _ACTIONS is None:
        text = resources.files("toypolicy").joinpath("actions.txt").read_text()
        table = tuple(text.split())
        if len(table) != ACTION_COUNT:
            raise TokenizeError(f"action table has {len(table)} entries")
        _ACTIONS = table
        _ACTION_IDS = {uci: i for i, uci in enumerate(table)}
    return _ACTIONS


def action_index(uci: str) -> int:
    actions()
    try:
        return _ACTION_IDS[uci]
    except KeyError:
        raise TokenizeError(f"{uci!r} is not in the action table") from None


def action_uci(index: int) -> str:
    return actions()[index]

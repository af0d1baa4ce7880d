import pytest

from toypolicy import tokenizer

STARTPOS = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


def test_fen_tokens_is_77():
    assert len(tokenizer.tokenize(STARTPOS)) == 77


def test_context_ids_is_78_with_action_slot():
    ids = tokenizer.token_ids(STARTPOS)
    assert len(ids) == 78
    assert ids[-1] == tokenizer.SYMBOL_IDS[tokenizer.ACTION_SLOT]


def test_side_slot_differs():
    white = tokenizer.tokenize("k7/8/8/8/8/8/8/K7 w - - 0 1")
    black = tokenizer.tokenize("k7/8/8/8/8/8/8/K7 b - - 0 1")
    assert [i for i, (a, b) in enumerate(zip(white, black)) if a != b] == [64]


def test_castling_slots_resolve_rook_files():
    tokens = tokenizer.tokenize(STARTPOS)
    assert tokens[65:69] == ["H", "A", "h", "a"]
    shredder = tokenizer.tokenize("rk2r3/pppppppp/8/8/8/8/PPPPPPPP/RK2R3 w EAea - 0 1")
    assert shredder[65:69] == ["E", "A", "e", "a"]


def test_en_passant_and_clock_slots():
    tokens = tokenizer.tokenize(
        "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 12 7")
    assert tokens[69:71] == ["e", "3"]
    assert "".join(tokens[71:74]) == "012"
    assert "".join(tokens[74:77]) == "007"


def test_rejects_overflow_and_garbage():
    with pytest.raises(tokenizer.TokenizeError):
        tokenizer.tokenize("k7/8/8/8/8/8/8/K7 w - - 0 1000")
    with pytest.raises(tokenizer.TokenizeError):
        tokenizer.tokenize("not a fen")


def test_action_table_pins_indices():
    table = tokenizer.actions()
    assert len(table) == 1968
    assert len(set(table)) == 1968
    assert list(table) == sorted(table)  # canonical lexicographic order
    assert tokenizer.action_index("e2e4") == 1031
    assert tokenizer.action_uci(1031) == "e2e4"
    with pytest.raises(tokenizer.TokenizeError):
        tokenizer.action_index("a1a1")


def test_piece_squares_side_to_move():
    white = tokenizer.piece_squares(STARTPOS)
    assert "e2" in white and "e7" not in white
    black = tokenizer.piece_squares(STARTPOS.replace(" w ", " b "))
    assert "e7" in black and "e2" not in black

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from oodchess import codec, kernel  # noqa: E402


@pytest.fixture(scope="session")
def stub_engine_cmd():
    return [sys.executable, "-m", "oodchess.tools.uci_stub"]


@pytest.fixture
def startpos():
    return codec.parse_fen(codec.STARTPOS_FEN)


@pytest.fixture
def horde_start():
    return codec.parse_fen(codec.HORDE_STARTPOS_FEN, kernel.Variant.HORDE)


def random_playout_positions(start, variant, games, max_plies, seed):
    """Positions visited by seeded random playouts, FENs included."""
    import random
    rng = random.Random(seed)
    out = []
    for _ in range(games):
        pos = codec.parse_fen(start, variant) if isinstance(start, str) else start
        for _ in range(max_plies):
            out.append(pos)
            moves = kernel.legal_moves(pos)
            if not moves or kernel.game_outcome(pos).over:
                break
            choice = rng.choice(sorted(moves, key=kernel.Move.uci))
            pos = kernel.apply_move(pos, choice)
    return out

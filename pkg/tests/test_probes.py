import numpy as np
import pytest

from oodchess import codec, kernel, probes
from oodchess.codec import ACTION_SPACE_SIZE
from oodchess.kernel import Variant
from oodchess.policy import (
    PolicyDistribution, RandomLegalPolicy, UniformRandomPolicy,
)

UNIFORM = np.full(ACTION_SPACE_SIZE, -np.log(ACTION_SPACE_SIZE))


def one_hot(uci: str) -> PolicyDistribution:
    values = np.full(ACTION_SPACE_SIZE, -1e9)
    values[codec.encode_action(uci)] = 0.0
    return PolicyDistribution(values, normalized=True)


class TestHeatmap:
    def test_one_hot_peaks_at_origin(self, startpos):
        grid = probes.origin_heatmap(one_hot("e2e4"), startpos)
        flat = grid.flat()
        e2 = kernel.parse_square("e2")
        assert flat[e2] == 1.0
        assert flat.sum() == 1.0  # everything else is zero

    def test_uniform_proportional_to_action_counts(self, startpos):
        counts = np.zeros(64)
        for uci in codec.action_space():
            counts[kernel.parse_square(uci[:2])] += 1
        expected = counts / counts.max()
        grid = probes.origin_heatmap(PolicyDistribution(UNIFORM, normalized=True), startpos)
        assert np.allclose(grid.flat(), expected, atol=1e-9)

    def test_max_normalization_bounds(self, startpos):
        grid = probes.origin_heatmap(PolicyDistribution(UNIFORM, normalized=True), startpos)
        flat = grid.flat()
        assert flat.max() == 1.0
        assert flat.min() >= 0.0

    def test_mass_conserved_before_normalization(self, startpos):
        masses = probes._origin_masses(PolicyDistribution(UNIFORM, normalized=True))
        assert abs(float(masses.sum()) - 1.0) < 1e-6


class TestLegalMass:
    def test_all_mass_on_legal_moves_is_one(self, startpos):
        assert abs(probes.legal_mass(one_hot("e2e4"), startpos) - 1.0) < 1e-12

    def test_all_mass_on_illegal_action_is_zero(self, startpos):
        assert probes.legal_mass(one_hot("a1h8"), startpos) < 1e-12

    def test_uniform_start_is_20_over_1968(self, startpos):
        mass = probes.legal_mass(PolicyDistribution(UNIFORM, normalized=True), startpos)
        assert abs(mass - 20 / 1968) < 1e-12

    def test_argmax_bound(self, startpos):
        dist = PolicyDistribution(UNIFORM + np.random.default_rng(0).normal(0, 0.1, ACTION_SPACE_SIZE))
        probs = dist.probabilities()
        argmax = int(dist.log_probs.argmax())
        argmax_move = codec.decode_action(argmax)
        if argmax_move in kernel.legal_moves(startpos):
            assert probes.legal_mass(dist, startpos) >= probs[argmax]


class TestOwnPieceMass:
    def test_one_hot_own_piece(self, startpos):
        assert abs(probes.own_piece_mass(one_hot("e2e4"), startpos) - 1.0) < 1e-12
        # a black-origin action counts zero for White to move
        assert probes.own_piece_mass(one_hot("e7e5"), startpos) < 1e-12


class TestSimpleBoards:
    def test_composition(self):
        for kind in (kernel.ROOK, kernel.PAWN, kernel.KING):
            for pos in probes.simple_boards(kind, seed=1, count=16):
                pieces = [p for p in pos.board if p]
                if kind == kernel.KING:
                    assert sorted(pieces) == [-kernel.KING, kernel.KING]
                else:
                    assert sorted(pieces) == sorted([-kernel.KING, kernel.KING, kind])
                kernel.validate(pos)

    def test_deterministic(self):
        a = [codec.format_fen(p) for p in probes.simple_boards(kernel.QUEEN, 7, 8)]
        b = [codec.format_fen(p) for p in probes.simple_boards(kernel.QUEEN, 7, 8)]
        assert a == b


class _OraclePolicy(RandomLegalPolicy):
    """Distribution-capable: all mass on one legal move of the board."""

    def supports_distribution(self):
        return True

    def distribution(self, fen, variant=Variant.STANDARD):
        pos = codec.parse_fen(fen, variant)
        moves = sorted(m.uci() for m in kernel.legal_moves(pos))
        return one_hot(moves[0])

    def move(self, fen, variant=Variant.STANDARD):
        from oodchess.policy import PolicyVerdict
        dist = self.distribution(fen, variant)
        return PolicyVerdict(move=dist.argmax_move().uci(), distribution=dist)


class TestPieceRelativeLegality:
    def test_oracle_policy_scores_one(self):
        # all mass on a legal move whose origin happens to vary; restrict to
        # rook boards where the lexicographically-first legal move may be a
        # king move, so craft the check per board inside the policy instead
        class RookOracle(_OraclePolicy):
            def distribution(self, fen, variant=Variant.STANDARD):
                pos = codec.parse_fen(fen, variant)
                rook_sq = next(sq for sq in range(64) if pos.board[sq] == kernel.ROOK)
                move = next(m for m in kernel.legal_moves(pos) if m.from_sq == rook_sq)
                return one_hot(move.uci())

        score = probes.piece_relative_legality(RookOracle(0), kernel.ROOK, seed=3, count=12)
        assert score == 1.0

    def test_geometrically_impossible_mass_scores_zero(self):
        class WrongGeometry(_OraclePolicy):
            def distribution(self, fen, variant=Variant.STANDARD):
                pos = codec.parse_fen(fen, variant)
                rook_sq = next(sq for sq in range(64) if pos.board[sq] == kernel.ROOK)
                name = kernel.square_name(rook_sq)
                # knight-geometry action from the rook square: never rook-legal
                illegal = next(u for u in codec.action_space()
                               if u.startswith(name)
                               and kernel.Move.from_uci(u).to_sq in
                               kernel.KNIGHT_MOVES[rook_sq])
                return one_hot(illegal)

        score = probes.piece_relative_legality(WrongGeometry(0), kernel.ROOK,
                                               seed=3, count=12)
        assert score == 0.0

    def test_king_kind_uses_kings_only_boards(self):
        uniform = UniformRandomPolicy(0)
        boards = probes.simple_boards(kernel.KING, seed=9, count=8)
        expected = []
        for pos in boards:
            king_sq = pos.king_square(True)
            name = kernel.square_name(king_sq)
            from_count = sum(1 for u in codec.action_space() if u.startswith(name))
            legal_count = sum(1 for m in kernel.legal_moves(pos)
                              if m.from_sq == king_sq)
            expected.append(legal_count / from_count)
        got = probes.piece_relative_legality(uniform, kernel.KING, seed=9, count=8)
        assert abs(got - float(np.mean(expected))) < 1e-9

    def test_uniform_rook_board_matches_enumeration(self):
        uniform = UniformRandomPolicy(0)
        boards = probes.simple_boards(kernel.ROOK, seed=5, count=24)
        expected = []
        for pos in boards:
            rook_sq = next(sq for sq in range(64) if pos.board[sq] == kernel.ROOK)
            name = kernel.square_name(rook_sq)
            from_count = sum(1 for u in codec.action_space() if u.startswith(name))
            legal_count = sum(1 for m in kernel.legal_moves(pos) if m.from_sq == rook_sq)
            expected.append(legal_count / from_count)
        got = probes.piece_relative_legality(uniform, kernel.ROOK, seed=5, count=24)
        assert abs(got - float(np.mean(expected))) < 1e-9


class TestDynamics:
    def test_identical_checkpoints_constant(self, startpos):
        datasets = {"id": [codec.STARTPOS_FEN] * 4}
        checkpoints = [("a", 0, RandomLegalPolicy(3)), ("b", 10, RandomLegalPolicy(3))]
        series = probes.dynamics_series(checkpoints, datasets)
        values = [p.legal_next_move_rate["id"] for p in series.points]
        assert values[0] == values[1] == 1.0

    def test_uniform_to_random_legal_rises(self):
        datasets = {"id": [codec.STARTPOS_FEN] * 8}
        checkpoints = [("init", 0, UniformRandomPolicy(1)),
                       ("final", 100, RandomLegalPolicy(1))]
        series = probes.dynamics_series(checkpoints, datasets)
        first, last = series.points
        assert last.legal_next_move_rate["id"] == 1.0
        assert first.legal_next_move_rate["id"] <= 0.5
        # uniform mass is 20/1968 on every start board
        assert abs(first.legal_probability_mass["id"] - 20 / 1968) < 1e-9

    def test_requires_increasing_steps(self):
        with pytest.raises(probes.ProbeError):
            probes.dynamics_series([("a", 5, RandomLegalPolicy(1)),
                                    ("b", 5, RandomLegalPolicy(1))], {"d": []})
        with pytest.raises(probes.ProbeError):
            probes.dynamics_series([("a", 0, RandomLegalPolicy(1))], {"d": []})

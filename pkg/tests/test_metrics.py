import json

import pytest

from oodchess import codec, kernel, metrics, ood
from oodchess.kernel import Variant
from oodchess.metrics import (
    CAUSE_GEOMETRY, CAUSE_KING_EXPOSURE, CAUSE_MALFORMED, CAUSE_NO_SUCH_PIECE,
    CAUSE_PIN, EvalBoard, PuzzleCase, ScriptedOracle, classify_illegal,
    legal_accuracy, opening_move_histogram, puzzle_sequence_accuracy,
    topk_accuracy,
)
from oodchess.policy import (
    Policy, PolicyTransportError, PolicyVerdict, RandomLegalPolicy, ScriptedPolicy,
)

START = codec.STARTPOS_FEN


class TestClassifyIllegal:
    def test_malformed(self, startpos):
        assert classify_illegal(startpos, "a1a1") == CAUSE_MALFORMED
        assert classify_illegal(startpos, "zz") == CAUSE_MALFORMED

    def test_no_such_piece(self, startpos):
        assert classify_illegal(startpos, "e4e5") == CAUSE_NO_SUCH_PIECE  # empty square
        assert classify_illegal(startpos, "e7e5") == CAUSE_NO_SUCH_PIECE  # enemy pawn

    def test_geometry(self, startpos):
        assert classify_illegal(startpos, "e2e5") == CAUSE_GEOMETRY  # pawn triple step
        assert classify_illegal(startpos, "a1a5") == CAUSE_GEOMETRY  # blocked rook

    def test_pin_violation(self):
        pos = codec.parse_fen("k7/8/8/q7/8/8/3B4/4K3 w - - 0 1")
        assert classify_illegal(pos, "d2e3") == CAUSE_PIN

    def test_pinned_queen_diagonal_shield(self):
        pos = codec.parse_fen("8/5k2/8/3q4/8/1Q6/8/K7 b - - 0 1")
        assert classify_illegal(pos, "d5g2") == CAUSE_PIN

    def test_other_king_exposure(self):
        # king walks into a guarded square
        pos = codec.parse_fen("k7/8/8/8/8/8/1r6/K7 w - - 0 1")
        assert classify_illegal(pos, "a1b1") == CAUSE_KING_EXPOSURE


class TestLegalAccuracy:
    def test_random_legal_is_perfect(self):
        boards = [EvalBoard(codec.format_fen(p)) for p in ood.gen_knights_rooks(2, 25)]
        report = legal_accuracy(RandomLegalPolicy(1), boards)
        assert report.accuracy == 1.0
        assert report.total == 25

    @pytest.mark.engine
    def test_engine_backed_policy_is_perfect(self, stub_engine_cmd):
        from oodchess import engine as engine_mod
        from oodchess.policy import EnginePolicy
        handle = engine_mod.spawn(stub_engine_cmd)
        policy = EnginePolicy(handle, engine_mod.SearchLimit(movetime_ms=20))
        boards = [EvalBoard(codec.format_fen(p)) for p in ood.gen_knights_rooks(4, 3)]
        boards.append(EvalBoard(START))
        try:
            report = legal_accuracy(policy, boards)
        finally:
            policy.close()
        assert report.accuracy == 1.0

    def test_always_a1a1_scores_zero(self):
        boards = [EvalBoard(START)] * 5
        report = legal_accuracy(ScriptedPolicy({}, default="a1a1"), boards)
        assert report.accuracy == 0.0
        assert report.illegal_causes[CAUSE_MALFORMED] == 5

    def test_cause_counts_sum(self):
        script = iter(["e2e4", "a1a1", "e2e5", "e7e5", "d2d4"])
        p = ScriptedPolicy(lambda fen: next(script))
        report = legal_accuracy(p, [EvalBoard(START)] * 5)
        assert report.legal == 2
        assert sum(report.illegal_causes.values()) == report.total - report.legal

    def test_transport_failures_excluded_and_budgeted(self):
        class Flaky(Policy):
            def __init__(self):
                self.calls = 0

            def move(self, fen, variant=Variant.STANDARD):
                self.calls += 1
                if self.calls == 1:
                    raise PolicyTransportError("boom")
                return PolicyVerdict(move="e2e4")

        with pytest.raises(metrics.MetricsError):
            legal_accuracy(Flaky(), [EvalBoard(START)] * 10)  # 10% > 1%


class TestTopK:
    def make_fixture(self):
        """10 scripted boards with hand-enumerated expectations."""
        boards = []
        rankings = {}
        policy_moves = {}
        pos = codec.parse_fen(START)
        # walk ten distinct positions via a fixed line
        line = ["e2e4", "e7e5", "g1f3", "b8c6", "f1c4", "g8f6", "d2d3", "f8c5",
                "c2c3", "d7d6"]
        for i, uci in enumerate([None] + line[:-1]):
            if uci is not None:
                pos = kernel.apply_move(pos, kernel.Move.from_uci(uci))
            fen = codec.format_fen(pos)
            legal = sorted(m.uci() for m in kernel.legal_moves(pos))
            boards.append(EvalBoard(fen))
            rankings[fen] = legal[:10]  # oracle ranks lexicographically
            # policy answers: first 6 boards pick oracle-top1, next 2 pick the
            # 4th-ranked move, last 2 pick the last legal move
            if i < 6:
                policy_moves[fen] = legal[0]
            elif i < 8:
                policy_moves[fen] = legal[3]
            else:
                policy_moves[fen] = legal[-1]
        return boards, rankings, policy_moves

    def test_hand_enumerated_fixture(self):
        boards, rankings, moves = self.make_fixture()
        report = topk_accuracy(ScriptedPolicy(moves), boards, ks=(1, 3, 5, 10),
                               oracle=ScriptedOracle(rankings))
        by_k = {e["k"]: e for e in report.entries}
        # every board here has >= 10 legal moves -> all eligible
        assert all(by_k[k]["eligible"] == 10 for k in (1, 3, 5, 10))
        # matched by hand: top1 = 6, top3 = 6, top5 = 8, top10 = 8 + tail hits
        assert by_k[1]["matched"] == 6
        assert by_k[3]["matched"] == 6
        assert by_k[5]["matched"] == 8
        assert by_k[10]["matched"] == 8  # last-legal picks fall outside top10
        assert by_k[1]["accuracy"] == 0.6

    def test_policy_equal_to_oracle_top1_is_perfect(self):
        boards, rankings, _ = self.make_fixture()
        moves = {fen: ranked[0] for fen, ranked in rankings.items()}
        report = topk_accuracy(ScriptedPolicy(moves), boards, ks=(1, 3, 5, 10),
                               oracle=ScriptedOracle(rankings))
        assert all(e["accuracy"] == 1.0 for e in report.entries)

    def test_eligibility_denominators(self):
        # one-legal-move board is eligible for k=1 only
        single = "k7/8/8/8/8/8/5r2/7K w - - 0 1"
        boards = [EvalBoard(START), EvalBoard(single)]
        rankings = {
            START: ["e2e4"],
            single: ["h1g1"],
        }
        moves = {START: "e2e4", single: "h1g1"}
        report = topk_accuracy(ScriptedPolicy(moves), boards, ks=(1, 3),
                               oracle=ScriptedOracle(rankings))
        by_k = {e["k"]: e for e in report.entries}
        assert by_k[1]["eligible"] == 2
        assert by_k[3]["eligible"] == 1  # the single-move board drops out

    def test_reports_deterministic(self):
        boards, rankings, moves = self.make_fixture()
        r1 = topk_accuracy(ScriptedPolicy(moves), boards, (1, 3), ScriptedOracle(rankings))
        r2 = topk_accuracy(ScriptedPolicy(moves), boards, (1, 3), ScriptedOracle(rankings))
        assert json.dumps(r1.to_dict(), sort_keys=True) == json.dumps(r2.to_dict(), sort_keys=True)


def scholars_mate_puzzle():
    """Setup: black plays g7g5; solution: white mates with d1h5."""
    fen = "rnbqkbnr/ppppp1pp/5p2/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 2"
    return PuzzleCase(puzzle_id="mate1", fen=fen, moves=["g7g5", "d1h5"])


def two_mates_puzzle():
    """Back-rank double mate: a1a8 and b1b8 both checkmate."""
    fen = "6k1/2p2ppp/8/8/8/8/8/RR4K1 b - - 0 1"
    return PuzzleCase(puzzle_id="two-mates", fen=fen, moves=["c7c6", "a1a8"])


def long_puzzle():
    """Two player plies, no mates until the end."""
    fen = codec.STARTPOS_FEN.replace(" w ", " b ")
    # setup e7e5, then player plies e2e4 and g1f3 around the b8c6 reply
    return PuzzleCase(puzzle_id="line", fen=fen,
                      moves=["e7e5", "e2e4", "b8c6", "g1f3"])


class TestPuzzles:
    def test_verbatim_replay_scores_one(self):
        puzzles = [scholars_mate_puzzle(), two_mates_puzzle(), long_puzzle()]
        replays = {}
        for puzzle in puzzles:
            pos = codec.parse_fen(puzzle.fen)
            for i, uci in enumerate(puzzle.moves):
                if i % 2 == 1:
                    replays[codec.format_fen(pos)] = uci
                pos = kernel.apply_move(pos, kernel.Move.from_uci(uci))
        report = puzzle_sequence_accuracy(ScriptedPolicy(replays), puzzles)
        assert report.accuracy == 1.0

    def test_single_deviation_scores_n_minus_one_over_n(self):
        puzzles = [long_puzzle(), scholars_mate_puzzle(), two_mates_puzzle()]
        replays = {}
        for puzzle in puzzles:
            pos = codec.parse_fen(puzzle.fen)
            for i, uci in enumerate(puzzle.moves):
                if i % 2 == 1:
                    replays[codec.format_fen(pos)] = uci
                pos = kernel.apply_move(pos, kernel.Move.from_uci(uci))
        # deviate on the first player ply of the long line (e2e4 -> b1c3)
        start = codec.parse_fen(long_puzzle().fen)
        after_setup = kernel.apply_move(start, kernel.Move.from_uci("e7e5"))
        replays[codec.format_fen(after_setup)] = "b1c3"
        report = puzzle_sequence_accuracy(ScriptedPolicy(replays), puzzles)
        assert report.solved == 2 and report.total == 3
        verdicts = {v.puzzle_id: v for v in report.verdicts}
        assert verdicts["line"].reason == "deviation"

    def test_alternate_mate_counts_correct(self):
        puzzle = two_mates_puzzle()
        pos = codec.parse_fen(puzzle.fen)
        after_setup = kernel.apply_move(pos, kernel.Move.from_uci("c7c6"))
        # policy answers the OTHER mating rook lift
        policy = ScriptedPolicy({codec.format_fen(after_setup): "b1b8"})
        report = puzzle_sequence_accuracy(policy, [puzzle])
        assert report.accuracy == 1.0
        assert report.verdicts[0].reason == "alternate-mate"

    def test_illegal_move_counted_with_reason(self):
        puzzle = long_puzzle()
        policy = ScriptedPolicy({}, default="a1a1")
        report = puzzle_sequence_accuracy(policy, [puzzle])
        assert report.accuracy == 0.0
        assert report.verdicts[0].reason == "illegal-move"


class TestOpeningHistogram:
    def test_start_universe_at_most_20(self):
        boards = [EvalBoard(START)] * 40
        histogram = opening_move_histogram(RandomLegalPolicy(5), boards)
        assert sum(histogram.values()) == 40
        assert len(histogram) <= 17  # 16 pawn moves + knight bucket

    def test_knight_moves_aggregate(self):
        policy = ScriptedPolicy({}, default="g1f3")
        histogram = opening_move_histogram(policy, [EvalBoard(START)] * 3)
        assert histogram == {"knight": 3}

    def test_histogram_over_959_starts_sums(self):
        boards = [EvalBoard(codec.format_fen(p), Variant.CHESS960)
                  for p in ood.gen_chess960(include_classical=False)]
        boards = boards[:100]  # keep the unit test quick
        histogram = opening_move_histogram(RandomLegalPolicy(3), boards)
        assert sum(histogram.values()) == 100
        assert "illegal" not in histogram

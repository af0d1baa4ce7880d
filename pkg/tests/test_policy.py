import sys
import textwrap

import numpy as np
import pytest

from oodchess import codec, engine, kernel, policy
from oodchess.codec import ACTION_SPACE_SIZE
from oodchess.policy import (
    PolicyDistribution, PolicyVerdict, RandomLegalPolicy, ScriptedPolicy,
    TcpPolicyServer, UniformRandomPolicy, WirePolicy,
)


class TestDistribution:
    def test_length_enforced(self):
        with pytest.raises(policy.MalformedPolicyOutputError):
            PolicyDistribution(np.zeros(100))

    def test_normalization_check(self):
        with pytest.raises(policy.MalformedPolicyOutputError):
            PolicyDistribution(np.zeros(ACTION_SPACE_SIZE), normalized=True)
        uniform = np.full(ACTION_SPACE_SIZE, -np.log(ACTION_SPACE_SIZE))
        PolicyDistribution(uniform, normalized=True)  # within 1e-6

    def test_argmax_decodes(self):
        values = np.full(ACTION_SPACE_SIZE, -50.0)
        values[codec.encode_action("e2e4")] = 0.0
        dist = PolicyDistribution(values)
        assert dist.argmax_move().uci() == "e2e4"


class TestBaselines:
    def test_random_legal_only_legal_moves(self, startpos):
        p = RandomLegalPolicy(3)
        legal = {m.uci() for m in kernel.legal_moves(startpos)}
        for _ in range(30):
            assert p.move(codec.STARTPOS_FEN).move in legal

    def test_random_legal_reproducible(self):
        seq1 = [RandomLegalPolicy(5).move(codec.STARTPOS_FEN).move for _ in range(1)]
        a = RandomLegalPolicy(9)
        b = RandomLegalPolicy(9)
        fens = [codec.STARTPOS_FEN] * 10
        assert [a.move(f).move for f in fens] == [b.move(f).move for f in fens]

    def test_uniform_distribution_properties(self):
        p = UniformRandomPolicy(1)
        dist = p.distribution(codec.STARTPOS_FEN)
        probs = np.exp(dist.log_probs)
        assert abs(float(probs.sum()) - 1.0) < 1e-6
        assert np.allclose(probs, probs[0])

    def test_scripted_policy(self):
        p = ScriptedPolicy({codec.STARTPOS_FEN: "a1a1"}, default="e2e4")
        assert p.move(codec.STARTPOS_FEN).move == "a1a1"
        assert p.move("other-fen").move == "e2e4"


class TestGatewayContracts:
    def test_gateway_never_repairs_output(self, startpos):
        p = ScriptedPolicy({}, default="zz9zz")
        verdict = policy.policy_move(p, codec.STARTPOS_FEN)
        assert verdict.move == "zz9zz"  # passed through untouched

    def test_argmax_consistency_enforced(self):
        values = np.full(ACTION_SPACE_SIZE, -50.0)
        values[codec.encode_action("e2e4")] = 0.0

        class Lying(policy.Policy):
            def move(self, fen, variant=kernel.Variant.STANDARD):
                return PolicyVerdict(move="d2d4", distribution=PolicyDistribution(values))

        with pytest.raises(policy.MalformedPolicyOutputError):
            policy.policy_move(Lying(), codec.STARTPOS_FEN)

    def test_engine_policy_has_no_distribution(self, stub_engine_cmd):
        handle = engine.spawn(stub_engine_cmd)
        p = policy.EnginePolicy(handle, engine.SearchLimit(movetime_ms=20))
        with pytest.raises(policy.UnsupportedCapabilityError):
            policy.policy_distribution(p, codec.STARTPOS_FEN)
        verdict = p.move(codec.STARTPOS_FEN)
        assert verdict.distribution is None
        p.close()


class TestWireProtocol:
    def test_tcp_round_trip_move_and_dist(self):
        server = TcpPolicyServer(UniformRandomPolicy(2)).start()
        try:
            client = WirePolicy.connect_tcp(*server.address)
            assert client.caps == ("dist",)
            verdict = client.move(codec.STARTPOS_FEN)
            kernel.Move.from_uci(verdict.move)  # syntactically valid
            dist = client.distribution(codec.STARTPOS_FEN)
            assert dist.log_probs.shape == (ACTION_SPACE_SIZE,)
            assert abs(float(np.exp(dist.log_probs).sum()) - 1.0) < 1e-5
            client.close()
        finally:
            server.stop()

    def test_move_only_policy_advertises_no_caps(self):
        server = TcpPolicyServer(RandomLegalPolicy(1)).start()
        try:
            client = WirePolicy.connect_tcp(*server.address)
            assert client.caps == ()
            with pytest.raises(policy.UnsupportedCapabilityError):
                client.distribution(codec.STARTPOS_FEN)
            client.close()
        finally:
            server.stop()

    def test_handshake_frames_verbatim(self):
        transcript = []

        def recv():
            return "HELLO oodchess-policy 1" if not transcript else None

        def send(line):
            transcript.append(line)

        policy.serve_connection(RandomLegalPolicy(0), recv, send)
        assert transcript == ["OK 1 caps="]

    def test_version_mismatch_rejected(self):
        answers = iter(["HELLO oodchess-policy 2"])
        sent = []
        policy.serve_connection(RandomLegalPolicy(0),
                                lambda: next(answers, None), sent.append)
        assert sent and sent[0].startswith("ERR 505")

    def test_bad_frame_gets_err(self):
        answers = iter(["HELLO oodchess-policy 1", "FROB x", "QUIT"])
        sent = []
        policy.serve_connection(RandomLegalPolicy(0),
                                lambda: next(answers, None), sent.append)
        assert sent[0] == "OK 1 caps="
        assert sent[1].startswith("ERR 400")

    def test_exec_transport(self, tmp_path):
        # a tiny stdio policy server process built on the gateway scaffold
        script = tmp_path / "serve_random.py"
        script.write_text(textwrap.dedent("""
            from oodchess import policy
            policy.serve_stdio(policy.RandomLegalPolicy(7))
        """))
        client = WirePolicy.connect_exec([sys.executable, str(script)])
        verdict = client.move(codec.STARTPOS_FEN)
        assert verdict.move in {m.uci() for m in kernel.legal_moves(
            codec.parse_fen(codec.STARTPOS_FEN))}
        client.close()

    def test_policy_from_spec(self):
        assert isinstance(policy.policy_from_spec("random-legal:4"), RandomLegalPolicy)
        assert isinstance(policy.policy_from_spec("uniform"), UniformRandomPolicy)
        with pytest.raises(policy.PolicyError):
            policy.policy_from_spec("nonsense:spec")

    def test_exec_spec_splits_command_string(self, tmp_path):
        script = tmp_path / "srv.py"
        script.write_text(textwrap.dedent("""
            from oodchess import policy
            policy.serve_stdio(policy.RandomLegalPolicy(2))
        """))
        client = policy.policy_from_spec(f"exec:{sys.executable} {script}")
        verdict = client.move(codec.STARTPOS_FEN)
        assert len(verdict.move) in (4, 5)
        client.close()

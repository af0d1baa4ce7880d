import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

STARTPOS = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


def harness_cli_available() -> bool:
    return shutil.which("oodchess") is not None


def gen_corpus(out_dir: Path, seed: int, count: int, with_legal: bool) -> Path:
    """Generate a corpus through the evaluation harness CLI (the only
    sanctioned route to labeled boards)."""
    args = ["oodchess", "gen", "playouts", "--seed", str(seed),
            "--count", str(count), "--filter-ood", "-o", str(out_dir)]
    if with_legal:
        args.append("--with-legal")
    subprocess.run(args, check=True, capture_output=True)
    return out_dir / "playout_corpus.jsonl"


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    if not harness_cli_available():
        pytest.skip("oodchess CLI not on PATH")
    out = tmp_path_factory.mktemp("corpus")
    return gen_corpus(out, seed=31, count=1200, with_legal=False)


@pytest.fixture(scope="session")
def small_probes(tmp_path_factory):
    if not harness_cli_available():
        pytest.skip("oodchess CLI not on PATH")
    out = tmp_path_factory.mktemp("probes")
    return gen_corpus(out, seed=32, count=300, with_legal=True)


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory, small_corpus, small_probes):
    """A briefly-trained checkpoint shared across protocol tests."""
    import torch
    torch.set_num_threads(2)
    from toypolicy.model import ModelConfig
    from toypolicy.train import load_rows, train

    out = tmp_path_factory.mktemp("ck")
    config = ModelConfig(layers=1, heads=2, embed_dim=32, batch_size=64,
                         steps=30, seed=3)
    saved = train(config, load_rows(small_corpus), load_rows(small_probes),
                  out, checkpoints=3, log=None)
    return saved[-1].path

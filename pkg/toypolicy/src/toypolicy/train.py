"""Behavior-cloning training loop with periodic checkpoints.

Consumes (fen, best_move) JSONL rows produced by the evaluation
harness. Rows carrying OOD flags are refused outright: the training
distribution must assign them zero probability. Checkpoints land on a
log-spaced step grid (step 0 included) and carry an eval snapshot over
held-out probe rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import torch
from torch import nn

from . import tokenizer
from .model import ModelConfig, PolicyNet, save_checkpoint


class CorpusError(Exception):
    pass


@dataclass
class Row:
    fen: str
    best_move: str
    legal: Optional[list] = None


def load_rows(path, require_unflagged: bool = True) -> list:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            if require_unflagged and raw.get("flags"):
                raise CorpusError(
                    f"corpus row carries OOD flags {raw['flags']}; "
                    "train only on the filtered distribution")
            rows.append(Row(fen=raw["fen"], best_move=raw.get("best_move"),
                            legal=raw.get("legal")))
    if not rows:
        raise CorpusError(f"no rows in {path}")
    return rows


def encode_rows(rows: Iterable[Row]) -> tuple:
    tokens = []
    labels = []
    for row in rows:
        tokens.append(tokenizer.token_ids(row.fen))
        labels.append(tokenizer.action_index(row.best_move))
    return (torch.tensor(tokens, dtype=torch.int16),
            torch.tensor(labels, dtype=torch.long))


def checkpoint_steps(total: int, count: int = 12) -> list:
    """Log-spaced step grid from 0 to total, strictly increasing."""
    if count < 2:
        raise ValueError("need at least two checkpoints")
    grid = {0, total}
    for i in range(1, count - 1):
        grid.add(int(round(total ** (i / (count - 1)))))
    return sorted(grid)


@dataclass
class Checkpoint:
    step: int
    path: Path
    snapshot: dict


def _probe_snapshot(net: PolicyNet, probe_tokens, probe_labels,
                    probe_legal_indices) -> dict:
    net.eval()
    legal_hits = 0
    label_hits = 0
    total = probe_tokens.shape[0]
    with torch.no_grad():
        for start in range(0, total, 512):
            batch = probe_tokens[start:start + 512].long()
            logits = net(batch)
            choice = logits.argmax(dim=-1)
            for i, action in enumerate(choice.tolist()):
                row = start + i
                if action in probe_legal_indices[row]:
                    legal_hits += 1
                if action == int(probe_labels[row]):
                    label_hits += 1
    net.train()
    return {
        "probe_boards": total,
        "legal_accuracy": legal_hits / total if total else 0.0,
        "label_accuracy": label_hits / total if total else 0.0,
    }


def train(config: ModelConfig, corpus_rows: list, probe_rows: list,
          out_dir, checkpoints: int = 12,
          log: Optional[callable] = print) -> list:
    """Cross-entropy on the action index; returns the checkpoint list."""
    for row in corpus_rows:
        if row.best_move is None:
            raise CorpusError(f"unlabeled corpus row {row.fen}")
    for row in probe_rows:
        if not row.legal:
            raise CorpusError("probe rows need embedded legal move lists")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)

    tokens, labels = encode_rows(corpus_rows)
    probe_tokens, probe_labels = encode_rows(
        [Row(r.fen, r.best_move or r.legal[0], r.legal) for r in probe_rows])
    probe_legal_indices = [
        {tokenizer.action_index(u) for u in r.legal} for r in probe_rows]

    net = PolicyNet(config)
    net.train()
    optimizer = torch.optim.AdamW(net.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(config.seed)

    grid = checkpoint_steps(config.steps, checkpoints)
    saved = []

    def snap(step: int, loss_value: float):
        snapshot = _probe_snapshot(net, probe_tokens, probe_labels,
                                   probe_legal_indices)
        snapshot["train_loss"] = loss_value
        path = out_dir / f"ck_{step:07d}.pt"
        save_checkpoint(path, net, step, snapshot)
        saved.append(Checkpoint(step=step, path=path, snapshot=snapshot))
        if log:
            log(f"checkpoint step={step} loss={loss_value:.4f} "
                f"probe_legal={snapshot['legal_accuracy']:.4f}")

    n = tokens.shape[0]
    loss_value = math.log(tokenizer.ACTION_COUNT)
    if 0 in grid:
        snap(0, loss_value)
    for step in range(1, config.steps + 1):
        idx = torch.from_numpy(rng.integers(0, n, size=config.batch_size))
        batch = tokens[idx].long()
        target = labels[idx]
        logits = net(batch)
        loss = loss_fn(logits, target)
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        loss_value = loss.detach().item()
        if step in grid:
            snap(step, loss_value)
    steps_seen = [c.step for c in saved]
    assert steps_seen == sorted(set(steps_seen)), "checkpoint steps must increase"
    manifest = {
        "config": config.to_dict(),
        "checkpoints": [{"step": c.step, "path": c.path.name, **c.snapshot}
                        for c in saved],
        "corpus_rows": len(corpus_rows),
        "probe_rows": len(probe_rows),
    }
    with open(out_dir / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return saved

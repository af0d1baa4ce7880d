"""Decoder-only transformer over tokenized FENs.

Context length is fixed at 78 (77 FEN symbols + 1 action slot); the
action head reads the final position and emits 1968 logits. Inference
is deterministic for fixed weights.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from . import tokenizer


@dataclass
class ModelConfig:
    layers: int = 4
    heads: int = 4
    embed_dim: int = 128
    context: int = tokenizer.CONTEXT
    vocab_size: int = tokenizer.VOCAB_SIZE
    output_dim: int = tokenizer.ACTION_COUNT
    batch_size: int = 256
    steps: int = 6000
    learning_rate: float = 3e-4
    seed: int = 0

    def __post_init__(self):
        if self.context != tokenizer.CONTEXT:
            raise ValueError(f"context length is fixed at {tokenizer.CONTEXT}")
        if self.output_dim != tokenizer.ACTION_COUNT:
            raise ValueError(f"output dim is fixed at {tokenizer.ACTION_COUNT}")

    def to_dict(self) -> dict:
        return asdict(self)


class PolicyNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.embed_dim
        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.position_embedding = nn.Embedding(config.context, d)
        layer = nn.TransformerEncoderLayer(
            d_model=d, nhead=config.heads, dim_feedforward=4 * d,
            batch_first=True, norm_first=True, dropout=0.0)
        self.blocks = nn.TransformerEncoder(layer, num_layers=config.layers,
                                            enable_nested_tensor=False)
        self.norm = nn.LayerNorm(d)
        self.head = nn.Linear(d, config.output_dim)
        mask = torch.triu(torch.full((config.context, config.context),
                                     float("-inf")), diagonal=1)
        self.register_buffer("causal_mask", mask, persistent=False)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens: [batch, 78] int64 -> logits [batch, 1968]."""
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        x = self.token_embedding(tokens) + self.position_embedding(positions)
        x = self.blocks(x, mask=self.causal_mask)
        x = self.norm(x[:, -1])
        return self.head(x)


class PolicyModel:
    """Inference wrapper: FEN in, 1968 log-probs and the argmax out."""

    def __init__(self, net: PolicyNet):
        self.net = net
        self.net.eval()

    @classmethod
    def load(cls, path) -> "PolicyModel":
        payload = torch.load(path, map_location="cpu", weights_only=False)
        config = ModelConfig(**payload["config"])
        net = PolicyNet(config)
        net.load_state_dict(payload["model_state"])
        return cls(net)

    @torch.no_grad()
    def log_probs(self, fen: str) -> torch.Tensor:
        ids = torch.tensor([tokenizer.token_ids(fen)], dtype=torch.long)
        logits = self.net(ids)[0].double()
        return torch.log_softmax(logits, dim=-1)

    def predict(self, fen: str) -> tuple:
        """(log_probs[1968], argmax uci). Legality is NOT enforced."""
        log_probs = self.log_probs(fen)
        index = int(log_probs.argmax())
        return log_probs, tokenizer.action_uci(index)


def save_checkpoint(path, net: PolicyNet, step: int, snapshot: dict):
    torch.save({
        "config": net.config.to_dict(),
        "model_state": net.state_dict(),
        "step": step,
        "snapshot": snapshot,
    }, path)


def load_checkpoint_meta(path) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    return {"step": payload["step"], "snapshot": payload["snapshot"],
            "config": payload["config"]}

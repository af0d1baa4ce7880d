"""CLI: python -m toypolicy {train | serve | predict}."""

from __future__ import annotations

import argparse
import sys

from .model import ModelConfig, PolicyModel
from .serve import serve_stdio, serve_tcp
from .train import load_rows, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="toypolicy")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train on a (fen, best_move) JSONL corpus")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--probes", required=True, help="held-out rows with legal lists")
    tr.add_argument("--out", required=True)
    tr.add_argument("--layers", type=int, default=4)
    tr.add_argument("--heads", type=int, default=4)
    tr.add_argument("--dim", type=int, default=128)
    tr.add_argument("--batch", type=int, default=256)
    tr.add_argument("--steps", type=int, default=6000)
    tr.add_argument("--lr", type=float, default=3e-4)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--checkpoints", type=int, default=12)
    tr.add_argument("--threads", type=int, default=0)

    sv = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    sv.add_argument("--ckpt", required=True)
    sv.add_argument("--stdio", action="store_true")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=0)

    pr = sub.add_parser("predict", help="argmax move for one FEN")
    pr.add_argument("--ckpt", required=True)
    pr.add_argument("--fen", required=True)

    args = parser.parse_args(argv)

    if args.command == "train":
        import torch
        if args.threads:
            torch.set_num_threads(args.threads)
        config = ModelConfig(layers=args.layers, heads=args.heads,
                             embed_dim=args.dim, batch_size=args.batch,
                             steps=args.steps, learning_rate=args.lr,
                             seed=args.seed)
        corpus = load_rows(args.corpus)
        probes = load_rows(args.probes)
        train(config, corpus, probes, args.out, checkpoints=args.checkpoints)
        return 0

    if args.command == "serve":
        model = PolicyModel.load(args.ckpt)
        if args.stdio:
            serve_stdio(model)
        else:
            def announce(address):
                print(f"listening on {address[0]}:{address[1]}", flush=True)
            serve_tcp(model, args.host, args.port, ready=announce)
        return 0

    if args.command == "predict":
        model = PolicyModel.load(args.ckpt)
        log_probs, uci = model.predict(args.fen)
        print(uci)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())

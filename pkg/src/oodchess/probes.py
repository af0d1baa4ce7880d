"""Training-dynamics instrumentation over policy distributions.

Origin-square heatmaps (max-normalized to [0,1]), legal probability
mass, per-piece relative legality on constructed two-king boards, and
per-checkpoint dynamics series. All probes are pure functions of the
distribution and the position.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import codec, kernel, metrics
from .kernel import Position
from .policy import Policy, PolicyDistribution, policy_distribution

MASS_TOLERANCE = 1e-6


class ProbeError(Exception):
    pass


@dataclass
class HeatmapGrid:
    """8x8 origin-square mass, divided by its maximum (zero grid stays
    zero), values[rank][file]."""
    values: list
    fen: str
    checkpoint_id: str = ""

    def flat(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float).reshape(64)


def _origin_masses(dist: PolicyDistribution) -> np.ndarray:
    probs = dist.probabilities()
    masses = np.zeros(64)
    for index, uci in enumerate(codec.action_space()):
        frm = kernel.parse_square(uci[0:2])
        masses[frm] += probs[index]
    return masses


def origin_heatmap(dist: PolicyDistribution, pos: Position,
                   checkpoint_id: str = "") -> HeatmapGrid:
    """Summed next-move probability per origin square, max-normalized."""
    masses = _origin_masses(dist)
    total = float(masses.sum())
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise ProbeError(f"distribution mass {total} is not normalized")
    peak = float(masses.max())
    if peak > 0:
        masses = masses / peak
    grid = [[float(masses[kernel.square(f, r)]) for f in range(8)] for r in range(8)]
    return HeatmapGrid(values=grid, fen=codec.format_fen(pos), checkpoint_id=checkpoint_id)


def legal_mass(dist: PolicyDistribution, pos: Position) -> float:
    """Total probability assigned to the legal moves of pos."""
    probs = dist.probabilities()
    total = 0.0
    for move in kernel.legal_moves(pos):
        total += float(probs[codec.encode_action(move)])
    return total


def own_piece_mass(dist: PolicyDistribution, pos: Position) -> float:
    """Fraction of origin-square mass sitting on side-to-move pieces."""
    masses = _origin_masses(dist)
    own = pos.piece_squares(pos.white_to_move)
    return float(sum(masses[sq] for sq in own))


# ---------------------------------------------------------------------------
# Per-piece relative legality on constructed boards: one king each plus a
# single piece of the probed kind (kings-only when probing the king).

def simple_boards(kind: int, seed: int, count: int = 256) -> list:
    rng = random.Random(seed)
    boards = []
    while len(boards) < count:
        squares = rng.sample(range(64), 3)
        wk, bk, piece_sq = squares
        if max(abs(kernel.square_file(wk) - kernel.square_file(bk)),
               abs(kernel.square_rank(wk) - kernel.square_rank(bk))) <= 1:
            continue
        board = [0] * 64
        board[wk] = kernel.KING
        board[bk] = -kernel.KING
        if kind != kernel.KING:
            if kind == kernel.PAWN and not 1 <= kernel.square_rank(piece_sq) <= 6:
                continue
            board[piece_sq] = kind
        pos = Position(board=tuple(board), white_to_move=True)
        try:
            kernel.validate(pos)
        except kernel.InvalidPositionError:
            continue
        if pos.in_check():
            continue
        boards.append(pos)
    return boards


def piece_relative_legality(policy: Policy, kind: int, seed: int,
                            count: int = 256) -> float:
    """Mean of p(legal moves of the piece) / p(all moves from its
    square) over constructed boards."""
    ratios = []
    for pos in simple_boards(kind, seed, count):
        fen = codec.format_fen(pos)
        dist = policy_distribution(policy, fen)
        probs = dist.probabilities()
        if kind == kernel.KING:
            piece_sq = pos.king_square(True)
        else:
            piece_sq = next(sq for sq in range(64) if pos.board[sq] == kind)
        from_name = kernel.square_name(piece_sq)
        all_mass = 0.0
        for index, uci in enumerate(codec.action_space()):
            if uci.startswith(from_name):
                all_mass += float(probs[index])
        legal_mass_piece = 0.0
        for move in kernel.legal_moves(pos):
            if move.from_sq == piece_sq:
                legal_mass_piece += float(probs[codec.encode_action(move)])
        if all_mass > 0:
            ratios.append(legal_mass_piece / all_mass)
    if not ratios:
        raise ProbeError("no usable probe boards")
    return float(np.mean(ratios))


# ---------------------------------------------------------------------------
# Dynamics across checkpoints.

@dataclass
class DynamicsPoint:
    checkpoint_id: str
    step: int
    legal_next_move_rate: dict  # dataset -> accuracy
    legal_probability_mass: dict  # dataset -> mean mass


@dataclass
class DynamicsSeries:
    points: list

    def series(self, field: str, dataset: str) -> list:
        return [(p.step, getattr(p, field)[dataset]) for p in self.points]

    def to_rows(self) -> list:
        rows = []
        for p in self.points:
            for dataset in sorted(p.legal_next_move_rate):
                rows.append([p.checkpoint_id, p.step, dataset,
                             p.legal_next_move_rate[dataset],
                             p.legal_probability_mass.get(dataset, "")])
        return rows


def dynamics_series(checkpoints: Sequence, datasets: dict) -> DynamicsSeries:
    """Evaluate legal accuracy and legal mass per checkpoint.

    checkpoints: (checkpoint_id, step, Policy) triples, step-ordered;
    datasets: name -> iterable of EvalBoard/fen.
    """
    if len(checkpoints) < 2:
        raise ProbeError("dynamics need at least two checkpoints")
    steps = [step for _, step, _ in checkpoints]
    if steps != sorted(steps) or len(set(steps)) != len(steps):
        raise ProbeError("checkpoint steps must be strictly increasing")
    points = []
    for checkpoint_id, step, policy in checkpoints:
        rates = {}
        masses = {}
        for name, boards in datasets.items():
            board_list = [metrics.EvalBoard.coerce(b) for b in boards]
            report = metrics.legal_accuracy(policy, board_list)
            rates[name] = report.accuracy
            if policy.supports_distribution():
                values = []
                for board in board_list:
                    pos = codec.parse_fen(board.fen, board.variant)
                    dist = policy_distribution(policy, board.fen, board.variant)
                    values.append(legal_mass(dist, pos))
                masses[name] = float(np.mean(values)) if values else 0.0
        points.append(DynamicsPoint(checkpoint_id, step, rates, masses))
    return DynamicsSeries(points=points)

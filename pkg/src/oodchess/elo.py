"""Maximum-likelihood relative Elo from match results.

Bradley-Terry strengths with a Davidson draw term and a first-move
advantage, fit by damped Newton on the penalized log-likelihood. A
Gaussian prior (strength set by the confidence scale) keeps degenerate
inputs finite; ratings are normalized to sum exactly to zero, so they
are comparable only within one tournament.

Model, on the natural scale (beta = Elo * ln10/400):
    u = beta_white + advantage      v = beta_black
    P(white) = e^u / D    P(black) = e^v / D    P(draw) = nu*e^((u+v)/2) / D
    D = e^u + e^v + nu*e^((u+v)/2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

LOG10_SCALE = math.log(10.0) / 400.0

GRAD_TOL = 1e-10
MAX_ITERATIONS = 200


class RatingError(Exception):
    pass


@dataclass
class GameRecord:
    white: str
    black: str
    score: float  # 1 white win, 0.5 draw, 0 black win

    @classmethod
    def coerce(cls, item) -> "GameRecord":
        if isinstance(item, GameRecord):
            return item
        if isinstance(item, dict):
            if "score" in item:
                return cls(item["white"], item["black"], float(item["score"]))
            result = item["result"]
            score = {"1-0": 1.0, "0-1": 0.0, "1/2-1/2": 0.5}[result]
            return cls(item["white"], item["black"], score)
        raise RatingError(f"cannot interpret game record {item!r}")


@dataclass
class RatingTable:
    players: list  # {name, rating, uncertainty, score, games, draws}
    draw_parameter: float
    advantage: float

    def rating_of(self, name: str) -> float:
        for row in self.players:
            if row["name"] == name:
                return row["rating"]
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "players": self.players,
            "draw_parameter": self.draw_parameter,
            "advantage": self.advantage,
        }

    def render(self) -> str:
        lines = [f"{'':4}{'Player':<16}{'Rel. Elo':>10}  {'±':>4}  {'Draws':>6}"]
        for i, row in enumerate(self.players, start=1):
            draws = f"{row['draws'] / row['games'] * 100:.0f}%" if row["games"] else "-"
            lines.append(
                f"{i:<4}{row['name']:<16}{row['rating']:>10.0f}  "
                f"{row['uncertainty']:>4.0f}  {draws:>6}")
        return "\n".join(lines)


def _pair_counts(games: list) -> dict:
    counts: dict = {}
    for g in games:
        key = (g.white, g.black)
        ww, dr, bw = counts.get(key, (0, 0, 0))
        if g.score == 1.0:
            ww += 1
        elif g.score == 0.5:
            dr += 1
        elif g.score == 0.0:
            bw += 1
        else:
            raise RatingError(f"score {g.score} is not 0, 0.5, or 1")
        counts[key] = (ww, dr, bw)
    return counts


def _check_connected(players: list, counts: dict):
    index = {name: i for i, name in enumerate(players)}
    parent = list(range(len(players)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (w, b) in counts:
        a, c = find(index[w]), find(index[b])
        parent[a] = c
    roots = {find(i) for i in range(len(players))}
    if len(roots) > 1:
        raise RatingError("result graph is disconnected; ratings are not identifiable")


def _neg_loglik_and_grad(theta: np.ndarray, n: int, pair_index: list,
                         prior_beta: float, prior_adv: float,
                         prior_lognu_mean: float, prior_lognu: float):
    """Penalized negative log-likelihood and its gradient.

    theta = [beta_0..beta_{n-1}, advantage, log_nu]; pair_index entries
    are (wi, bi, n_whitewin, n_draw, n_blackwin).
    """
    beta = theta[:n]
    adv = theta[n]
    log_nu = theta[n + 1]
    nll = 0.0
    grad = np.zeros_like(theta)
    for wi, bi, ww, dr, bw in pair_index:
        u = beta[wi] + adv
        v = beta[bi]
        s = 0.5 * (u + v)
        eu, ev, g = math.exp(u), math.exp(v), math.exp(log_nu + s)
        D = eu + ev + g
        logD = math.log(D)
        total = ww + dr + bw
        nll -= ww * u + bw * v + dr * (log_nu + s) - total * logD
        A = (eu + 0.5 * g) / D
        B = (ev + 0.5 * g) / D
        C = g / D
        du = ww + 0.5 * dr - total * A
        dv = bw + 0.5 * dr - total * B
        dl = dr - total * C
        grad[wi] -= du
        grad[bi] -= dv
        grad[n] -= du
        grad[n + 1] -= dl
    # Gaussian priors.
    nll += 0.5 * float(beta @ beta) / prior_beta ** 2
    grad[:n] += beta / prior_beta ** 2
    nll += 0.5 * adv ** 2 / prior_adv ** 2
    grad[n] += adv / prior_adv ** 2
    nll += 0.5 * (log_nu - prior_lognu_mean) ** 2 / prior_lognu ** 2
    grad[n + 1] += (log_nu - prior_lognu_mean) / prior_lognu ** 2
    return nll, grad


def estimate(results: Iterable, confidence: float = 0.5) -> RatingTable:
    """Fit ratings from match results (GameRecord, result dicts, or
    MatchResult-shaped dicts). Raises on a disconnected result graph."""
    games = [GameRecord.coerce(r) for r in results]
    if not games:
        raise RatingError("no games")
    players = sorted({g.white for g in games} | {g.black for g in games})
    n = len(players)
    index = {name: i for i, name in enumerate(players)}
    counts = _pair_counts(games)
    _check_connected(players, counts)
    pair_index = [(index[w], index[b], ww, dr, bw)
                  for (w, b), (ww, dr, bw) in sorted(counts.items())]

    # Prior scale: confidence c maps to a Gaussian prior of sd 200/sqrt(c)
    # Elo on each rating (c=0.5 -> ~283 Elo), mild against real data but
    # enough to bound all-wins players.
    prior_beta = (200.0 / math.sqrt(confidence)) * LOG10_SCALE
    prior_adv = 200.0 * LOG10_SCALE
    prior_lognu_mean = math.log(0.3)
    prior_lognu = 5.0

    theta = np.zeros(n + 2)
    theta[n + 1] = prior_lognu_mean
    args = (n, pair_index, prior_beta, prior_adv, prior_lognu_mean, prior_lognu)

    nll, grad = _neg_loglik_and_grad(theta, *args)
    for _ in range(MAX_ITERATIONS):
        if float(np.max(np.abs(grad))) < GRAD_TOL:
            break
        hessian = _fd_hessian(theta, args)
        try:
            step = np.linalg.solve(hessian, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        scale = 1.0
        for _ in range(40):  # damping
            candidate = theta + scale * step
            cand_nll, cand_grad = _neg_loglik_and_grad(candidate, *args)
            if cand_nll <= nll + 1e-12:
                theta, nll, grad = candidate, cand_nll, cand_grad
                break
            scale *= 0.5
        else:
            break

    ratings = theta[:n] / LOG10_SCALE
    ratings = ratings - ratings.mean()
    for _ in range(10):  # pin the sum to exactly zero despite rounding
        residual = math.fsum(ratings)
        if residual == 0.0:
            break
        # absorb where the ulp is smallest so the correction sticks
        ratings[int(np.argmin(np.abs(ratings)))] -= residual

    hessian = _fd_hessian(theta, args)
    uncertainties = []
    for i in range(n):
        info = max(hessian[i, i], 1e-12)
        uncertainties.append(1.96 / math.sqrt(info) / LOG10_SCALE)

    scores = {name: [0.0, 0, 0] for name in players}  # points, games, draws
    for g in games:
        scores[g.white][0] += g.score
        scores[g.black][0] += 1.0 - g.score
        for name in (g.white, g.black):
            scores[name][1] += 1
        if g.score == 0.5:
            scores[g.white][2] += 1
            scores[g.black][2] += 1

    rows = []
    for i, name in enumerate(players):
        pts, played, draws = scores[name]
        rows.append({
            "name": name,
            "rating": float(ratings[i]),
            "uncertainty": float(uncertainties[i]),
            "score": pts / played if played else 0.0,
            "games": played,
            "draws": draws,
        })
    rows.sort(key=lambda r: (-r["rating"], r["name"]))
    return RatingTable(
        players=rows,
        draw_parameter=float(math.exp(theta[n + 1])),
        advantage=float(theta[n] / LOG10_SCALE),
    )


def _fd_hessian(theta: np.ndarray, args, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the analytic gradient."""
    m = len(theta)
    hessian = np.zeros((m, m))
    for j in range(m):
        up = theta.copy()
        up[j] += h
        down = theta.copy()
        down[j] -= h
        _, grad_up = _neg_loglik_and_grad(up, *args)
        _, grad_down = _neg_loglik_and_grad(down, *args)
        hessian[:, j] = (grad_up - grad_down) / (2 * h)
    return 0.5 * (hessian + hessian.T)


def expected_score(rating_gap: float) -> float:
    """Logistic expected score for an Elo gap (draws fold in as half)."""
    return 1.0 / (1.0 + 10.0 ** (-rating_gap / 400.0))


def rank_consistency(table: RatingTable, scores: dict) -> tuple:
    """True plus a report when the rating order equals the score order
    (ties broken identically, by name); inversions are listed."""
    names = [row["name"] for row in table.players]
    if set(names) != set(scores):
        raise RatingError("player sets differ between ratings and scores")
    by_rating = sorted(names, key=lambda p: (-table.rating_of(p), p))
    by_score = sorted(names, key=lambda p: (-scores[p], p))
    inversions = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            rat = table.rating_of(a) - table.rating_of(b)
            sco = scores[a] - scores[b]
            if rat * sco < 0:
                inversions.append((a, b))
    consistent = by_rating == by_score
    report = {
        "consistent": consistent,
        "order_by_rating": by_rating,
        "order_by_score": by_score,
        "inversions": inversions,
    }
    return consistent, report


def simulate_round_robin(true_ratings: dict, games_per_pair: int, seed: int,
                         advantage: float = 20.0, draw_parameter: float = 0.3) -> list:
    """Monte-Carlo games drawn from the same Davidson model; the color
    split is exactly even per pair."""
    import random
    rng = random.Random(seed)
    names = sorted(true_ratings)
    games = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            for game_idx in range(games_per_pair):
                white, black = (a, b) if game_idx % 2 == 0 else (b, a)
                u = (true_ratings[white] + advantage) * LOG10_SCALE
                v = true_ratings[black] * LOG10_SCALE
                eu, ev = math.exp(u), math.exp(v)
                g = draw_parameter * math.exp(0.5 * (u + v))
                D = eu + ev + g
                roll = rng.random() * D
                if roll < eu:
                    score = 1.0
                elif roll < eu + ev:
                    score = 0.0
                else:
                    score = 0.5
                games.append(GameRecord(white, black, score))
    return games

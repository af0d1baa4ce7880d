"""Online bridge exposing a gateway policy on a Lichess-style bot API.

Server-agnostic behind a thin HTTP client (base URL injectable, token
via env/argument). The bot accepts challenges in whitelisted variants,
answers with policy moves gated by the kernel (an illegal policy move
resigns the game and is flagged, never sent), and appends
replay-validated game logs as JSONL.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import requests

from . import codec, kernel
from .kernel import Move, Variant
from .policy import Policy, PolicyError, policy_move

DEFAULT_BASE_URL = "https://lichess.org"
VARIANT_WHITELIST = ("standard", "chess960", "horde")

_VARIANT_MAP = {"standard": Variant.STANDARD, "chess960": Variant.CHESS960,
                "horde": Variant.HORDE}


class BotError(Exception):
    pass


class TokenError(BotError):
    pass


@dataclass
class OnlineGameLog:
    game_id: str
    variant: str
    our_color: str
    opponent: str
    opponent_rating: Optional[int]
    opponent_is_human: bool
    moves: list
    result: str
    illegal_policy_move: bool = False

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "variant": self.variant,
            "our_color": self.our_color,
            "opponent": self.opponent,
            "opponent_rating": self.opponent_rating,
            "opponent_is_human": self.opponent_is_human,
            "moves": self.moves,
            "result": self.result,
            "illegal_policy_move": self.illegal_policy_move,
        }


class BotClient:
    """Minimal bot API client: event/game ndjson streams plus POSTs."""

    def __init__(self, token: str, base_url: str = DEFAULT_BASE_URL,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.session.headers["Authorization"] = f"Bearer {token}"

    def _check(self, response):
        if response.status_code == 401:
            raise TokenError("API token rejected")
        response.raise_for_status()
        return response

    def account(self) -> dict:
        return self._check(self.session.get(f"{self.base_url}/api/account", timeout=30)).json()

    def stream_events(self):
        response = self._check(self.session.get(
            f"{self.base_url}/api/stream/event", stream=True, timeout=60))
        # chunk_size=1: ndjson frames must surface as they arrive, not
        # when a read buffer happens to fill
        for line in response.iter_lines(chunk_size=1):
            if line:
                yield json.loads(line)

    def stream_game(self, game_id: str):
        response = self._check(self.session.get(
            f"{self.base_url}/api/bot/game/stream/{game_id}", stream=True, timeout=60))
        for line in response.iter_lines(chunk_size=1):
            if line:
                yield json.loads(line)

    def accept_challenge(self, challenge_id: str):
        self._check(self.session.post(
            f"{self.base_url}/api/challenge/{challenge_id}/accept", timeout=30))

    def decline_challenge(self, challenge_id: str):
        self._check(self.session.post(
            f"{self.base_url}/api/challenge/{challenge_id}/decline", timeout=30))

    def post_move(self, game_id: str, uci: str):
        self._check(self.session.post(
            f"{self.base_url}/api/bot/game/{game_id}/move/{uci}", timeout=30))

    def resign(self, game_id: str):
        self._check(self.session.post(
            f"{self.base_url}/api/bot/game/{game_id}/resign", timeout=30))


def _start_position(game_full: dict, variant: Variant) -> kernel.Position:
    initial = game_full.get("initialFen", "startpos")
    if initial in ("startpos", None, ""):
        return kernel.Position.initial(variant)
    return codec.parse_fen(initial, variant)


def play_game(client: BotClient, policy: Policy, game_id: str, our_id: str) -> OnlineGameLog:
    """Drive one game stream to completion."""
    stream = client.stream_game(game_id)
    game_full = next(stream)
    if game_full.get("type") != "gameFull":
        raise BotError(f"expected gameFull, got {game_full.get('type')}")
    variant_key = game_full.get("variant", {}).get("key", "standard")
    variant = _VARIANT_MAP.get(variant_key, Variant.STANDARD)
    white = game_full.get("white", {})
    black = game_full.get("black", {})
    we_are_white = white.get("id") == our_id
    opponent = black if we_are_white else white
    start = _start_position(game_full, variant)

    illegal = False
    moves_played: list = []
    state = game_full.get("state", {})

    def handle_state(game_state) -> bool:
        """Apply a state frame; returns True when the game is over."""
        nonlocal illegal, moves_played
        moves_played = game_state.get("moves", "").split()
        status = game_state.get("status", "started")
        if status not in ("started", "created"):
            return True
        pos = start
        for uci in moves_played:
            pos = kernel.apply_move(pos, Move.from_uci(uci))
        if pos.white_to_move != we_are_white:
            return False
        if kernel.game_outcome(pos).over:
            return False
        fen = codec.format_fen(pos)
        try:
            verdict = policy_move(policy, fen, variant)
            move = Move.from_uci(verdict.move)
            kernel.apply_move(pos, move)
        except (PolicyError, kernel.KernelError):
            illegal = True
            client.resign(game_id)
            return False
        client.post_move(game_id, verdict.move)
        return False

    over = handle_state(state)
    final_status = state.get("status", "started")
    winner = state.get("winner")
    if not over:
        for frame in stream:
            if frame.get("type") != "gameState":
                continue
            final_status = frame.get("status", final_status)
            winner = frame.get("winner", winner)
            if handle_state(frame):
                break

    if winner == "white":
        result = "1-0"
    elif winner == "black":
        result = "0-1"
    else:
        result = "1/2-1/2" if final_status in ("draw", "stalemate") else "*"

    log = OnlineGameLog(
        game_id=game_id,
        variant=variant_key,
        our_color="white" if we_are_white else "black",
        opponent=opponent.get("id", "?"),
        opponent_rating=opponent.get("rating"),
        opponent_is_human=opponent.get("title") != "BOT",
        moves=moves_played,
        result=result,
        illegal_policy_move=illegal,
    )
    _replay_validate(log, start)
    return log


def _replay_validate(log: OnlineGameLog, start: kernel.Position):
    pos = start
    for uci in log.moves:
        pos = kernel.apply_move(pos, Move.from_uci(uci))


def run_bot(policy: Policy, token: str, base_url: str = DEFAULT_BASE_URL,
            variants: Iterable[str] = VARIANT_WHITELIST,
            log_path: Optional[Path] = None, max_games: Optional[int] = None,
            max_reconnects: int = 5, backoff: float = 2.0) -> list:
    """Accept whitelisted challenges and play until max_games completes.

    Network drops reconnect with backoff; an invalid token is fatal.
    Returns the game logs (also appended to log_path as JSONL).
    """
    client = BotClient(token, base_url)
    our_id = client.account()["id"]
    allowed = set(variants)
    logs: list = []
    reconnects = 0
    while max_games is None or len(logs) < max_games:
        try:
            for event in client.stream_events():
                kind = event.get("type")
                if kind == "challenge":
                    challenge = event["challenge"]
                    if challenge.get("variant", {}).get("key") in allowed:
                        client.accept_challenge(challenge["id"])
                    else:
                        client.decline_challenge(challenge["id"])
                elif kind == "gameStart":
                    game_id = event["game"]["id"]
                    log = play_game(client, policy, game_id, our_id)
                    logs.append(log)
                    if log_path is not None:
                        with open(log_path, "a") as fh:
                            fh.write(json.dumps(log.to_dict(), sort_keys=True) + "\n")
                    if max_games is not None and len(logs) >= max_games:
                        return logs
            return logs  # event stream ended cleanly
        except TokenError:
            raise
        except (requests.RequestException, BotError):
            reconnects += 1
            if reconnects > max_reconnects:
                raise
            time.sleep(backoff * reconnects)
    return logs


def summarize_logs(logs: Iterable[OnlineGameLog]) -> dict:
    """Aggregate win/draw/loss rates, opponent rating, human-game share."""
    logs = list(logs)
    if not logs:
        return {"games": 0}
    wins = draws = losses = 0
    for log in logs:
        if log.result == "1/2-1/2":
            draws += 1
        elif (log.result == "1-0") == (log.our_color == "white") and log.result != "*":
            wins += 1
        elif log.result != "*":
            losses += 1
    ratings = [l.opponent_rating for l in logs if l.opponent_rating is not None]
    return {
        "games": len(logs),
        "win_rate": wins / len(logs),
        "draw_rate": draws / len(logs),
        "loss_rate": losses / len(logs),
        "mean_opponent_rating": sum(ratings) / len(ratings) if ratings else None,
        "human_game_share": sum(1 for l in logs if l.opponent_is_human) / len(logs),
    }

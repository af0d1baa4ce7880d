"""Dataset ingestion, filtering, splitting, and persistence.

Board and puzzle collections are stored as JSONL with a manifest
sidecar carrying a content hash, so every experiment can be re-run
bit-identically from its seeds. Lichess puzzle CSV is accepted only at
the ingestion boundary.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import codec, kernel, ood
from .kernel import Move, Variant

SCHEMA_VERSION = 1
PRODUCER = "oodchess-0.1.0"


class DatasetError(Exception):
    pass


@dataclass
class BoardRecord:
    fen: str
    best_move: Optional[str] = None
    flags: list = field(default_factory=list)
    origin: str = ood.ORIGIN_FROM_GAME
    split: str = ""
    variant: str = "standard"
    legal: Optional[list] = None  # optional embedded legal-move list

    def to_dict(self) -> dict:
        row = {
            "fen": self.fen,
            "flags": sorted(self.flags),
            "origin": self.origin,
            "split": self.split,
            "variant": self.variant,
        }
        if self.best_move is not None:
            row["best_move"] = self.best_move
        if self.legal is not None:
            row["legal"] = self.legal
        return row

    @classmethod
    def from_dict(cls, row: dict) -> "BoardRecord":
        return cls(
            fen=row["fen"],
            best_move=row.get("best_move"),
            flags=list(row.get("flags", [])),
            origin=row.get("origin", ood.ORIGIN_FROM_GAME),
            split=row.get("split", ""),
            variant=row.get("variant", "standard"),
            legal=row.get("legal"),
        )

    def validate(self):
        pos = codec.parse_fen(self.fen, Variant(self.variant))
        if self.best_move is not None:
            legal = {m.uci() for m in kernel.legal_moves(pos)}
            if self.best_move not in legal:
                raise DatasetError(f"best_move {self.best_move} illegal on {self.fen}")


@dataclass
class PuzzleRecord:
    puzzle_id: str
    fen: str
    moves: list
    themes: list = field(default_factory=list)
    rating: Optional[int] = None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "puzzle_id": self.puzzle_id,
            "fen": self.fen,
            "moves": self.moves,
            "themes": self.themes,
            "rating": self.rating,
            "flags": sorted(self.flags),
        }

    @classmethod
    def from_dict(cls, row: dict) -> "PuzzleRecord":
        return cls(
            puzzle_id=row["puzzle_id"], fen=row["fen"], moves=list(row["moves"]),
            themes=list(row.get("themes", [])), rating=row.get("rating"),
            flags=list(row.get("flags", [])),
        )

    def player_ply_count(self) -> int:
        """Plies the player must find (setup move excluded)."""
        return len(self.moves) // 2

    def total_ply_count(self) -> int:
        return len(self.moves)


# ---------------------------------------------------------------------------
# Lichess puzzle CSV ingestion.

LICHESS_HEADER = ["PuzzleId", "FEN", "Moves", "Rating"]


def ingest_puzzles(stream, limit: Optional[int] = None,
                   diagnostics: Optional[list] = None) -> list:
    """Parse and replay-validate Lichess puzzle CSV rows; invalid rows
    are dropped with a diagnostic."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not set(LICHESS_HEADER) <= set(reader.fieldnames):
        raise DatasetError(
            f"unexpected puzzle CSV header {reader.fieldnames}; need {LICHESS_HEADER}")
    records = []
    for row in reader:
        if limit is not None and len(records) >= limit:
            break
        puzzle_id = row["PuzzleId"]
        try:
            record = _validate_puzzle_row(row)
        except (codec.CodecError, kernel.KernelError, DatasetError, KeyError) as exc:
            if diagnostics is not None:
                diagnostics.append(f"{puzzle_id}: {exc}")
            continue
        records.append(record)
    return records


def _validate_puzzle_row(row: dict) -> PuzzleRecord:
    fen = row["FEN"]
    moves = row["Moves"].split()
    if not moves:
        raise DatasetError("empty move list")
    pos = codec.parse_fen(fen)
    flags = set(ood.classify(pos))
    for uci in moves:
        move = Move.from_uci(uci)
        pos = kernel.apply_move(pos, move)  # raises on illegal rows
        flags |= ood.classify(pos)
    rating = int(row["Rating"]) if row.get("Rating") else None
    themes = row.get("Themes", "").split() if row.get("Themes") else []
    return PuzzleRecord(puzzle_id=row["PuzzleId"], fen=fen, moves=moves,
                        themes=themes, rating=rating, flags=sorted(flags))


# ---------------------------------------------------------------------------
# Splitting and filtering.

def split_id_ood(records: Iterable, id_size: Optional[int] = None,
                 ood_size: Optional[int] = None, seed: int = 0) -> tuple:
    """OOD iff any position along the replay carries a flag; when sizes
    are given, sample without replacement under the seed."""
    id_pool, ood_pool = [], []
    for record in records:
        (ood_pool if record.flags else id_pool).append(record)
    rng = random.Random(seed)

    def take(pool, size, label):
        if size is None:
            return list(pool)
        if size > len(pool):
            raise DatasetError(f"need {size} {label} records, have {len(pool)}")
        return rng.sample(pool, size)

    return take(id_pool, id_size, "ID"), take(ood_pool, ood_size, "OOD")


def split_ood_by_flag(records: Iterable) -> tuple:
    """Partition OOD records into (more_pieces, same_color) datasets;
    boards carrying both flags go to more_pieces."""
    more, same = [], []
    for record in records:
        flags = set(record.flags)
        if ood.MORE_PIECES in flags:
            more.append(record)
        elif ood.SAME_COLOR_BISHOPS in flags:
            same.append(record)
    return more, same


def filter_training_corpus(records: Iterable) -> tuple:
    """Drop every OOD-flagged record; returns (kept, removed, stats)."""
    kept, removed = [], []
    for record in records:
        (removed if record.flags else kept).append(record)
    stats = {
        "total": len(kept) + len(removed),
        "kept": len(kept),
        "removed": len(removed),
        "removal_ratio": len(removed) / (len(kept) + len(removed)) if (kept or removed) else 0.0,
    }
    return kept, removed, stats


def solution_length_stats(puzzles: Iterable) -> dict:
    """Mean and sd of solution lengths, both counting conventions (with
    and without the opponent's setup move)."""
    player = [p.player_ply_count() for p in puzzles]
    if not player:
        return {"count": 0}
    total = [p + 1 for p in player]
    return {
        "count": len(player),
        "player_plies_mean": float(np.mean(player)),
        "player_plies_sd": float(np.std(player)),
        "total_plies_mean": float(np.mean(total)),
        "total_plies_sd": float(np.std(total)),
    }


# ---------------------------------------------------------------------------
# JSONL persistence with manifest.

def _content_hash(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _flags_histogram(rows: list) -> dict:
    histogram: dict = {}
    for row in rows:
        key = ",".join(sorted(row.get("flags", []))) or "none"
        histogram[key] = histogram.get(key, 0) + 1
    return histogram


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def persist(records: Iterable, path, name: str, seed: Optional[int] = None) -> dict:
    """Write records (BoardRecord/PuzzleRecord/dicts) as JSONL plus a
    manifest sidecar with the content hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in records]
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    manifest = {
        "name": name,
        "schema_version": SCHEMA_VERSION,
        "producer": PRODUCER,
        "count": len(rows),
        "seed": seed,
        "flags_histogram": _flags_histogram(rows),
        "sha256": _content_hash(path),
    }
    with open(manifest_path(path), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def load(path, expect_kind: str = "board", validate: bool = False) -> list:
    """Load a JSONL dataset, verifying its manifest when present."""
    path = Path(path)
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    mpath = manifest_path(path)
    if mpath.exists():
        manifest = json.loads(mpath.read_text())
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise DatasetError(f"schema version {manifest.get('schema_version')} != {SCHEMA_VERSION}")
        if manifest.get("count") != len(rows):
            raise DatasetError(f"manifest count {manifest.get('count')} != {len(rows)} rows")
        if manifest.get("sha256") != _content_hash(path):
            raise DatasetError("dataset content hash mismatch")
    if expect_kind == "puzzle":
        records = [PuzzleRecord.from_dict(r) for r in rows]
    else:
        records = [BoardRecord.from_dict(r) for r in rows]
        if validate:
            for record in records:
                record.validate()
    return records


# ---------------------------------------------------------------------------
# Desk-scale corpus generation: random playouts annotated by a policy.

def generate_playout_corpus(seed: int, count: int, annotator=None,
                            max_plies: int = 120, with_legal: bool = False,
                            variant: Variant = Variant.STANDARD) -> list:
    """(fen, best_move) rows from random playouts; the annotator policy
    labels each board (random-legal when omitted). Rows keep their OOD
    flags so downstream filtering stays observable."""
    rng = random.Random(seed)
    label_rng = random.Random(seed ^ 0x5EED)  # random-legal annotation stream
    records: list = []
    while len(records) < count:
        pos = kernel.Position.initial(variant)
        for _ in range(max_plies):
            if len(records) >= count:
                break
            moves = kernel.legal_moves(pos)
            if not moves or kernel.game_outcome(pos).over:
                break
            fen = codec.format_fen(pos)
            if annotator is None:
                label = label_rng.choice(sorted(m.uci() for m in moves))
            else:
                label = annotator.move(fen, variant).move
            record = BoardRecord(
                fen=fen, best_move=label, flags=sorted(ood.classify(pos)),
                origin=ood.ORIGIN_FROM_GAME, split="train", variant=variant.value,
                legal=sorted(m.uci() for m in moves) if with_legal else None,
            )
            records.append(record)
            pos = kernel.apply_move(pos, rng.choice(moves))
    return records

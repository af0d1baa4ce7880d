"""Command-line entry point.

Subcommands: gen {chess960 | all-starts | knights-rooks | playouts},
ingest, split, eval {legal | topk | puzzles | openings}, tournament,
rate, probe {heatmap | legal-mass | dynamics}.

Every run writes its artifacts plus a run manifest (arguments, versions,
artifact hashes) into the output directory, so a persisted invocation
re-executes identically. Exit codes: 0 ok, 2 usage, 3 config, 4 engine
failure, 5 data validation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__, arena, codec, datahub, elo, engine, kernel, metrics, ood
from . import plotting, policy as policy_mod, probes
from .kernel import Variant

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_ENGINE = 4
EXIT_DATA = 5

ENGINE_ENV = "OODCHESS_ENGINE"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _engine_command(args) -> str:
    cmd = getattr(args, "engine", None) or os.environ.get(ENGINE_ENV)
    if not cmd:
        raise CliError(
            f"no engine configured; pass --engine or set ${ENGINE_ENV}", EXIT_ENGINE)
    return cmd


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy(args, attr: str = "policy"):
    spec = getattr(args, attr)
    limit = engine.SearchLimit(depth=args.depth) if getattr(args, "depth", None) \
        else engine.SearchLimit(movetime_ms=getattr(args, "movetime", None) or 50)
    try:
        return policy_mod.policy_from_spec(spec, engine_limit=limit)
    except engine.EngineError as exc:
        raise CliError(str(exc), EXIT_ENGINE)
    except policy_mod.PolicyError as exc:
        raise CliError(str(exc), EXIT_CONFIG)


def _load_boards(path):
    try:
        records = datahub.load(path)
    except (OSError, json.JSONDecodeError, datahub.DatasetError) as exc:
        raise CliError(f"cannot load dataset {path}: {exc}", EXIT_DATA)
    return [metrics.EvalBoard(fen=r.fen, variant=Variant(r.variant)) for r in records]


def _write_json(out: Path, name: str, payload) -> Path:
    path = out / name
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_table(out: Path, dataset_path, **values):
    row = {"dataset": Path(dataset_path).stem, **values}
    (out / "accuracy_table.txt").write_text(
        metrics.render_accuracy_table([row]) + "\n")


def _write_manifest(out: Path, args):
    artifacts = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "run_manifest.json":
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            artifacts[str(path.relative_to(out))] = digest
    manifest = {
        "command": " ".join(sys.argv[1:]),
        "arguments": {k: v for k, v in vars(args).items() if k != "func" and v is not None},
        "version": __version__,
        "python": sys.version.split()[0],
        "artifacts": artifacts,
    }
    _write_json(out, "run_manifest.json", manifest)


# ---------------------------------------------------------------------------
# gen

def cmd_gen(args) -> int:
    out = _out_dir(args)
    records = []
    if args.what == "chess960":
        for pos in ood.gen_chess960(seed=args.seed,
                                  include_classical=not args.exclude_classical):
            records.append(_board_record(pos, ood.ORIGIN_CHESS960, args.with_legal))
        name = "chess960_starts"
    elif args.what == "all-starts":
        for pos in ood.gen_all_starting(args.seed, args.count):
            records.append(_board_record(pos, ood.ORIGIN_NONSTANDARD, args.with_legal))
        name = "all_starting_positions"
    elif args.what == "knights-rooks":
        for pos in ood.gen_knights_rooks(args.seed, args.count):
            records.append(_board_record(pos, ood.ORIGIN_KNIGHTS_ROOKS, args.with_legal))
        name = "knights_rooks"
    else:  # playouts
        annotator = _policy(args, "annotator") if args.annotator else None
        rows = datahub.generate_playout_corpus(
            seed=args.seed, count=args.count, annotator=annotator,
            with_legal=args.with_legal)
        kept, removed, stats = datahub.filter_training_corpus(rows)
        if args.filter_ood:
            # top up deterministically until the filtered count is met
            top_up_seed = args.seed
            while len(kept) < args.count:
                top_up_seed += 1_000_003
                extra = datahub.generate_playout_corpus(
                    seed=top_up_seed, count=args.count - len(kept),
                    annotator=annotator, with_legal=args.with_legal)
                more_kept, more_removed, _ = datahub.filter_training_corpus(extra)
                kept.extend(more_kept)
                removed.extend(more_removed)
            records = kept[:args.count]
        else:
            records = rows
        total = len(kept) + len(removed)
        print(f"playouts: {total} boards, {len(removed)} OOD removed "
              f"({len(removed) / total:.2%})")
        name = "playout_corpus"
    path = out / f"{name}.jsonl"
    manifest = datahub.persist(records, path, name=name, seed=args.seed)
    print(f"wrote {manifest['count']} rows to {path}")
    _write_manifest(out, args)
    return EXIT_OK


def _board_record(pos, origin: str, with_legal: bool) -> datahub.BoardRecord:
    legal = sorted(m.uci() for m in kernel.legal_moves(pos)) if with_legal else None
    return datahub.BoardRecord(
        fen=codec.format_fen(pos), flags=sorted(ood.classify(pos)), origin=origin,
        variant=pos.variant.value, legal=legal)


# ---------------------------------------------------------------------------
# ingest / split

def cmd_ingest(args) -> int:
    out = _out_dir(args)
    diagnostics: list = []
    try:
        with open(args.puzzles, newline="") as fh:
            records = datahub.ingest_puzzles(fh, limit=args.limit, diagnostics=diagnostics)
    except (OSError, datahub.DatasetError) as exc:
        raise CliError(str(exc), EXIT_DATA)
    path = out / "puzzles.jsonl"
    manifest = datahub.persist(records, path, name="lichess_puzzles", seed=None)
    stats = datahub.solution_length_stats(records)
    _write_json(out, "ingest_stats.json", {"dropped": diagnostics, "lengths": stats})
    print(f"ingested {manifest['count']} puzzles ({len(diagnostics)} dropped) to {path}")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_split(args) -> int:
    out = _out_dir(args)
    records = datahub.load(args.dataset, expect_kind=args.kind)
    try:
        id_set, ood_set = datahub.split_id_ood(
            records, id_size=args.id_size, ood_size=args.ood_size, seed=args.seed)
    except datahub.DatasetError as exc:
        raise CliError(str(exc), EXIT_DATA)
    for label, rows in (("id", id_set), ("ood", ood_set)):
        path = out / f"{label}.jsonl"
        datahub.persist(rows, path, name=f"{Path(args.dataset).stem}_{label}", seed=args.seed)
        print(f"{label}: {len(rows)} rows -> {path}")
    if args.kind == "puzzle":
        _write_json(out, "length_stats.json", {
            "id": datahub.solution_length_stats(id_set),
            "ood": datahub.solution_length_stats(ood_set),
        })
    _write_manifest(out, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval

def cmd_eval_legal(args) -> int:
    out = _out_dir(args)
    boards = _load_boards(args.dataset)
    pol = _policy(args)
    try:
        report = metrics.legal_accuracy(pol, boards, keep_details=args.details)
    finally:
        pol.close()
    _write_json(out, "legal_report.json", report.to_dict())
    _write_table(out, args.dataset, legal=report.accuracy)
    if args.details:
        _write_json(out, "legal_details.json", report.per_board)
    counts = {c: report.illegal_causes.get(c, 0) for c in metrics.ALL_CAUSES}
    plotting.save_histogram(
        {"legal": report.legal, **{k: v for k, v in counts.items() if v}},
        out / "legal_causes.png", title="move legality")
    print(f"legal accuracy: {report.accuracy:.4f} ({report.legal}/{report.total})")
    for cause, count in counts.items():
        if count:
            print(f"  {cause}: {count}")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_eval_topk(args) -> int:
    out = _out_dir(args)
    boards = _load_boards(args.dataset)
    ks = [int(k) for k in args.ks.split(",")]
    pol = _policy(args)
    handle = None
    try:
        handle = engine.spawn(_engine_command(args))
        oracle = metrics.EngineOracle(handle, engine.SearchLimit(depth=args.oracle_depth))
        report = metrics.topk_accuracy(pol, boards, ks, oracle)
    except engine.EngineError as exc:
        raise CliError(str(exc), EXIT_ENGINE)
    finally:
        pol.close()
        if handle is not None:
            handle.quit()
    _write_json(out, "topk_report.json", report.to_dict())
    _write_table(out, args.dataset, topk=report.entries)
    plotting.save_topk_bars(report.entries, out / "topk_accuracy.png", title="oracle top-k")
    for entry in report.entries:
        print(f"top{entry['k']}: {entry['accuracy']:.4f} "
              f"({entry['matched']}/{entry['eligible']} eligible)")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_eval_puzzles(args) -> int:
    out = _out_dir(args)
    records = datahub.load(args.puzzles, expect_kind="puzzle")
    cases = [metrics.PuzzleCase(puzzle_id=r.puzzle_id, fen=r.fen, moves=r.moves)
             for r in records]
    pol = _policy(args)
    try:
        report = metrics.puzzle_sequence_accuracy(pol, cases)
    finally:
        pol.close()
    payload = report.to_dict()
    payload["verdicts"] = [vars(v) for v in report.verdicts]
    _write_json(out, "puzzle_report.json", payload)
    _write_table(out, args.puzzles, puzzle=report.accuracy)
    print(f"puzzle sequence accuracy: {report.accuracy:.4f} ({report.solved}/{report.total})")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_eval_openings(args) -> int:
    out = _out_dir(args)
    boards = _load_boards(args.dataset)
    pol = _policy(args)
    try:
        histogram = metrics.opening_move_histogram(pol, boards)
    finally:
        pol.close()
    _write_json(out, "opening_histogram.json", histogram)
    plotting.save_histogram(histogram, out / "opening_histogram.png", title="first moves")
    plotting.write_csv(out / "opening_histogram.csv", ["move", "count"],
                       sorted(histogram.items(), key=lambda kv: (-kv[1], kv[0])))
    total = sum(histogram.values())
    print(f"histogram over {total} boards, {len(histogram)} buckets")
    for move, count in list(histogram.items())[:8]:
        print(f"  {move}: {count}")
    _write_manifest(out, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# tournament / rate

def _player_from_config(cfg: dict, stub_default_ms: int = 50) -> arena.PlayerSpec:
    name = cfg["name"]
    if "engine" in cfg:
        limit = (engine.SearchLimit(depth=cfg["depth"]) if "depth" in cfg
                 else engine.SearchLimit(movetime_ms=cfg.get("movetime_ms", stub_default_ms)))
        options = dict(cfg.get("options", {}))
        if "skill" in cfg:
            options["Skill Level"] = cfg["skill"]
        return arena.PlayerSpec(name=name, engine_cmd=cfg["engine"],
                                engine_options=options, limit=limit)
    if "policy" in cfg:
        return arena.PlayerSpec(name=name, policy_spec=cfg["policy"])
    raise CliError(f"player {name!r} needs an 'engine' or 'policy' key", EXIT_CONFIG)


def cmd_tournament(args) -> int:
    out = _out_dir(args)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"bad config {args.config}: {exc}", EXIT_CONFIG)
    try:
        variant = Variant(config.get("variant", "standard"))
        players = [_player_from_config(p) for p in config["players"]]
        openings = None
        if "opening_book" in config:
            openings = arena.load_opening_book(config["opening_book"])
        if config.get("chess960_prep"):
            prep = config["chess960_prep"]
            openings = arena.prepare_chess960_openings(
                prep.get("engine") or _engine_command(args),
                count=prep.get("count", 16), seed=config.get("seed", 0),
                prep_plies=prep.get("plies", 20),
                limit=engine.SearchLimit(depth=prep.get("depth", 20)))
        plan = arena.TournamentPlan(
            variant=variant, players=players,
            games_per_pair=config["games_per_pair"], openings=openings,
            seed=config.get("seed", 0), max_plies=config.get("max_plies", 400),
        )
    except (KeyError, ValueError, arena.ArenaError) as exc:
        raise CliError(f"invalid tournament config: {exc}", EXIT_CONFIG)
    try:
        results, table = arena.run_tournament(
            plan, out_dir=out, workers=args.workers,
            progress=print if args.verbose else None)
    except (engine.EngineError, arena.ArenaError) as exc:
        raise CliError(str(exc), EXIT_ENGINE)
    rating = elo.estimate([{"white": r.white, "black": r.black, "result": r.result}
                           for r in results])
    _write_json(out, "ratings.json", rating.to_dict())
    (out / "ratings.txt").write_text(rating.render() + "\n")
    print(rating.render())
    scores = {name: row["score"] for name, row in table.items()}
    consistent, report = elo.rank_consistency(rating, scores)
    _write_json(out, "rank_consistency.json", report)
    print(f"rank consistency with scores: {consistent}")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_rate(args) -> int:
    out = _out_dir(args)
    games = []
    try:
        with open(args.results) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    games.append(json.loads(line))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read results {args.results}: {exc}", EXIT_DATA)
    try:
        rating = elo.estimate(games, confidence=args.confidence)
    except elo.RatingError as exc:
        raise CliError(str(exc), EXIT_DATA)
    _write_json(out, "ratings.json", rating.to_dict())
    (out / "ratings.txt").write_text(rating.render() + "\n")
    print(rating.render())
    _write_manifest(out, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# probe

def cmd_probe_heatmap(args) -> int:
    out = _out_dir(args)
    pol = _policy(args)
    try:
        pos = codec.parse_fen(args.fen, Variant(args.variant))
        dist = policy_mod.policy_distribution(pol, args.fen, Variant(args.variant))
    except policy_mod.PolicyError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    finally:
        pol.close()
    grid = probes.origin_heatmap(dist, pos)
    plotting.write_csv(out / "heatmap.csv", ["rank\\file"] + list("abcdefgh"),
                       [[str(r + 1)] + [f"{v:.6g}" for v in grid.values[r]]
                        for r in range(7, -1, -1)])
    plotting.save_heatmap(grid.values, out / "heatmap.png", title=args.fen.split()[0])
    print(f"heatmap written; peak square mass at "
          f"{kernel.square_name(int(grid.flat().argmax()))}")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_probe_legal_mass(args) -> int:
    out = _out_dir(args)
    boards = _load_boards(args.dataset)
    pol = _policy(args)
    rows = []
    try:
        for board in boards:
            pos = codec.parse_fen(board.fen, board.variant)
            dist = policy_mod.policy_distribution(pol, board.fen, board.variant)
            rows.append([board.fen, f"{probes.legal_mass(dist, pos):.8f}"])
    except policy_mod.PolicyError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    finally:
        pol.close()
    plotting.write_csv(out / "legal_mass.csv", ["fen", "legal_mass"], rows)
    mean = sum(float(r[1]) for r in rows) / len(rows) if rows else 0.0
    _write_json(out, "legal_mass.json", {"boards": len(rows), "mean": mean})
    print(f"mean legal mass over {len(rows)} boards: {mean:.6f}")
    _write_manifest(out, args)
    return EXIT_OK


def cmd_probe_dynamics(args) -> int:
    out = _out_dir(args)
    checkpoints = []
    for item in args.checkpoint:
        try:
            step_text, spec = item.split(":", 1)
            step = int(step_text)
        except ValueError:
            raise CliError(f"bad --checkpoint {item!r}; want STEP:POLICYSPEC", EXIT_USAGE)
        checkpoints.append((f"ck{step}", step, policy_mod.policy_from_spec(spec)))
    datasets = {}
    for item in args.dataset:
        name, _, path = item.partition(":")
        if not path:
            raise CliError(f"bad --dataset {item!r}; want NAME:PATH", EXIT_USAGE)
        datasets[name] = _load_boards(path)
    try:
        series = probes.dynamics_series(checkpoints, datasets)
    except probes.ProbeError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    finally:
        for _, _, pol in checkpoints:
            pol.close()
    plotting.write_csv(out / "dynamics.csv",
                       ["checkpoint", "step", "dataset", "legal_accuracy", "legal_mass"],
                       series.to_rows())
    plot_series = {}
    for name in datasets:
        plot_series[f"{name} legal"] = series.series("legal_next_move_rate", name)
        if all(name in p.legal_probability_mass for p in series.points):
            plot_series[f"{name} mass"] = series.series("legal_probability_mass", name)
    plotting.save_series(plot_series, out / "dynamics.png", ylabel="rate",
                         title="legality during training")
    print(f"dynamics over {len(checkpoints)} checkpoints x {len(datasets)} datasets written")
    _write_manifest(out, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodchess", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"oodchess {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_default="out"):
        p.add_argument("-o", "--out", default=out_default, help="output directory")

    def add_policy(p):
        p.add_argument("--policy", required=True,
                       help="random-legal[:seed] | uniform[:seed] | engine:<cmd> | "
                            "tcp:host:port | exec:<cmd>")
        p.add_argument("--depth", type=int, help="engine policy depth limit")
        p.add_argument("--movetime", type=int, help="engine policy movetime ms")

    gen = sub.add_parser("gen", help="generate OOD board datasets")
    gen.add_argument("what", choices=["chess960", "all-starts", "knights-rooks", "playouts"])
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1000)
    gen.add_argument("--exclude-classical", action="store_true",
                     help="drop the classical arrangement (959 boards)")
    gen.add_argument("--with-legal", action="store_true",
                     help="embed the legal move list in each row")
    gen.add_argument("--annotator", help="policy spec labeling playout boards")
    gen.add_argument("--filter-ood", action="store_true",
                     help="drop OOD-flagged playout rows (training corpus contract)")
    gen.add_argument("--depth", type=int)
    gen.add_argument("--movetime", type=int)
    add_common(gen)
    gen.set_defaults(func=cmd_gen)

    ingest = sub.add_parser("ingest", help="ingest a Lichess puzzle CSV")
    ingest.add_argument("--puzzles", required=True, help="puzzle CSV path")
    ingest.add_argument("--limit", type=int)
    add_common(ingest)
    ingest.set_defaults(func=cmd_ingest)

    split = sub.add_parser("split", help="split a dataset into ID and OOD")
    split.add_argument("--dataset", required=True)
    split.add_argument("--kind", choices=["board", "puzzle"], default="puzzle")
    split.add_argument("--id-size", type=int)
    split.add_argument("--ood-size", type=int)
    split.add_argument("--seed", type=int, default=0)
    add_common(split)
    split.set_defaults(func=cmd_split)

    ev = sub.add_parser("eval", help="run a policy metric")
    ev_sub = ev.add_subparsers(dest="metric", required=True)

    legal = ev_sub.add_parser("legal", help="legal move accuracy")
    legal.add_argument("--dataset", required=True)
    legal.add_argument("--details", action="store_true")
    add_policy(legal)
    add_common(legal)
    legal.set_defaults(func=cmd_eval_legal)

    topk = ev_sub.add_parser("topk", help="oracle top-k accuracy")
    topk.add_argument("--dataset", required=True)
    topk.add_argument("--engine", help=f"oracle engine command (default ${ENGINE_ENV})")
    topk.add_argument("--oracle-depth", type=int, default=20)
    topk.add_argument("--ks", default="1,3,5,10")
    add_policy(topk)
    add_common(topk)
    topk.set_defaults(func=cmd_eval_topk)

    puzzles = ev_sub.add_parser("puzzles", help="puzzle sequence accuracy")
    puzzles.add_argument("--puzzles", required=True, help="puzzle JSONL path")
    add_policy(puzzles)
    add_common(puzzles)
    puzzles.set_defaults(func=cmd_eval_puzzles)

    openings = ev_sub.add_parser("openings", help="opening move histogram")
    openings.add_argument("--dataset", required=True)
    add_policy(openings)
    add_common(openings)
    openings.set_defaults(func=cmd_eval_openings)

    tournament = sub.add_parser("tournament", help="round-robin tournament")
    tournament.add_argument("--config", required=True, help="JSON tournament config")
    tournament.add_argument("--engine", help="fallback engine for chess960 prep")
    tournament.add_argument("--workers", type=int, default=1)
    tournament.add_argument("--verbose", action="store_true")
    add_common(tournament)
    tournament.set_defaults(func=cmd_tournament)

    rate = sub.add_parser("rate", help="fit relative Elo from results JSONL")
    rate.add_argument("--results", required=True)
    rate.add_argument("--confidence", type=float, default=0.5)
    add_common(rate)
    rate.set_defaults(func=cmd_rate)

    probe = sub.add_parser("probe", help="distribution probes")
    probe_sub = probe.add_subparsers(dest="probe_kind", required=True)

    heatmap = probe_sub.add_parser("heatmap", help="origin-square heatmap")
    heatmap.add_argument("--fen", required=True)
    heatmap.add_argument("--variant", default="standard")
    add_policy(heatmap)
    add_common(heatmap)
    heatmap.set_defaults(func=cmd_probe_heatmap)

    lm = probe_sub.add_parser("legal-mass", help="legal probability mass")
    lm.add_argument("--dataset", required=True)
    add_policy(lm)
    add_common(lm)
    lm.set_defaults(func=cmd_probe_legal_mass)

    dynamics = probe_sub.add_parser("dynamics", help="legality across checkpoints")
    dynamics.add_argument("--checkpoint", action="append", required=True,
                          help="STEP:POLICYSPEC (repeatable)")
    dynamics.add_argument("--dataset", action="append", required=True,
                          help="NAME:PATH (repeatable)")
    add_common(dynamics)
    dynamics.set_defaults(func=cmd_probe_dynamics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (codec.CodecError, datahub.DatasetError, ood.GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except engine.EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())

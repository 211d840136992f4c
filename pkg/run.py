#!/usr/bin/env python3
"""
Behavioural Cloning Toolkit - Main Entry Point
Replay ingestion, statistics, sequence sampling, surrogate training and
behaviour analysis.

Usage:
    python run.py ingest replays/*.farp --store DIR [--trim-start [N]]
    python run.py stats --store DIR [--rank win_rate|kd_ratio|mean_kills]
    python run.py sample r.farp -t 30 [-N 15] [--lambda 1.22] [-L 2]
    python run.py train-demo [--steps 500] [--mse-plain]
    python run.py analyze r.farp --heatmap out.csv --order 1 --hist out.csv
    python run.py compare a.farp b.farp --order 1
    python run.py report --store DIR --out DIR
    python run.py generate out.farp [--frames 2000] [--profile human_like]
    python run.py evaluate results.jsonl... [--metric damage]
"""

import os
import sys
import argparse
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from typing import List, Optional

import numpy as np
from dateutil import parser as date_parser

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.bc_config import (
    CAMERA_PROFILES, DEFAULT_SEED, START_UP_TRIM_FRAMES, STORE_ENV_VAR, TARGET_METHODS, default_store_dir,
    load_config,
)
from algorithms.analysis import (
    camera_series, describe_distributions, fit_gaussian, fit_grid, histogram,
    occupancy_heatmap, pairwise_distances, replay_positions, wasserstein1,
    EmpiricalDistribution,
)
from algorithms.eval_harness import (
    aggregate, load_game_results, rank_summaries, summaries_to_frame
)
from algorithms.policy import run_demo, save_checkpoint
from algorithms.sampler import build_sequence, iter_sequences
from modules.exporters import (
    load_map_outline, sequence_json_line, write_heatmap_csv, write_heatmap_svg,
    write_histogram_csv, write_summary_xlsx, write_table_csv,
)
from modules.match_store import RANK_METRICS, MatchStore, ingest_replays
from modules.replay_codec import read_replay, trim_start, write_replay
from modules.synthetic import synth_replay

logger = logging.getLogger("bckit")


# ============================================================
# ARGUMENT PARSING
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run.py",
        description="Behavioural cloning data pipeline and behaviour analysis toolkit",
    )
    parser.add_argument("--config", help="JSON file overriding sampler/loss/analysis/policy/demo defaults")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    parser.add_argument("--debug", action="store_true", help="verbose logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="decode replays into a match store")
    p.add_argument("replays", nargs="+")
    p.add_argument("--store", default=default_store_dir(), help=f"store directory (default ${STORE_ENV_VAR})")
    p.add_argument("--trim-start", type=int, nargs="?", const=START_UP_TRIM_FRAMES, default=0,
                   help=f"frames dropped at match start-up (bare flag: {START_UP_TRIM_FRAMES})")
    p.add_argument("--workers", type=int, default=1, help="decode replays in N processes")
    p.add_argument("--map", dest="map_name", default="unknown")
    p.add_argument("--config-name", default="deathmatch")
    p.add_argument("--played-at", help="ISO-8601 timestamp for the ingested matches (default now)")

    p = sub.add_parser("stats", help="ranked per-player statistics as CSV")
    p.add_argument("--store", default=default_store_dir())
    p.add_argument("--rank", choices=RANK_METRICS, default="win_rate")

    p = sub.add_parser("sample", help="dump training sequences as JSON lines")
    p.add_argument("replay")
    p.add_argument("-t", type=int, dest="t", help="anchor frame index")
    p.add_argument("-N", type=int, dest="sequence_length")
    p.add_argument("--lambda", type=float, dest="skip_exponent")
    p.add_argument("-L", type=int, dest="target_range")
    p.add_argument("--method", choices=TARGET_METHODS, dest="target_method")
    p.add_argument("--all", action="store_true", help="every valid anchor")
    p.add_argument("--stride", type=int, default=1)

    p = sub.add_parser("train-demo", help="train the surrogate policy on the synthetic task")
    p.add_argument("--steps", type=int)
    p.add_argument("--mse-plain", action="store_true", help="disable the sign mask")
    p.add_argument("--checkpoint", help="write the trained policy here")

    p = sub.add_parser("analyze", help="heatmap and camera-movement histogram of one replay")
    p.add_argument("replay")
    p.add_argument("--heatmap", help="heatmap CSV output")
    p.add_argument("--svg", help="heatmap SVG output")
    p.add_argument("--outline", help="map outline file for the SVG overlay")
    p.add_argument("--order", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--axis", choices=("mouse_x", "mouse_y"))
    p.add_argument("--hist", help="histogram CSV output")
    p.add_argument("--bins", type=int)
    p.add_argument("--cell-size", type=float)

    p = sub.add_parser("compare", help="Wasserstein-1 distance between two replays' camera movement")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--order", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--axis", choices=("mouse_x", "mouse_y"))

    p = sub.add_parser("report", help="CSV tables, SVG heatmaps and pairwise distances for a store")
    p.add_argument("--store", default=default_store_dir())
    p.add_argument("--out", required=True)
    p.add_argument("--replay-dir", help="where replay files live (default: the store directory)")
    p.add_argument("--outline")

    p = sub.add_parser("generate", help="write a synthetic replay")
    p.add_argument("out")
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--profile", choices=CAMERA_PROFILES, default="human_like")
    p.add_argument("--player", default="SyntheticPlayer")
    p.add_argument("--match", default="synthetic-0001")
    p.add_argument("--start-tick", type=int, default=0)

    p = sub.add_parser("evaluate", help="aggregate game results, one summary per file")
    p.add_argument("results", nargs="+")
    p.add_argument("--metric", choices=("damage", "kills"), default="damage")
    p.add_argument("--out", help="summary CSV output")

    return parser


def _require_store(args) -> str:
    if not args.store:
        raise ValueError(f"no store directory: pass --store or set {STORE_ENV_VAR}")
    return args.store


# ============================================================
# SUBCOMMANDS
# ============================================================

def cmd_ingest(args, configs, rng) -> int:
    store = MatchStore(_require_store(args))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            replays = list(pool.map(read_replay, args.replays))
    else:
        replays = [read_replay(path) for path in args.replays]
    if args.trim_start:
        replays = [trim_start(r, args.trim_start) for r in replays]

    played_at = date_parser.isoparse(args.played_at) if args.played_at else datetime.now(timezone.utc)
    n_matches, n_results = ingest_replays(
        store, replays, args.replays,
        config_name=args.config_name, map_name=args.map_name, played_at=played_at,
    )
    print(json.dumps({'matches': n_matches, 'results': n_results}, sort_keys=True))
    return 0


def cmd_stats(args, configs, rng) -> int:
    store = MatchStore(_require_store(args))
    frame = store.ranked_frame(args.rank)
    sys.stdout.write(frame.to_csv(index=False, lineterminator='\n'))
    return 0


def cmd_sample(args, configs, rng) -> int:
    cfg = configs['sampler']
    overrides = {k: getattr(args, k) for k in ('sequence_length', 'skip_exponent', 'target_range', 'target_method')
                 if getattr(args, k) is not None}
    cfg = replace(cfg, **overrides)

    replay = read_replay(args.replay)
    if args.all:
        samples = iter_sequences(replay, cfg, stride=args.stride, rng=rng)
    elif args.t is not None:
        samples = [build_sequence(replay, args.t, cfg, rng)]
    else:
        raise ValueError("sample needs -t IDX or --all")
    for sample in samples:
        print(sequence_json_line(sample))
    return 0


def cmd_train_demo(args, configs, rng) -> int:
    result = run_demo(configs['demo'], configs['loss'], seed=rng, steps=args.steps, plain_mse=args.mse_plain)
    if args.checkpoint:
        save_checkpoint(result.policy, args.checkpoint)
    print(json.dumps({
        'seed': args.seed,
        'steps': len(result.losses),
        'plain_mse': result.plain_mse,
        'initial_loss': result.initial_loss,
        'final_loss': result.final_loss,
        'loss_ratio': result.final_loss / result.initial_loss,
        'sign_agreement': result.sign_agreement,
        'loss_curve': result.losses,
    }, indent=2))
    return 0


def cmd_analyze(args, configs, rng) -> int:
    cfg = configs['analysis']
    replay = read_replay(args.replay)
    dist = camera_series(replay, args.order, args.axis or cfg.camera_axis)
    positions = replay_positions(replay)
    cell_size = args.cell_size or cfg.cell_size
    origin, width, height = fit_grid(positions, cell_size)
    grid = occupancy_heatmap(positions, origin, cell_size, width, height, cfg.mask_threshold)

    if args.heatmap:
        write_heatmap_csv(grid, args.heatmap)
    if args.svg:
        outline = load_map_outline(args.outline) if args.outline else None
        write_heatmap_svg(grid, args.svg, outline)
    if args.hist:
        hist_range = cfg.hist_range if args.order == 1 else None
        write_histogram_csv(histogram(dist, args.bins or cfg.hist_bins, hist_range), args.hist)

    fit = fit_gaussian(dist) if len(dist) >= 2 else None
    print(json.dumps({
        'frames': len(replay),
        'order': args.order,
        'samples': len(dist),
        'mean': fit.mean if fit else float(dist.samples[0]),
        'std': fit.std if fit else 0.0,
        'grid': [width, height],
        'in_bounds': grid.total,
    }, sort_keys=True))
    return 0


def cmd_compare(args, configs, rng) -> int:
    axis = args.axis or configs['analysis'].camera_axis
    a = camera_series(read_replay(args.a), args.order, axis)
    b = camera_series(read_replay(args.b), args.order, axis)
    print(repr(wasserstein1(a, b)))
    return 0


def cmd_report(args, configs, rng) -> int:
    cfg = configs['analysis']
    store_dir = _require_store(args)
    store = MatchStore(store_dir)
    replay_dir = args.replay_dir or store_dir
    os.makedirs(args.out, exist_ok=True)
    outline = load_map_outline(args.outline) if args.outline else None
    written = []

    def out(name: str) -> str:
        path = os.path.join(args.out, name)
        written.append(path)
        return path

    players = store.ranked_frame("win_rate")
    matches = store.match_frame()
    write_table_csv(players, out("players.csv"))
    write_table_csv(matches, out("matches.csv"))

    per_player = {}
    for match in store.matches.values():
        for name in match.replay_file.split(";"):
            path = os.path.join(replay_dir, name)
            if not os.path.exists(path):
                logger.warning(f"Replay {path} for match {match.match_id} not found, skipped")
                continue
            replay = read_replay(path)
            positions = replay_positions(replay)
            origin, width, height = fit_grid(positions, cfg.cell_size)
            grid = occupancy_heatmap(positions, origin, cfg.cell_size, width, height, cfg.mask_threshold)
            stem = f"heatmap_{replay.player_id}_{replay.match_id}"
            write_heatmap_csv(grid, out(f"{stem}.csv"))
            write_heatmap_svg(grid, out(f"{stem}.svg"), outline)
            per_player.setdefault(replay.player_id, []).append(replay)

    pairwise = {}
    for order in (1, 2, 3):
        named = {}
        for player_id in sorted(per_player):
            series = [camera_series(r, order, cfg.camera_axis).samples
                      for r in per_player[player_id] if len(r) >= order]
            if series:
                named[player_id] = EmpiricalDistribution(np.concatenate(series), order)
        if len(named) >= 2:
            pairwise[order] = pairwise_distances(named)
            write_table_csv(pairwise[order], out(f"pairwise_w1_order{order}.csv"))
        if named:
            write_table_csv(describe_distributions(named), out(f"camera_order{order}.csv"))

    sheets = {'players': players, 'matches': matches}
    sheets.update({f"w1_order{k}": frame for k, frame in pairwise.items()})
    xlsx = write_summary_xlsx(sheets, os.path.join(args.out, "summary.xlsx"))
    if xlsx:
        written.append(xlsx)

    for path in written:
        print(path)
    return 0


def cmd_generate(args, configs, rng) -> int:
    replay = synth_replay(args.player, args.match, args.frames, args.profile, rng, start_tick=args.start_tick)
    write_replay(replay, args.out)
    print(json.dumps({'path': args.out, 'frames': len(replay), 'profile': args.profile}, sort_keys=True))
    return 0


def cmd_evaluate(args, configs, rng) -> int:
    named = {}
    for path in args.results:
        name = os.path.splitext(os.path.basename(path))[0]
        named[name] = aggregate(load_game_results(path))
    frame = summaries_to_frame(rank_summaries(named, args.metric))
    if args.out:
        write_table_csv(frame, args.out)
    sys.stdout.write(frame.to_csv(index=False, lineterminator='\n'))
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "sample": cmd_sample,
    "train-demo": cmd_train_demo,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "report": cmd_report,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )

    try:
        configs = load_config(args.config)
        rng = np.random.default_rng(args.seed)
        return COMMANDS[args.command](args, configs, rng)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()

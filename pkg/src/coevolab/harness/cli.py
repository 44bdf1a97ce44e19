"""Command-line interface.

    coevolab evolve MANIFEST          run an experiment
    coevolab resume CHECKPOINT        continue an interrupted run
    coevolab tournament RUN_A [RUN_B] master tournament / cross-experiment grid
    coevolab progress RUN...          historical and global progress tables
    coevolab complexity RUN           behaviour complexity per generation, with Pearson r
    coevolab replay ARCHIVE PRED PREY one episode with trajectory CSV
    coevolab defaults                 print a manifest with every default filled in
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..arena.config import PREDATOR, PREY
from ..errors import CheckpointError, ConfigurationError, UndefinedInputError
from ..progress.measures import (global_progress, historical_progress, master_tournament,
                                 population_complexity)
from ..progress.stats import pearson_correlation
from .csvio import export_grid_csv, write_rows
from .manifest import ExperimentManifest, load_manifest
from .rundir import compatible, evaluator_from_env, read_archive, resume_run, run_archives, start_run

log = logging.getLogger("coevolab")


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_evolve(args):
    manifest = load_manifest(args.manifest)
    out = args.out or manifest.output_dir
    if out is None:
        raise ConfigurationError("output_dir: no run directory given (manifest output_dir or --out)")
    if Path(out, "checkpoint.cvc").exists() and not args.force:
        raise ConfigurationError(f"{out} already holds a run; use `resume` or --force")
    engine, rundir = start_run(manifest, out, args.workers)
    every = manifest.checkpoint_every if args.checkpoint_every is None else args.checkpoint_every
    return _drive(engine, rundir, args.stop_after, every)


def cmd_resume(args):
    engine, rundir = resume_run(args.checkpoint, args.workers)
    every = rundir.manifest.checkpoint_every if args.checkpoint_every is None else args.checkpoint_every
    return _drive(engine, rundir, args.stop_after, every)


def _drive(engine, rundir, stop_after, every):
    try:
        engine.run(rundir, stop_after=stop_after, checkpoint_every=every or None)
        if engine.finished:
            rundir.checkpoint(engine)
    finally:
        rundir.close()
        engine.evaluator.close()
    state = "finished" if engine.finished else "stopped"
    print(f"{state} at generation {engine.generation} (phase {engine.phase}/{engine.config.nphases}); "
          f"run directory {rundir.root}")
    return 0


def _evaluator(files, args):
    return evaluator_from_env(files[0].env, args.workers or 1, args.steps)


def cmd_tournament(args):
    out = _out_dir(args.out)
    a = run_archives(args.run_a)
    if args.last_only:
        a = a[-1:]
    ev = _evaluator(a, args)
    try:
        if args.run_b is None:
            grid = master_tournament([f.predator for f in a], [f.prey for f in a], ev)
            export_grid_csv(grid, out / "tournament.csv", args.normalize)
            print(f"wrote {out / 'tournament.csv'}")
            return 0
        b = run_archives(args.run_b)
        if args.last_only:
            b = b[-1:]
        if not compatible(a[0].env, b[0].env):
            raise CheckpointError("runs use different topologies or arenas; cannot cross-evaluate")
        ab = master_tournament([f.predator for f in a], [f.prey for f in b], ev)
        ba = master_tournament([f.predator for f in b], [f.prey for f in a], ev)
        export_grid_csv(ab, out / "cross_predA_preyB.csv", args.normalize)
        export_grid_csv(ba, out / "cross_predB_preyA.csv", args.normalize)
        print(f"wrote {out / 'cross_predA_preyB.csv'} and {out / 'cross_predB_preyA.csv'}")
        if args.last_only:
            print(f"A predators vs B prey: {ab.cells[0, 0]!r}")
            print(f"B predators vs A prey: {ba.cells[0, 0]!r}")
        return 0
    finally:
        ev.close()


def cmd_progress(args):
    out = _out_dir(args.out)
    runs = [run_archives(r) for r in args.runs]
    gens = [f.generation for f in runs[0]]
    for r, files in zip(args.runs, runs[1:]):
        if [f.generation for f in files] != gens:
            raise CheckpointError(f"{r}: archived generations differ from {args.runs[0]}")
    ev = _evaluator(runs[0], args)
    grids = []
    try:
        for i, files in enumerate(runs):
            grid = master_tournament([f.predator for f in files], [f.prey for f in files], ev, replication=i)
            export_grid_csv(grid, out / f"grid_rep{i}.csv")
            grids.append(grid)
    finally:
        ev.close()
    hp = historical_progress(grids, PREDATOR, args.alpha)
    hq = historical_progress(grids, PREY, args.alpha)
    gp = global_progress(grids, PREDATOR, alpha=args.alpha)
    gq = global_progress(grids, PREY, alpha=args.alpha)
    rows = [(g, a[1], b[1], c[1], d[1]) for g, a, b, c, d in zip(gens, hp, hq, gp, gq)]
    write_rows(out / "progress.csv", ("generation", "historical_predator", "historical_prey",
                                      "global_predator", "global_prey"), rows)
    print(f"wrote {out / 'progress.csv'}")
    return 0


def cmd_complexity(args):
    out = _out_dir(args.out)
    files = run_archives(args.run)
    ev = _evaluator(files, args)
    last = files[-1]
    rows = []
    try:
        for f in files:
            cp, cq = population_complexity(f.predator, f.prey, ev)
            perf_pred = master_tournament([f.predator], [last.prey], ev).cells[0, 0]
            perf_prey = 1.0 - master_tournament([last.predator], [f.prey], ev).cells[0, 0]
            rows.append((f.generation, cp, cq, float(perf_pred), float(perf_prey)))
    finally:
        ev.close()
    write_rows(out / "complexity.csv", ("generation", "predator_complexity", "prey_complexity",
                                        "predator_performance_vs_last", "prey_performance_vs_last"), rows)
    corr = []
    for role, ci, pi in ((PREDATOR, 1, 3), (PREY, 2, 4)):
        try:
            r = pearson_correlation([row[ci] for row in rows], [row[pi] for row in rows])
        except (UndefinedInputError, ValueError) as err:
            log.warning("%s: correlation undefined (%s)", role, err)
            r = float("nan")
        corr.append((role, len(rows), r))
    write_rows(out / "correlation.csv", ("role", "points", "pearson_r"), corr)
    for role, _, r in corr:
        print(f"{role}: r = {r!r}")
    print(f"wrote {out / 'complexity.csv'} and {out / 'correlation.csv'}")
    return 0


def cmd_replay(args):
    f = read_archive(args.archive)
    preds = {g.id: g for g in f.predator.members}
    preys = {g.id: g for g in f.prey.members}
    if args.pred_id not in preds or args.prey_id not in preys:
        raise ConfigurationError(f"ids not in archive (predators {sorted(preds)}, prey {sorted(preys)})")
    ev = evaluator_from_env(f.env, 1, args.steps)
    outcome = ev.episode(preds[args.pred_id], preys[args.prey_id], record=True)
    outcome.trajectory.to_csv(args.out)
    print(json.dumps({"capture_step": outcome.capture_step, "steps": outcome.steps,
                      "predator_fitness": outcome.predator_fitness, "prey_fitness": outcome.prey_fitness}))
    return 0


def cmd_defaults(args):
    sys.stdout.write(ExperimentManifest().to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coevolab", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def workers(sp):
        sp.add_argument("--workers", type=int, default=None,
                        help="episode worker threads (output never depends on it)")

    def analysis(sp):
        sp.add_argument("--out", default=".", help="output directory (default: current directory)")
        sp.add_argument("--steps", type=int, default=None, help="override episode length for post-evaluation")

    sp = sub.add_parser("evolve", help="run an experiment from a JSON manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", help="run directory (overrides manifest output_dir)")
    sp.add_argument("--stop-after", type=int, help="stop (with a checkpoint) after this many generations")
    sp.add_argument("--checkpoint-every", type=int, help="generations between checkpoints")
    sp.add_argument("--force", action="store_true", help="overwrite an existing run directory")
    workers(sp)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("resume", help="continue a run from its checkpoint file")
    sp.add_argument("checkpoint")
    sp.add_argument("--stop-after", type=int)
    sp.add_argument("--checkpoint-every", type=int)
    workers(sp)
    sp.set_defaults(func=cmd_resume)

    sp = sub.add_parser("tournament", help="master tournament of a run, or cross grid between two runs")
    sp.add_argument("run_a")
    sp.add_argument("run_b", nargs="?")
    sp.add_argument("--normalize", action="store_true", help="min-max scale cells to [0, 1]")
    sp.add_argument("--last-only", action="store_true", help="only the final archived generation")
    analysis(sp)
    workers(sp)
    sp.set_defaults(func=cmd_tournament)

    sp = sub.add_parser("progress", help="historical/global progress tables across replications")
    sp.add_argument("runs", nargs="+")
    sp.add_argument("--alpha", type=float, default=0.05)
    analysis(sp)
    workers(sp)
    sp.set_defaults(func=cmd_progress)

    sp = sub.add_parser("complexity", help="per-generation behaviour complexity and its correlation with performance")
    sp.add_argument("run")
    analysis(sp)
    workers(sp)
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("replay", help="run one archived pairing and export its trajectory")
    sp.add_argument("archive")
    sp.add_argument("pred_id", type=int)
    sp.add_argument("prey_id", type=int)
    sp.add_argument("--out", default="trajectory.csv", help="trajectory CSV path")
    sp.add_argument("--steps", type=int, default=None)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("defaults", help="print a manifest with all defaults")
    sp.set_defaults(func=cmd_defaults)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, CheckpointError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Criterion 11 is an hours-long experiment; it only runs with COEVOLAB_SLOW=1.
Set COEVOLAB_C11_DIR to keep (and reuse) its run directories.
"""
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from coevolab.arena import (ArenaConfig, effective_max_speed, integrate_motion, motor_to_wheel_speeds,
                            run_episode, tiredness)
from coevolab.arena.config import PREDATOR, PREY, RobotSpec
from coevolab.arena.sim import RobotState
from coevolab.engine import (EvalCache, EvolutionConfig, Evaluator, Population, Sink, cluster_vectors,
                             phase_finalize)
from coevolab.engine.runner import Engine
from coevolab.harness.cli import main
from coevolab.harness.rundir import run_archives
from coevolab.neuroctl import ControllerTopology, Genotype, mutate, random_genotype
from coevolab.progress import (TournamentGrid, command_complexity, cross_experiment, global_progress,
                               historical_progress)
from coevolab.progress.stats import paired_t_test_one_tailed, pearson_correlation
from oracles import pairing_oracle, ranking_oracle

TOPO = ControllerTopology()


def test_criterion_01_equations(criterion):
    t0 = time.perf_counter()
    checks = [
        tiredness([]) == 0.0,
        tiredness([1.0] * 200) == 1.0,
        tiredness([0.5] * 200) == 0.25,
        effective_max_speed(10, 0) == 10,
        effective_max_speed(10, 1) == 0,
        effective_max_speed(8.5, 0.25) == 6.375,
    ]
    for args, want in (((0.0, 1.0, 10.0), (-10.0, 10.0)), ((0.5, 1.0, 10.0), (10.0, 10.0)),
                       ((0.75, 0.5, 8.5), (4.25, 2.125)), ((1.0, 1.0, 10.0), (10.0, -10.0))):
        got = motor_to_wheel_speeds(*args)
        checks.append(abs(got[0] - want[0]) <= 1e-12 and abs(got[1] - want[1]) <= 1e-12)
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1.0
    assert criterion(1, "fatigue / speed / wheel mapping equations", ok, f"{sum(checks)}/{len(checks)} checks, {elapsed:.3f}s")


def test_criterion_02_fitness_complement(criterion):
    rng = np.random.default_rng(2024)
    bad, uncaught, bad_uncaught = 0, 0, 0
    for i in range(1000):
        arena = ArenaConfig(central_cylinder=bool(i % 2))
        steps = int(rng.integers(20, 400))
        out = run_episode(random_genotype(TOPO, rng, 0), random_genotype(TOPO, rng, 1), arena, max_steps=steps)
        bad += out.predator_fitness + out.prey_fitness != 1.0
        if out.capture_step is None:
            uncaught += 1
            bad_uncaught += (out.predator_fitness, out.prey_fitness) != (0.0, 1.0)
    ok = bad == 0 and bad_uncaught == 0 and uncaught > 0
    assert criterion(2, "fitness complement over 1000 episodes", ok,
                     f"{bad} sums != 1, {uncaught} uncaught episodes, {bad_uncaught} not (0,1)")


def test_criterion_03_kinematics(criterion):
    spec = RobotSpec.prey()
    worst_straight, worst_spin = 0.0, 0.0
    for h in np.linspace(-math.pi, math.pi, 37):
        r = RobotState(spec, 0.1, -0.2, float(h))
        s = integrate_motion(r, 10.0, 10.0, 0.1)
        worst_straight = max(worst_straight, abs(math.hypot(s.x - 0.1, s.y + 0.2) - 0.029 * 10 * 0.1))
        p = integrate_motion(r, -7.0, 7.0, 0.1)
        worst_spin = max(worst_spin, math.hypot(p.x - 0.1, p.y + 0.2))
    ok = worst_straight <= 1e-9 and worst_spin <= 1e-9
    assert criterion(3, "straight step and pure rotation", ok,
                     f"straight err {worst_straight:.1e} m, spin drift {worst_spin:.1e} m")


class _Lineages(Sink):
    def __init__(self, engine):
        self.engine, self.history = engine, {}

    def generation(self, record):
        for slot, lineage in enumerate(self.engine.pool.lineages):
            self.history.setdefault((record.phase, slot), []).append(lineage.fitness)


def test_criterion_04_monotone_lineages(criterion):
    cfg = EvolutionConfig(variant="standard", N=16, n=2, nphases=3, ngenerations=20, max_steps=200,
                          archive_every=60, invert_every=500, master_seed=4)
    t0 = time.perf_counter()
    with Evaluator.for_config(cfg, 1) as ev:
        engine = Engine(cfg, ev)
        sink = _Lineages(engine)
        engine.run(sink)
    elapsed = time.perf_counter() - t0
    drops = sum(b < a for seq in sink.history.values() for a, b in zip(seq, seq[1:]))
    ok = drops == 0 and len(sink.history) == 3 * 2 and elapsed <= 120
    assert criterion(4, "non-decreasing lineage fitness within phases", ok,
                     f"{len(sink.history)} lineages, {drops} decreases, {elapsed:.1f}s")


def test_criterion_05_clustering_oracle(criterion):
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(100):
        v = rng.random((16, 16))
        ids = [int(i) for i in rng.permutation(1000)[:16]]
        for n in (1, 2, 4, 8):
            mismatches += cluster_vectors(v, ids, n) != pairing_oracle(v, ids, n)
    assert criterion(5, "clustering equals brute-force pairing", mismatches == 0, f"{mismatches} mismatches in 400 partitions")


def test_criterion_06_ranking_oracle(criterion):
    rng = np.random.default_rng(6)
    N, n = 16, 2
    members = [Genotype(np.zeros(TOPO.gene_count), i) for i in range(N)]
    opps = Population(PREY, [Genotype(np.zeros(TOPO.gene_count), i) for i in range(N)])
    failures, worst, ties = 0, 0.0, 0
    for trial in range(100):
        fits = rng.random((N + n, N))
        if trial % 2:
            fits = np.round(fits * 3) / 3
            for k in range(n):  # offspring identical to some members
                fits[N + k] = fits[int(rng.integers(N))]
        evolved = [Genotype(np.zeros(TOPO.gene_count), 100 + k) for k in range(n)]
        cache = EvalCache()
        for c, row in zip(members + evolved, fits):
            for o, v in zip(opps.members, row):
                cache.put(c.id, o.id, float(v))
        pop, ranking = phase_finalize(Population(PREDATOR, members), evolved, opps, cache, None, "standard")
        ids = [g.id for g in members + evolved]
        ref_scores, ref_top = ranking_oracle(fits.tolist(), ids, N)
        got = dict(ranking)
        worst = max(worst, max(abs(got[i] - s) for i, s in zip(ids, ref_scores)))
        ties += len(set(ref_scores)) < len(ref_scores)
        failures += pop.ids != sorted(ref_top)
    ok = failures == 0 and worst <= 1e-12
    assert criterion(6, "weighted ranking and top-N selection", ok,
                     f"{failures} selection mismatches, max score err {worst:.1e}, {ties} tables with ties")


def test_criterion_07_mutation_statistics(criterion):
    parent = Genotype(np.zeros(100_000), 0)
    child = mutate(parent, 0.02, np.random.default_rng(7))
    count = int(np.count_nonzero(child.genes != parent.genes))
    band = 3 * math.sqrt(100_000 * 0.02 * 0.98)
    ok = abs(count - 2000) <= band
    assert criterion(7, "mutation count at rate 0.02", ok, f"{count} replaced, band 2000 +/- {band:.0f}")


def test_criterion_08_complexity(criterion):
    constant = command_complexity([0.4] * 1001, [0.6] * 1001)
    alternating = command_complexity([float(i % 2) for i in range(1001)], [0.5] * 1001)
    jump = command_complexity([0.0] * 400 + [1.0] * 601, [0.0] * 1001)
    ok = (constant, alternating, jump) == (0.0, 0.5, 0.0005)
    assert criterion(8, "behaviour complexity examples", ok, f"{constant!r}, {alternating!r}, {jump!r}")


def _synthetic(perf, gens, reps=3, seed=9):
    rng = np.random.default_rng(seed)
    return [TournamentGrid(gens, gens, np.array([[perf(p, q) + rng.uniform(-1e-3, 1e-3) for q in gens]
                                                 for p in gens]), r) for r in range(reps)]


def test_criterion_09_statistics(criterion):
    a, b = [0.6, 0.7, 0.65, 0.62, 0.68], [0.5, 0.55, 0.52, 0.51, 0.54]
    t, p = paired_t_test_one_tailed(a, b)
    ref = stats.ttest_rel(a, b, alternative="greater")
    x, y = [1, 2, 3, 4], [1.1, 1.9, 3.2, 3.8]
    r = pearson_correlation(x, y)
    r_ref = stats.pearsonr(x, y)[0]
    stats_ok = abs(t - ref.statistic) <= 1e-6 and abs(p - ref.pvalue) <= 1e-6 and abs(r - r_ref) <= 1e-6
    gens = [0, 1, 2, 3, 4, 5]
    hist = historical_progress(_synthetic(lambda g, h: 0.5 + 0.1 * (g - h) / 5, gens), PREDATOR)
    glob = global_progress(_synthetic(lambda g, h: 0.3 + 0.05 * g, gens), PREDATOR)
    flat = [TournamentGrid(gens, gens, np.full((6, 6), 0.5), i) for i in range(3)]
    expected = [(g, max(g - 1, 0)) for g in gens]
    tables_ok = (hist == expected and glob == expected
                 and all(e == 0 for _, e in historical_progress(flat, PREY) + global_progress(flat, PREY)))
    ok = stats_ok and tables_ok
    assert criterion(9, "t-test / Pearson references and progress scans", ok,
                     f"t={t:.6f} p={p:.3e} r={r:.6f}, tables {'ok' if tables_ok else 'wrong'}")


def _snapshot(run: Path) -> dict:
    return {str(p.relative_to(run)): p.read_bytes() for p in sorted(run.rglob("*"))
            if p.is_file() and p.name != "checkpoint.cvc"}


def test_criterion_10_determinism(criterion, tmp_path):
    manifest = {"variant": "standard", "master_seed": 10, "N": 8, "n": 2, "nphases": 4, "ngenerations": 5,
                "invert_every": 10, "archive_every": 10, "max_steps": 150, "checkpoint_every": 0}
    m = tmp_path / "m.json"
    m.write_text(json.dumps(manifest))
    snaps = {}
    for w in (1, 4, 8):
        main(["evolve", str(m), "--out", str(tmp_path / f"w{w}"), "--workers", str(w)])
        snaps[f"workers={w}"] = _snapshot(tmp_path / f"w{w}")
    split = tmp_path / "split"
    main(["evolve", str(m), "--out", str(split), "--stop-after", "7"])
    main(["resume", str(split / "checkpoint.cvc"), "--workers", "4"])
    snaps["split"] = _snapshot(split)
    base = snaps["workers=1"]
    same = [k for k, v in snaps.items() if v == base]
    ok = len(same) == len(snaps) and len(base) > 3
    assert criterion(10, "byte-identical runs across workers and resume", ok,
                     f"{len(same)}/{len(snaps)} identical, {len(base)} files compared")


C11_BASE = {"N": 16, "nphases": 100, "ngenerations": 100, "invert_every": 500, "archive_every": 10000,
            "max_steps": 200, "checkpoint_every": 500}


def _c11_run(root: Path, variant: str, seed: int):
    run = root / f"{variant}_{seed}"
    final = run / "archives" / "gen_00010000.cva"
    if not final.exists():
        m = root / f"{variant}_{seed}.json"
        m.write_text(json.dumps(dict(C11_BASE, variant=variant, master_seed=seed,
                                     n=16 if variant == "vanilla" else 2)))
        if (run / "checkpoint.cvc").exists():
            main(["resume", str(run / "checkpoint.cvc")])
        else:
            main(["evolve", str(m), "--out", str(run), "--force"])
    return run_archives(run)[-1]


@pytest.mark.slow
def test_criterion_11_directional(criterion, tmp_path):
    root = Path(os.environ.get("COEVOLAB_C11_DIR") or tmp_path)
    root.mkdir(parents=True, exist_ok=True)
    wins = {PREDATOR: 0, PREY: 0}
    lines = []
    for seed in (1, 2, 3):
        std, van = _c11_run(root, "standard", seed), _c11_run(root, "vanilla", seed)
        with Evaluator(max_steps=200) as ev:
            baseline = cross_experiment(van.predator, van.prey, ev)
            std_pred = cross_experiment(std.predator, van.prey, ev)
            std_prey = 1.0 - cross_experiment(van.predator, std.prey, ev)
        wins[PREDATOR] += std_pred > baseline
        wins[PREY] += std_prey > 1.0 - baseline
        lines.append(f"rep {seed}: pred {std_pred:.3f} vs {baseline:.3f}, prey {std_prey:.3f} vs {1 - baseline:.3f}")
    ok = max(wins.values()) >= 2
    assert criterion(11, "Standard beats within-Vanilla baseline (trend check)", ok,
                     f"wins predator {wins[PREDATOR]}/3, prey {wins[PREY]}/3; " + "; ".join(lines))

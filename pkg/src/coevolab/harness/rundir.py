"""Run directories: archives, checkpoints and telemetry on disk.

    <run>/manifest.json             normalized manifest (all defaults filled in)
    <run>/archives/gen_XXXXXXXX.cva both populations at one generation
    <run>/checkpoint.cvc            latest checkpoint
    <run>/telemetry/generations.csv per-generation mean training fitness
    <run>/telemetry/phases.csv      per-phase selection, turnover, population means
"""
from __future__ import annotations

import csv
import dataclasses
import logging
from pathlib import Path

import numpy as np

from ..arena.config import PREDATOR, PREY, ROLES, ArenaConfig, RobotSpec
from ..engine.config import EvolutionConfig
from ..engine.evaluation import EvalCache, Evaluator
from ..engine.runner import Engine, GenerationRecord, Lineage, PhaseContext, PhaseReport, Population, Sink
from ..errors import CheckpointError
from ..neuroctl import ControllerTopology, Genotype
from ..progress.measures import GenerationArchive
from .binfmt import ARCHIVE_MAGIC, CHECKPOINT_MAGIC, read_container, write_container
from .csvio import fmt, truncate_rows
from .manifest import ExperimentManifest, load_manifest

log = logging.getLogger(__name__)

GENERATION_COLUMNS = ("generation", "phase", "evolving_role", "mean_training_fitness", "replacements")
PHASE_COLUMNS = ("phase", "evolving_role", "start_generation", "end_generation", "predator_mean_at_start",
                 "final_training_fitness", "turnover", "episodes", "selected_opponents", "selected_agents")


# -- environment metadata ------------------------------------------------------

def env_meta(config: EvolutionConfig) -> dict:
    return {
        "topology": dataclasses.asdict(config.topology),
        "arena": dataclasses.asdict(config.arena),
        "robots": [dataclasses.asdict(r) for r in config.robots],
        "max_steps": config.max_steps,
        "episodes_per_pair": config.episodes_per_pair,
        "noise_seed": config.master_seed,
    }


def evaluator_from_env(meta: dict, workers: int = 1, max_steps: int | None = None) -> Evaluator:
    robots = tuple(RobotSpec(**r) for r in meta["robots"])
    return Evaluator(ArenaConfig(**meta["arena"]), robots, ControllerTopology(**meta["topology"]),
                     max_steps or meta["max_steps"], meta["episodes_per_pair"], meta["noise_seed"], workers)


def compatible(a: dict, b: dict) -> bool:
    keys = ("topology", "arena", "robots", "max_steps")
    return all(a[k] == b[k] for k in keys)


# -- archives --------------------------------------------------------------------

def _population_blobs(prefix: str, members) -> dict:
    ids = np.array([g.id for g in members], dtype=np.uint64)
    genes = np.array([g.genes for g in members]).reshape(len(members), -1)
    return {f"{prefix}_ids": ids, f"{prefix}_genes": genes}


def _members(blobs: dict, prefix: str) -> list:
    ids, genes = blobs[f"{prefix}_ids"], blobs[f"{prefix}_genes"]
    return [Genotype(genes[i], int(ids[i])) for i in range(len(ids))]


def write_archive(path, generation: int, populations: dict, meta: dict):
    blobs = {}
    for role in ROLES:
        blobs.update(_population_blobs(role, populations[role].members))
    write_container(path, ARCHIVE_MAGIC, {"kind": "archive", "generation": generation, "env": meta}, blobs)


@dataclasses.dataclass
class ArchiveFile:
    path: Path
    generation: int
    env: dict
    predator: GenerationArchive
    prey: GenerationArchive

    def role(self, role: str) -> GenerationArchive:
        return self.predator if role == PREDATOR else self.prey


def read_archive(path) -> ArchiveFile:
    header, blobs, _ = read_container(path, ARCHIVE_MAGIC)
    g = int(header["generation"])
    return ArchiveFile(Path(path), g, header["env"],
                       GenerationArchive(g, PREDATOR, tuple(_members(blobs, PREDATOR))),
                       GenerationArchive(g, PREY, tuple(_members(blobs, PREY))))


def archive_name(generation: int) -> str:
    return f"gen_{generation:08d}.cva"


def run_archives(run_dir) -> list[ArchiveFile]:
    paths = sorted(Path(run_dir, "archives").glob("gen_*.cva"))
    if not paths:
        raise FileNotFoundError(f"no archives under {run_dir}/archives")
    files = [read_archive(p) for p in paths]
    for f in files[1:]:
        if not compatible(f.env, files[0].env):
            raise CheckpointError(f"{f.path}: environment differs from {files[0].path}")
    return sorted(files, key=lambda f: f.generation)


# -- checkpoints -----------------------------------------------------------------

def save_checkpoint(path, engine: Engine, manifest: ExperimentManifest, extra: dict | None = None):
    header = {
        "kind": "checkpoint",
        "generation": engine.generation,
        "phase": engine.phase,
        "evolving": engine.evolving,
        "next_ids": engine.next_ids,
        "started": engine.started,
        "cache_episodes": engine.cache.episodes,
        "pool": None,
        "extra": extra or {},
    }
    blobs = {}
    for role in ROLES:
        blobs.update(_population_blobs(f"pop_{role}", engine.populations[role].members))
    if engine.pool is not None:
        ctx = engine.pool
        header["pool"] = {
            "report": dataclasses.asdict(ctx.report),
            "generation_in_phase": ctx.generation_in_phase,
            "episodes_at_start": ctx.episodes_at_start,
            "fitness": [l.fitness for l in ctx.lineages],
        }
        blobs.update(_population_blobs("pool", [l.genotype for l in ctx.lineages]))
    keys = list(engine.cache.entries)
    blobs["cache_keys"] = np.array(keys, dtype=np.uint64).reshape(len(keys), 2)
    blobs["cache_values"] = np.array([engine.cache.entries[k] for k in keys], dtype=np.float64)
    write_container(path, CHECKPOINT_MAGIC, header, blobs, digest=manifest.digest())


def load_checkpoint(path, manifest: ExperimentManifest, evaluator: Evaluator | None = None):
    """Rebuild an engine; refuses checkpoints written under a different manifest."""
    header, blobs, digest = read_container(path, CHECKPOINT_MAGIC)
    if digest != manifest.digest():
        raise CheckpointError(f"{path}: manifest hash mismatch; refusing to resume under a different manifest")
    config = manifest.to_config()
    engine = Engine(config, evaluator)
    engine.generation = header["generation"]
    engine.phase = header["phase"]
    engine.evolving = header["evolving"]
    engine.next_ids = {k: int(v) for k, v in header["next_ids"].items()}
    engine.started = header["started"]
    engine.populations = {r: Population(r, _members(blobs, f"pop_{r}")) for r in ROLES}
    cache = EvalCache({(int(a), int(b)): float(v)
                       for (a, b), v in zip(blobs["cache_keys"], blobs["cache_values"])})
    cache.episodes = header["cache_episodes"]
    engine.cache = cache
    pool = header["pool"]
    if pool is not None:
        report = PhaseReport(**pool["report"])
        report.ranking = [tuple(p) for p in report.ranking]
        lineages = [Lineage(g, float(f)) for g, f in zip(_members(blobs, "pool"), pool["fitness"])]
        engine.pool = PhaseContext(report, lineages, pool["generation_in_phase"], pool["episodes_at_start"])
    return engine, header["extra"]


# -- the sink ----------------------------------------------------------------------

class RunDirectory(Sink):
    """Engine sink writing everything a run produces into one directory."""

    def __init__(self, root, manifest: ExperimentManifest, config: EvolutionConfig, resume_counts: dict | None = None):
        self.root = Path(root)
        self.manifest = manifest
        self.meta = env_meta(config)
        (self.root / "archives").mkdir(parents=True, exist_ok=True)
        (self.root / "telemetry").mkdir(exist_ok=True)
        self.gen_path = self.root / "telemetry" / "generations.csv"
        self.phase_path = self.root / "telemetry" / "phases.csv"
        if resume_counts is None:
            (self.root / "manifest.json").write_text(manifest.to_json())
            self.counts = {"generations": 0, "phases": 0}
            self._gen_fh = self._open(self.gen_path, GENERATION_COLUMNS, "w")
            self._phase_fh = self._open(self.phase_path, PHASE_COLUMNS, "w")
        else:
            self.counts = dict(resume_counts)
            truncate_rows(self.gen_path, self.counts["generations"])
            truncate_rows(self.phase_path, self.counts["phases"])
            self._gen_fh = self._open(self.gen_path, None, "a")
            self._phase_fh = self._open(self.phase_path, None, "a")
        self._gen = csv.writer(self._gen_fh, lineterminator="\n")
        self._phase = csv.writer(self._phase_fh, lineterminator="\n")

    @staticmethod
    def _open(path, header, mode):
        fh = open(path, mode, newline="")
        if header:
            csv.writer(fh, lineterminator="\n").writerow(header)
        return fh

    @property
    def checkpoint_path(self) -> Path:
        return self.root / "checkpoint.cvc"

    def generation(self, rec: GenerationRecord):
        self._gen.writerow([fmt(v) for v in (rec.generation, rec.phase, rec.evolving_role,
                                             float(rec.mean_training_fitness), rec.replacements)])
        self.counts["generations"] += 1

    def phase(self, rep: PhaseReport):
        end = rep.start_generation + len(rep.training_fitness)
        self._phase.writerow([fmt(v) for v in (
            rep.phase, rep.evolving_role, rep.start_generation, end, float(rep.predator_mean_at_start),
            float(rep.training_fitness[-1]), rep.turnover, rep.episodes,
            " ".join(map(str, rep.selected_opponents)), " ".join(map(str, rep.selected_agents)))])
        self.counts["phases"] += 1

    def archive(self, generation: int, populations: dict):
        write_archive(self.root / "archives" / archive_name(generation), generation, populations, self.meta)

    def flush(self):
        self._gen_fh.flush()
        self._phase_fh.flush()

    def checkpoint(self, engine: Engine):
        self.flush()
        save_checkpoint(self.checkpoint_path, engine, self.manifest, {"telemetry": dict(self.counts)})
        log.info("checkpoint at generation %d", engine.generation)

    def close(self):
        self._gen_fh.close()
        self._phase_fh.close()


def start_run(manifest: ExperimentManifest, out_dir, workers: int | None = None) -> tuple[Engine, RunDirectory]:
    config = manifest.to_config()
    evaluator = Evaluator.for_config(config, workers or manifest.workers)
    return Engine(config, evaluator), RunDirectory(out_dir, manifest, config)


def resume_run(checkpoint_path, workers: int | None = None) -> tuple[Engine, RunDirectory]:
    checkpoint_path = Path(checkpoint_path)
    root = checkpoint_path.parent
    manifest = load_manifest(root / "manifest.json")
    config = manifest.to_config()
    evaluator = Evaluator.for_config(config, workers or manifest.workers)
    engine, extra = load_checkpoint(checkpoint_path, manifest, evaluator)
    return engine, RunDirectory(root, manifest, config, resume_counts=extra["telemetry"])

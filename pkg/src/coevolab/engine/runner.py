"""Phase scheduling and the (1+1) evolution loop of the Generalist algorithm and its controls."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..arena.config import PREDATOR, PREY, ROLES
from ..neuroctl import Genotype, mutate, random_genotype
from .config import EvolutionConfig, Variant
from .evaluation import EvalCache, Evaluator, as_pairs, evaluate_matrix, other_role, pair_fitness
from .selection import opponent_weights, ranking_scores, select_agents, select_opponents, top_by_score

log = logging.getLogger(__name__)

_INIT_STREAM = 0
_MUTATION_STREAM = 1


@dataclass(frozen=True)
class Population:
    role: str
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(self.members, key=lambda g: g.id)))

    def __len__(self):
        return len(self.members)

    @property
    def ids(self):
        return [g.id for g in self.members]

    def by_id(self, ids):
        lookup = {g.id: g for g in self.members}
        return [lookup[i] for i in ids]


@dataclass
class Lineage:
    genotype: Genotype
    fitness: float


@dataclass
class PhaseReport:
    phase: int
    evolving_role: str
    start_generation: int
    selected_opponents: list
    selected_agents: list
    training_fitness: list = field(default_factory=list)
    ranking: list = field(default_factory=list)  # (candidate id, score), best first
    turnover: int = 0
    predator_mean_at_start: float = float("nan")
    episodes: int = 0


@dataclass
class GenerationRecord:
    generation: int
    phase: int
    evolving_role: str
    mean_training_fitness: float
    replacements: int


@dataclass
class PhaseContext:
    """Breeding-pool state of the phase in progress."""
    report: PhaseReport
    lineages: list
    generation_in_phase: int = 0
    episodes_at_start: int = 0


class Sink:
    """Receives engine output. Every hook is optional."""

    def generation(self, record: GenerationRecord):
        pass

    def phase(self, report: PhaseReport):
        pass

    def archive(self, generation: int, populations: dict):
        pass

    def checkpoint(self, engine: "Engine"):
        pass


class ListSink(Sink):
    def __init__(self):
        self.generations, self.phases, self.archives = [], [], []

    def generation(self, record):
        self.generations.append(record)

    def phase(self, report):
        self.phases.append(report)

    def archive(self, generation, populations):
        self.archives.append((generation, populations))


def _mean(values) -> float:
    # left-to-right accumulation; the order is part of the reproducibility contract
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def mutation_rng(master_seed: int, phase: int, generation_in_phase: int, lineage: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_MUTATION_STREAM, phase, generation_in_phase, lineage))
    return np.random.Generator(np.random.PCG64(ss))


def initial_population(config: EvolutionConfig, role: str) -> Population:
    members = []
    for i in range(config.N):
        ss = np.random.SeedSequence(config.master_seed, spawn_key=(_INIT_STREAM, ROLES.index(role), i))
        members.append(random_genotype(config.topology, np.random.Generator(np.random.PCG64(ss)), i))
    return Population(role, members)


def lineage_fitness(agent: Genotype, opponents, role: str, cache: EvalCache) -> float:
    return _mean([pair_fitness(agent, o, role, cache) for o in opponents])


def generation_step(lineages, opponents, role: str, evaluator: Evaluator, cache: EvalCache,
                    rngs, mutation_rate: float, next_id) -> tuple[list, int]:
    """One (1+1) generation for every lineage against the frozen opponents.

    ``rngs`` gives one random stream per lineage and ``next_id`` yields
    fresh ids. Offspring replace their parent when not worse. Episodes of
    accepted offspring are kept in ``cache``. Returns (lineages, accepted).
    """
    offspring = [mutate(l.genotype, mutation_rate, rng, next_id()) for l, rng in zip(lineages, rngs)]
    scratch = EvalCache()
    scratch.fill(as_pairs(offspring, opponents, role), evaluator)
    cache.episodes += scratch.episodes
    out, accepted = [], 0
    for parent, child in zip(lineages, offspring):
        fit = lineage_fitness(child, opponents, role, scratch)
        if fit >= parent.fitness:
            accepted += 1
            out.append(Lineage(child, fit))
            for o in opponents:
                key = (child.id, o.id) if role == PREDATOR else (o.id, child.id)
                cache.put(*key, scratch.get(*key))
        else:
            out.append(parent)
    return out, accepted


def phase_finalize(population: Population, evolved, opponents: Population, cache: EvalCache,
                   evaluator: Evaluator, variant) -> tuple[Population, list]:
    """Fold the evolved agents back into the population.

    Returns the new population and the ranking [(id, score), ...] (empty
    for Vanilla, which keeps the evolved lineages as they are).
    """
    variant = Variant(variant)
    if variant is Variant.VANILLA:
        return Population(population.role, evolved), []
    known = set(population.ids)
    fresh = sorted((g for g in evolved if g.id not in known), key=lambda g: g.id)
    candidates = list(population.members) + fresh
    role = population.role
    cache.fill(as_pairs(candidates, opponents.members, role), evaluator)
    fits = np.array([[pair_fitness(c, o, role, cache) for o in opponents.members] for c in candidates])
    weights = opponent_weights(fits) if variant is Variant.STANDARD else None
    scores = ranking_scores(fits, variant, weights)
    ids = [c.id for c in candidates]
    keep = set(top_by_score(ids, scores, len(population)))
    ranking = sorted(zip(ids, (float(s) for s in scores)), key=lambda p: (-p[1], p[0]))
    return Population(role, [c for c in candidates if c.id in keep]), ranking


class Engine:
    """Resumable state machine running one replication."""

    def __init__(self, config: EvolutionConfig, evaluator: Evaluator | None = None):
        self.config = config
        self.evaluator = evaluator or Evaluator.for_config(config)
        self.cache = EvalCache()
        self.generation = 0
        self.phase = 0
        self.evolving = PREDATOR
        self.populations: dict[str, Population] = {}
        self.next_ids = {PREDATOR: config.N, PREY: config.N}
        self.pool: Optional[PhaseContext] = None
        self.started = False

    # -- state -------------------------------------------------------------
    def initialize(self):
        self.populations = {r: initial_population(self.config, r) for r in ROLES}
        self.started = True

    @property
    def finished(self) -> bool:
        return self.phase >= self.config.nphases

    def _id_source(self, role):
        def take():
            i = self.next_ids[role]
            self.next_ids[role] = i + 1
            return i
        return take

    # -- phases ------------------------------------------------------------
    def _start_phase(self):
        cfg = self.config
        role = self.evolving
        agents, opps = self.populations[role], self.populations[other_role(role)]
        before = self.cache.episodes
        matrix = evaluate_matrix(agents, opps, self.cache, self.evaluator)
        opp_ids = select_opponents(matrix, cfg.n, cfg.variant)
        agent_ids = select_agents(matrix, opp_ids)
        opponents = opps.by_id(opp_ids)
        lineages = [Lineage(g, lineage_fitness(g, opponents, role, self.cache)) for g in agents.by_id(agent_ids)]
        pred_mean = float(matrix.values.mean()) if role == PREDATOR else float((1.0 - matrix.values).mean())
        report = PhaseReport(self.phase, role, self.generation, opp_ids, agent_ids,
                             predator_mean_at_start=pred_mean)
        self.pool = PhaseContext(report, lineages, 0, before)

    def _generation(self, sink: Sink):
        cfg = self.config
        ctx = self.pool
        role = ctx.report.evolving_role
        opponents = self.populations[other_role(role)].by_id(ctx.report.selected_opponents)
        rngs = [mutation_rng(cfg.master_seed, self.phase, ctx.generation_in_phase, i)
                for i in range(len(ctx.lineages))]
        ctx.lineages, accepted = generation_step(ctx.lineages, opponents, role, self.evaluator, self.cache,
                                                 rngs, cfg.mutation_rate, self._id_source(role))
        ctx.generation_in_phase += 1
        self.generation += 1
        mean = _mean([l.fitness for l in ctx.lineages])
        ctx.report.training_fitness.append(mean)
        sink.generation(GenerationRecord(self.generation, self.phase, role, mean, accepted))

    def _finish_phase(self, sink: Sink):
        cfg = self.config
        ctx = self.pool
        role = ctx.report.evolving_role
        population = self.populations[role]
        new_pop, ranking = phase_finalize(population, [l.genotype for l in ctx.lineages],
                                          self.populations[other_role(role)], self.cache,
                                          self.evaluator, cfg.variant)
        ctx.report.ranking = ranking
        ctx.report.turnover = len(set(new_pop.ids) - set(population.ids))
        ctx.report.episodes = self.cache.episodes - ctx.episodes_at_start
        self.populations[role] = new_pop
        self.pool = None
        self.phase += 1
        sink.phase(ctx.report)
        log.info("phase %d (%s) done at generation %d, turnover %d", ctx.report.phase, role,
                 self.generation, ctx.report.turnover)
        if self.generation % cfg.invert_every == 0:
            self.evolving = other_role(role)
        self.cache.prune(self.populations[PREDATOR].ids, self.populations[PREY].ids)
        if self.generation % cfg.archive_every == 0 or self.finished:
            sink.archive(self.generation, dict(self.populations))

    def run(self, sink: Sink | None = None, stop_after: int | None = None,
            checkpoint_every: int | None = None) -> "Engine":
        """Run to the end, or until ``stop_after`` generations have completed.

        ``sink.checkpoint`` fires every ``checkpoint_every`` generations and
        whenever the run stops early.
        """
        sink = sink or Sink()
        if not self.started:
            self.initialize()
            sink.archive(0, dict(self.populations))
        cfg = self.config
        while not self.finished:
            if stop_after is not None and self.generation >= stop_after:
                sink.checkpoint(self)
                return self
            if self.pool is None:
                self._start_phase()
            self._generation(sink)
            if self.pool.generation_in_phase == cfg.ngenerations:
                self._finish_phase(sink)
            if checkpoint_every and self.generation % checkpoint_every == 0 and not self.finished:
                sink.checkpoint(self)
        return self


def run_experiment(config: EvolutionConfig, sink: Sink | None = None, workers: int = 1) -> Engine:
    with Evaluator.for_config(config, workers) as ev:
        return Engine(config, ev).run(sink)

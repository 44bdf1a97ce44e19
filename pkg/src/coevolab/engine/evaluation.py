"""Episode evaluation: the worker pool, the pair cache and cross-evaluation matrices."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..arena.config import PREDATOR, PREY, ArenaConfig, default_robots
from ..arena.sim import run_episode
from ..neuroctl import ControllerTopology, Genotype


class Evaluator:
    """Runs predator-vs-prey episodes, optionally on a thread pool.

    The episode kernel releases the GIL, so threads give real parallelism.
    Results always come back in submission order, so the worker count
    never changes any number.
    """

    def __init__(self, arena: ArenaConfig = ArenaConfig(), robots=None,
                 topology: ControllerTopology = ControllerTopology(), max_steps: int = 1000,
                 episodes_per_pair: int = 1, noise_seed: int = 0, workers: int = 1):
        self.arena = arena
        self.robots = robots or default_robots(arena.central_cylinder)
        self.topology = topology
        self.max_steps = max_steps
        self.episodes_per_pair = episodes_per_pair
        self.noise_seed = noise_seed
        self.workers = max(1, int(workers))
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    @classmethod
    def for_config(cls, config, workers: int = 1) -> "Evaluator":
        return cls(config.arena, config.robots, config.topology, config.max_steps,
                   config.episodes_per_pair, config.master_seed, workers)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _seed(self, pred: Genotype, prey: Genotype, rep: int) -> int:
        ss = np.random.SeedSequence(self.noise_seed, spawn_key=(2, pred.id, prey.id, rep))
        return int(ss.generate_state(1, np.uint64)[0])

    def episode(self, pred: Genotype, prey: Genotype, record: bool = False):
        return run_episode(pred, prey, self.arena, self.robots, record_trajectory=record,
                           max_steps=self.max_steps, topology=self.topology,
                           noise_seed=self._seed(pred, prey, 0))

    def _pair_fitness(self, pair) -> float:
        pred, prey = pair
        if self.episodes_per_pair == 1:
            return self.episode(pred, prey).predator_fitness
        total = 0.0
        for rep in range(self.episodes_per_pair):
            out = run_episode(pred, prey, self.arena, self.robots, max_steps=self.max_steps,
                              topology=self.topology, noise_seed=self._seed(pred, prey, rep))
            total += out.predator_fitness
        return total / self.episodes_per_pair

    def predator_fitness(self, pairs) -> list[float]:
        """Predator-perspective fitness for each (predator, prey) pair, in order."""
        pairs = list(pairs)
        if self._pool is None or len(pairs) < 2:
            return [self._pair_fitness(p) for p in pairs]
        chunk = max(1, len(pairs) // (4 * self.workers))
        return list(self._pool.map(self._pair_fitness, pairs, chunksize=chunk))

    def map(self, fn, items):
        """Ordered map of an arbitrary episode-level function over the pool."""
        items = list(items)
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))


class EvalCache:
    """Predator-perspective fitness keyed by (predator id, prey id)."""

    def __init__(self, entries: dict | None = None):
        self.entries: dict[tuple[int, int], float] = dict(entries or {})
        self.episodes = 0  # number of pairs actually simulated

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def get(self, pred_id: int, prey_id: int) -> float:
        return self.entries[(pred_id, prey_id)]

    def put(self, pred_id: int, prey_id: int, value: float):
        self.entries[(pred_id, prey_id)] = value

    def fill(self, pairs, evaluator: Evaluator):
        """Simulate every (pred, prey) genotype pair not cached yet."""
        missing, seen = [], set()
        for pred, prey in pairs:
            key = (pred.id, prey.id)
            if key not in self.entries and key not in seen:
                seen.add(key)
                missing.append((pred, prey))
        if missing:
            for (pred, prey), value in zip(missing, evaluator.predator_fitness(missing)):
                self.entries[(pred.id, prey.id)] = value
            self.episodes += len(missing)

    def prune(self, predator_ids, prey_ids):
        keep_pred, keep_prey = set(predator_ids), set(prey_ids)
        self.entries = {k: v for k, v in self.entries.items() if k[0] in keep_pred and k[1] in keep_prey}


@dataclass
class CrossEvalMatrix:
    """cell[i, j]: fitness of agent i against opponent j, agent perspective."""
    agent_ids: list
    opponent_ids: list
    values: np.ndarray
    agent_role: str = PREDATOR

    def opponent_view(self) -> np.ndarray:
        """Opponent-perspective values, same layout."""
        return 1.0 - self.values

    def row(self, agent_id) -> np.ndarray:
        return self.values[self.agent_ids.index(agent_id)]

    def column(self, opponent_id) -> np.ndarray:
        return self.values[:, self.opponent_ids.index(opponent_id)]


def pair_fitness(agent: Genotype, opponent: Genotype, agent_role: str, cache: EvalCache) -> float:
    if agent_role == PREDATOR:
        return cache.get(agent.id, opponent.id)
    return 1.0 - cache.get(opponent.id, agent.id)


def as_pairs(agents, opponents, agent_role: str):
    if agent_role == PREDATOR:
        return [(a, o) for a in agents for o in opponents]
    return [(o, a) for a in agents for o in opponents]


def evaluate_matrix(agents, opponents, cache: EvalCache, evaluator: Evaluator) -> CrossEvalMatrix:
    """Full pairwise competition of two populations, served from the cache where possible."""
    role = agents.role
    cache.fill(as_pairs(agents.members, opponents.members, role), evaluator)
    values = np.array([[pair_fitness(a, o, role, cache) for o in opponents.members]
                       for a in agents.members]).reshape(len(agents.members), len(opponents.members))
    return CrossEvalMatrix([g.id for g in agents.members], [g.id for g in opponents.members], values, role)


def other_role(role: str) -> str:
    return PREY if role == PREDATOR else PREDATOR

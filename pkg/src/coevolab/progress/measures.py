"""Post-hoc evaluation: master tournaments, cross-experiment tests, behaviour complexity,
and the historical / global progress tables built on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..arena.config import PREDATOR, PREY
from ..arena.sim import TrajectoryLog
from ..engine.evaluation import EvalCache, Evaluator
from ..errors import UndefinedInputError
from .stats import paired_t_test_one_tailed


@dataclass(frozen=True)
class GenerationArchive:
    generation: int
    role: str
    members: tuple

    def __len__(self):
        return len(self.members)


@dataclass
class TournamentGrid:
    """Rows: predator generations, columns: prey generations, cells: mean predator fitness."""
    predator_generations: list
    prey_generations: list
    cells: np.ndarray
    replication: int = 0

    def prey_view(self) -> np.ndarray:
        return 1.0 - self.cells

    def performance(self, role: str, agent_gen: int, opponent_gen: int) -> float:
        """Mean fitness of ``role`` agents of one generation against opponents of another."""
        if role == PREDATOR:
            return float(self.cells[self.predator_generations.index(agent_gen),
                                    self.prey_generations.index(opponent_gen)])
        return float(1.0 - self.cells[self.predator_generations.index(opponent_gen),
                                      self.prey_generations.index(agent_gen)])


def _mean(values) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def _archive_mean(pred: GenerationArchive, prey: GenerationArchive, cache: EvalCache,
                  evaluator: Evaluator) -> float:
    pairs = [(p, q) for p in pred.members for q in prey.members]
    cache.fill(pairs, evaluator)
    return _mean([cache.get(p.id, q.id) for p, q in pairs])


def master_tournament(pred_archives, prey_archives, evaluator: Evaluator, replication: int = 0) -> TournamentGrid:
    """Every predator archive against every prey archive.

    Genotype ids key an episode cache, so all predator archives must come
    from one run and all prey archives from one run.
    """
    cache = EvalCache()
    cells = np.array([[_archive_mean(p, q, cache, evaluator) for q in prey_archives]
                      for p in pred_archives]).reshape(len(pred_archives), len(prey_archives))
    return TournamentGrid([a.generation for a in pred_archives], [a.generation for a in prey_archives],
                          cells, replication)


def cross_experiment(pred_archive: GenerationArchive, prey_archive: GenerationArchive,
                     evaluator: Evaluator) -> float:
    """Mean predator fitness of one archive against another (typically from another run)."""
    return _archive_mean(pred_archive, prey_archive, EvalCache(), evaluator)


def command_complexity(tv, rv) -> float:
    """Mean absolute first difference of both command streams, halved."""
    tv = np.asarray(tv, dtype=np.float64)
    rv = np.asarray(rv, dtype=np.float64)
    if tv.shape != rv.shape or tv.ndim != 1:
        raise ValueError("tv and rv must be 1-D sequences of equal length")
    s = tv.size - 1
    if s < 1:
        raise UndefinedInputError("behaviour complexity needs at least two logged steps")
    total = 0.0
    for t in range(1, s + 1):
        total += abs(tv[t] - tv[t - 1]) + abs(rv[t] - rv[t - 1])
    return float(total / (2 * s))


def behavior_complexity(trajectory: TrajectoryLog, robot) -> float:
    tv, rv = trajectory.commands(robot)
    return command_complexity(tv, rv)


def population_complexity(pred_archive: GenerationArchive, prey_archive: GenerationArchive,
                          evaluator: Evaluator) -> tuple[float, float]:
    """(mean predator complexity, mean prey complexity) over all pairings."""
    pairs = [(p, q) for p in pred_archive.members for q in prey_archive.members]

    def both(pair):
        traj = evaluator.episode(*pair, record=True).trajectory
        return behavior_complexity(traj, PREDATOR), behavior_complexity(traj, PREY)

    values = evaluator.map(both, pairs)
    return _mean([v[0] for v in values]), _mean([v[1] for v in values])


def _check_grids(grids, role):
    if len(grids) < 2:
        raise ValueError("progress tables need at least two replications")
    if role not in (PREDATOR, PREY):
        raise ValueError(f"unknown role {role!r}")
    gens = list(grids[0].predator_generations)
    for g in grids:
        if list(g.predator_generations) != gens or list(g.prey_generations) != gens:
            raise ValueError("grids must share one square generation axis")
    return gens


def historical_progress(grids, role: str, alpha: float = 0.05) -> list[tuple[int, int]]:
    """Per agent generation: the most recent older opponent generation that the
    agents beat significantly more than their contemporaries (0 if none)."""
    gens = _check_grids(grids, role)
    rows = []
    for gi, g in enumerate(gens):
        entry = 0
        current = [grid.performance(role, g, g) for grid in grids]
        for h in reversed(gens[:gi]):
            ancient = [grid.performance(role, g, h) for grid in grids]
            if paired_t_test_one_tailed(ancient, current)[1] < alpha:
                entry = h
                break
        rows.append((g, entry))
    return rows


def global_progress(grids, role: str, last_generation: int | None = None,
                    alpha: float = 0.05) -> list[tuple[int, int]]:
    """Per agent generation: the most recent older agent generation that it
    significantly outperforms against the last-generation opponents (0 if none)."""
    gens = _check_grids(grids, role)
    last = gens[-1] if last_generation is None else last_generation
    rows = []
    for gi, g in enumerate(gens):
        entry = 0
        mine = [grid.performance(role, g, last) for grid in grids]
        for h in reversed(gens[:gi]):
            older = [grid.performance(role, h, last) for grid in grids]
            if paired_t_test_one_tailed(mine, older)[1] < alpha:
                entry = h
                break
        rows.append((g, entry))
    return rows

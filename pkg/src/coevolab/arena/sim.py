from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..neuroctl import ControllerTopology, Genotype
from . import kernel
from .config import (DT, HISTORY_LEN, NOMINAL_STEPS, PREDATOR, PREY, ArenaConfig, RobotSpec,
                     arena_params, default_robots, robot_params)


@dataclass
class RobotState:
    spec: RobotSpec
    x: float
    y: float
    heading: float
    wheel_history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_LEN))
    contact: bool = False
    captured_at: Optional[int] = None

    @classmethod
    def at_start(cls, spec: RobotSpec) -> "RobotState":
        x, y, h = spec.start
        return cls(spec, x, y, h)

    @property
    def position(self):
        return (self.x, self.y)


@dataclass
class WorldState:
    arena: ArenaConfig
    robots: list  # [predator, prey]


@dataclass
class TrajectoryLog:
    """Per step, per robot (0 = predator, 1 = prey) records, shape (steps, 2, 9).

    Columns: x, y, heading, tv, rv, rsl, rsr, tiredness, contact. tv and
    rv are the raw motor outputs (tm, rm) of that step.
    """
    data: np.ndarray

    COLUMNS = ("x", "y", "heading", "tv", "rv", "rsl", "rsr", "tiredness", "contact")

    def __len__(self):
        return self.data.shape[0]

    def commands(self, robot: int | str):
        r = _robot_index(robot)
        return self.data[:, r, kernel.T_TV], self.data[:, r, kernel.T_RV]

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("step", "robot") + self.COLUMNS)
            for t in range(len(self)):
                for r, role in enumerate((PREDATOR, PREY)):
                    row = self.data[t, r]
                    values = [repr(float(v)) for v in row[:-1]] + [str(int(row[-1]))]
                    w.writerow([t + 1, role] + values)
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class EpisodeOutcome:
    capture_step: Optional[int]
    steps: int
    predator_fitness: float
    prey_fitness: float
    trajectory: Optional[TrajectoryLog] = None


def _robot_index(robot) -> int:
    if robot in (0, PREDATOR):
        return 0
    if robot in (1, PREY):
        return 1
    raise ValueError(f"unknown robot {robot!r}")


def ground_brightness(position, arena: ArenaConfig = ArenaConfig()) -> float:
    return kernel.ground_brightness(float(position[0]), float(position[1]), arena.half)


def read_infrared(me: RobotState, world: WorldState) -> np.ndarray:
    other = world.robots[1] if world.robots[0] is me else world.robots[0]
    out = np.empty(8)
    kernel.read_infrared(me.x, me.y, me.heading, me.spec.body_radius, other.x, other.y,
                         other.spec.body_radius, world.arena.cylinder_radius, world.arena.half,
                         world.arena.ir_range, out)
    return out


def read_camera(me: RobotState, opponent: RobotState, arena: ArenaConfig) -> np.ndarray:
    out = np.empty(9)
    occludes = arena.central_cylinder and arena.cylinder_occludes
    kernel.read_camera(me.x, me.y, me.heading, opponent.x, opponent.y, opponent.spec.body_radius,
                       arena.cylinder_radius, occludes, out)
    return out


def tiredness(wheel_history) -> float:
    hist = np.asarray(list(wheel_history)[-HISTORY_LEN:], dtype=np.float64)
    return kernel.tiredness_of(hist)


def effective_max_speed(ms: float, tir: float) -> float:
    return kernel.effective_max_speed(float(ms), float(tir))


def motor_to_wheel_speeds(tm: float, rm: float, ms_t: float):
    return kernel.motor_to_wheel_speeds(float(tm), float(rm), float(ms_t))


def assemble_sensors(me: RobotState, opponent: RobotState, arena: ArenaConfig, step: int) -> np.ndarray:
    if not 0 <= step < NOMINAL_STEPS:
        raise ValueError("step must be in [0, 999]")
    out = np.empty(kernel.N_SENSORS)
    kernel.assemble_into(out, me.x, me.y, me.heading, me.spec.body_radius, opponent.x, opponent.y,
                         opponent.spec.body_radius, arena_params(arena), me.contact, step,
                         tiredness(me.wheel_history))
    return out


def integrate_motion(robot: RobotState, rsl: float, rsr: float, dt: float = DT) -> RobotState:
    x, y, h = kernel.integrate_motion(robot.x, robot.y, robot.heading, float(rsl), float(rsr),
                                      robot.spec.wheel_radius, robot.spec.axle_track, float(dt))
    return replace(robot, x=x, y=y, heading=h, wheel_history=deque(robot.wheel_history, maxlen=HISTORY_LEN))


def resolve_collisions(world: WorldState) -> WorldState:
    """Push robots out of walls and the cylinder; contact flags are recomputed."""
    robots = []
    for r in world.robots:
        x, y, c = kernel.resolve_static(r.x, r.y, r.spec.body_radius, world.arena.half,
                                        world.arena.cylinder_radius)
        robots.append(replace(r, x=x, y=y, contact=bool(c),
                              wheel_history=deque(r.wheel_history, maxlen=HISTORY_LEN)))
    return WorldState(world.arena, robots)


def episode_fitness(capture_step: Optional[int], steps: int = NOMINAL_STEPS):
    """(predator_fitness, prey_fitness); the prey scores the elapsed fraction."""
    if capture_step is None:
        elapsed = 1.0
    else:
        if not 1 <= capture_step <= steps:
            raise ValueError(f"capture step {capture_step} outside [1, {steps}]")
        elapsed = capture_step / steps
    return 1.0 - elapsed, elapsed


def run_episode(predator: Genotype, prey: Genotype, arena: ArenaConfig = ArenaConfig(),
                robots: tuple[RobotSpec, RobotSpec] | None = None, *,
                record_trajectory: bool = False, max_steps: int = NOMINAL_STEPS,
                topology: ControllerTopology = ControllerTopology(),
                noise_seed: int = 0) -> EpisodeOutcome:
    if topology.n_sensory != kernel.N_SENSORS or topology.n_motor != 2:
        raise ValueError("episodes need a controller with 25 sensors and 2 motors")
    for g in (predator, prey):
        if g.genes.size != topology.gene_count:
            raise ValueError(f"genotype {g.id} has {g.genes.size} genes, topology needs {topology.gene_count}")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    robots = robots or default_robots(arena.central_cylinder)
    if arena.sensor_noise > 0:
        rng = np.random.default_rng(noise_seed)
        noise = rng.uniform(-arena.sensor_noise, arena.sensor_noise, (max_steps, 2, kernel.N_SENSORS))
    else:
        noise = np.empty((0, 2, kernel.N_SENSORS))
    traj = np.zeros((max_steps if record_trajectory else 0, 2, kernel.TRAJ_COLS))
    capture, executed = kernel.run_episode_kernel(predator.genes, prey.genes, topology.n_hidden,
                                                  robot_params(robots), arena_params(arena),
                                                  max_steps, noise, traj)
    capture = int(capture) or None
    pred_fit, prey_fit = episode_fitness(capture, max_steps)
    log = TrajectoryLog(traj[:executed].copy()) if record_trajectory else None
    return EpisodeOutcome(capture, max_steps, pred_fit, prey_fit, log)

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError

PREDATOR = "predator"
PREY = "prey"
ROLES = (PREDATOR, PREY)

# nominal episode length; the clock neuron is scaled by it even for shorter runs
NOMINAL_STEPS = 1000
DT = 0.1
HISTORY_LEN = 200


@dataclass(frozen=True)
class ArenaConfig:
    side: float = 3.0
    central_cylinder: bool = False
    cylinder_diameter: float = 0.1
    cylinder_occludes: bool = True
    ir_range: float = 0.12
    ground_sensor_radius: float = 0.06
    sensor_noise: float = 0.0
    # maps rm through 2*rm - 1 so both wheels can turn backwards
    signed_rotation: bool = False

    def __post_init__(self):
        if not self.side > 0:
            raise ConfigurationError("arena side must be > 0")
        if self.central_cylinder and not 0 < self.cylinder_diameter < self.side:
            raise ConfigurationError("cylinder diameter must be in (0, side)")
        if self.ir_range <= 0:
            raise ConfigurationError("ir_range must be > 0")
        if self.sensor_noise < 0:
            raise ConfigurationError("sensor_noise must be >= 0")

    @property
    def half(self) -> float:
        return self.side / 2.0

    @property
    def cylinder_radius(self) -> float:
        return self.cylinder_diameter / 2.0 if self.central_cylinder else 0.0


@dataclass(frozen=True)
class RobotSpec:
    role: str
    max_wheel_speed: float
    body_radius: float = 0.085
    wheel_radius: float = 0.029
    axle_track: float = 0.104
    # start pose (x, y, heading); predator on the left facing east, prey mirrored
    start: tuple = field(default=None)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigurationError(f"unknown role {self.role!r}")
        if not self.max_wheel_speed > 0:
            raise ConfigurationError("max_wheel_speed must be > 0")
        if not self.body_radius > 0:
            raise ConfigurationError("body_radius must be > 0")
        if self.axle_track > 2 * self.body_radius:
            raise ConfigurationError("axle_track must not exceed the body diameter")
        if self.start is None:
            start = (-0.75, 0.0, 0.0) if self.role == PREDATOR else (0.75, 0.0, math.pi)
            object.__setattr__(self, "start", start)
        else:
            object.__setattr__(self, "start", tuple(float(v) for v in self.start))

    @classmethod
    def predator(cls, **kw) -> "RobotSpec":
        kw.setdefault("max_wheel_speed", 8.5)
        return cls(role=PREDATOR, **kw)

    @classmethod
    def prey(cls, **kw) -> "RobotSpec":
        kw.setdefault("max_wheel_speed", 10.0)
        return cls(role=PREY, **kw)


def default_robots(cylinder_setup: bool = False) -> tuple[RobotSpec, RobotSpec]:
    """Base setup: predator 8.5 rad/s, prey 10; cylinder setup: 10 for both."""
    pred_ms = 10.0 if cylinder_setup else 8.5
    return RobotSpec.predator(max_wheel_speed=pred_ms), RobotSpec.prey()


def arena_params(arena: ArenaConfig) -> np.ndarray:
    return np.array([
        arena.side,
        arena.cylinder_radius,
        1.0 if (arena.central_cylinder and arena.cylinder_occludes) else 0.0,
        arena.ir_range,
        arena.ground_sensor_radius,
        1.0 if arena.signed_rotation else 0.0,
    ])


def robot_params(robots) -> np.ndarray:
    """(2, 7) table: ms, body radius, wheel radius, axle track, x0, y0, heading0."""
    return np.array([
        [r.max_wheel_speed, r.body_radius, r.wheel_radius, r.axle_track, *r.start]
        for r in robots
    ])

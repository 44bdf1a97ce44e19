"""Deterministic 2D predator-prey arena."""
from .config import PREDATOR, PREY, ROLES, ArenaConfig, RobotSpec, default_robots
from .sim import (EpisodeOutcome, RobotState, TrajectoryLog, WorldState, assemble_sensors,
                  effective_max_speed, episode_fitness, ground_brightness, integrate_motion,
                  motor_to_wheel_speeds, read_camera, read_infrared, resolve_collisions, run_episode,
                  tiredness)

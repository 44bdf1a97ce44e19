"""Genotypes, mutation and the recurrent controller that drives each robot.

Gene layout (all float64, flat):

    sensory->hidden   n_sensory * n_hidden   (sensor-major: index s * n_hidden + h)
    hidden->hidden    n_hidden * n_hidden    (source-major: index j * n_hidden + h)
    hidden->motor     n_hidden * n_motor     (source-major)
    hidden biases     n_hidden
    motor biases      n_motor
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError

GENE_MIN = -5.0
GENE_MAX = 5.0


@dataclass(frozen=True)
class ControllerTopology:
    n_sensory: int = 25
    n_hidden: int = 10
    n_motor: int = 2

    def __post_init__(self):
        for name in ("n_sensory", "n_hidden", "n_motor"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1")

    @property
    def gene_count(self) -> int:
        s, h, m = self.n_sensory, self.n_hidden, self.n_motor
        return s * h + h * h + h * m + h + m


@dataclass(frozen=True, eq=False)
class Genotype:
    genes: np.ndarray
    id: int

    def __post_init__(self):
        genes = np.array(self.genes, dtype=np.float64)
        if genes.ndim != 1:
            raise ValueError("genes must be a flat sequence")
        if genes.size and (genes.min() < GENE_MIN or genes.max() > GENE_MAX):
            raise ValueError(f"genes must lie in [{GENE_MIN}, {GENE_MAX}]")
        genes.setflags(write=False)
        object.__setattr__(self, "genes", genes)
        object.__setattr__(self, "id", int(self.id))

    def __len__(self):
        return self.genes.size

    def __repr__(self):
        return f"Genotype(id={self.id}, len={self.genes.size})"


@dataclass(frozen=True, eq=False)
class ControllerState:
    hidden: np.ndarray

    @classmethod
    def reset(cls, topology: ControllerTopology) -> "ControllerState":
        return cls(np.zeros(topology.n_hidden))


def random_genotype(topology: ControllerTopology, rng: np.random.Generator, id: int = 0) -> Genotype:
    return Genotype(rng.uniform(GENE_MIN, GENE_MAX, topology.gene_count), id)


def mutate(parent: Genotype, rate: float, rng: np.random.Generator, child_id: int | None = None) -> Genotype:
    """Replace each gene with probability ``rate`` by a fresh uniform value.

    The child keeps the parent's id unless ``child_id`` is given; ids are
    handed out by whoever owns the population (see the engine).
    """
    if not 0.0 <= rate <= 1.0 or math.isnan(rate):
        raise ConfigurationError(f"mutation rate must be in [0, 1], got {rate}")
    n = parent.genes.size
    mask = rng.random(n) < rate
    fresh = rng.uniform(GENE_MIN, GENE_MAX, n)
    genes = np.where(mask, fresh, parent.genes)
    return Genotype(genes, parent.id if child_id is None else child_id)


def unpack(genes: np.ndarray, topology: ControllerTopology):
    """Split a flat gene vector into (w_sh, w_hh, w_hm, b_h, b_m) views."""
    s, h, m = topology.n_sensory, topology.n_hidden, topology.n_motor
    if genes.size != topology.gene_count:
        raise ValueError(f"genotype length {genes.size} does not match topology ({topology.gene_count})")
    i = 0
    w_sh = genes[i:i + s * h].reshape(s, h)
    i += s * h
    w_hh = genes[i:i + h * h].reshape(h, h)
    i += h * h
    w_hm = genes[i:i + h * m].reshape(h, m)
    i += h * m
    b_h = genes[i:i + h]
    i += h
    b_m = genes[i:i + m]
    return w_sh, w_hh, w_hm, b_h, b_m


@njit(cache=True, nogil=True)
def logistic(x):
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True, nogil=True)
def step_kernel(w_sh, w_hh, w_hm, b_h, b_m, hidden, sensory, new_hidden, motors):
    # Plain loops with a fixed summation order keep results bit-stable.
    n_s, n_h = w_sh.shape
    n_m = w_hm.shape[1]
    for h in range(n_h):
        acc = b_h[h]
        for s in range(n_s):
            acc += sensory[s] * w_sh[s, h]
        for j in range(n_h):
            acc += hidden[j] * w_hh[j, h]
        new_hidden[h] = logistic(acc)
    for m in range(n_m):
        acc = b_m[m]
        for h in range(n_h):
            acc += new_hidden[h] * w_hm[h, m]
        motors[m] = logistic(acc)


def network_step(genotype: Genotype, state: ControllerState, sensory, topology: ControllerTopology | None = None):
    """Advance the controller one control step.

    Returns ``(new_state, motors)`` where ``motors`` is an array of
    ``n_motor`` activations; for the default topology that is (tm, rm).
    """
    topology = topology or ControllerTopology()
    sensory = np.asarray(sensory, dtype=np.float64)
    if sensory.shape != (topology.n_sensory,):
        raise ValueError(f"expected {topology.n_sensory} sensory values, got {sensory.shape}")
    hidden = np.asarray(state.hidden, dtype=np.float64)
    if hidden.shape != (topology.n_hidden,):
        raise ValueError("controller state does not match topology")
    new_hidden = np.empty(topology.n_hidden)
    motors = np.empty(topology.n_motor)
    step_kernel(*unpack(genotype.genes, topology), hidden, sensory, new_hidden, motors)
    return ControllerState(new_hidden), motors

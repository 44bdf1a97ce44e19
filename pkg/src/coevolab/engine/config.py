from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..arena.config import ArenaConfig, RobotSpec, default_robots
from ..errors import ConfigurationError
from ..neuroctl import ControllerTopology


class Variant(str, Enum):
    STANDARD = "standard"
    SIMPLIFIED = "simplified"
    VANILLA = "vanilla"


def halving_rounds(N: int, n: int) -> int | None:
    """k such that N == n * 2**k, or None."""
    if n < 1 or N % n:
        return None
    q = N // n
    if q & (q - 1):
        return None
    return q.bit_length() - 1


@dataclass(frozen=True)
class EvolutionConfig:
    variant: Variant = Variant.STANDARD
    master_seed: int = 0
    N: int = 80
    n: int = 10
    nphases: int = 1500
    ngenerations: int = 100
    invert_every: int = 500
    mutation_rate: float = 0.02
    archive_every: int = 10000
    max_steps: int = 1000
    episodes_per_pair: int = 1
    arena: ArenaConfig = field(default_factory=ArenaConfig)
    robots: tuple = None
    topology: ControllerTopology = field(default_factory=ControllerTopology)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.robots is None:
            object.__setattr__(self, "robots", default_robots(self.arena.central_cylinder))
        self.validate()

    def validate(self):
        N, n = self.N, self.n
        if N < 1 or n < 1:
            raise ConfigurationError("N and n must be >= 1")
        if self.variant is Variant.VANILLA:
            if n != N:
                raise ConfigurationError(f"n: vanilla runs need n == N (got n={n}, N={N})")
        else:
            k = halving_rounds(N, n)
            if not n < N or k is None or k < 1:
                raise ConfigurationError(f"N: {N} is not of the form n*2^k with k >= 1 for n={n}")
        for name in ("nphases", "ngenerations", "invert_every", "archive_every", "max_steps",
                     "episodes_per_pair"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.invert_every % self.ngenerations:
            raise ConfigurationError("invert_every must be a multiple of ngenerations")
        if self.archive_every % self.ngenerations:
            raise ConfigurationError("archive_every must be a multiple of ngenerations")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigurationError("mutation_rate must be in [0, 1]")
        pred, prey = self.robots
        if not (isinstance(pred, RobotSpec) and pred.role == "predator" and prey.role == "prey"):
            raise ConfigurationError("robots must be (predator spec, prey spec)")

    @property
    def total_generations(self) -> int:
        return self.nphases * self.ngenerations

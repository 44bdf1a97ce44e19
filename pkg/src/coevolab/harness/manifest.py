"""Experiment manifests: one JSON file describes one replication."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..arena.config import ArenaConfig, RobotSpec
from ..engine.config import EvolutionConfig, halving_rounds
from ..errors import ConfigurationError
from ..neuroctl import ControllerTopology


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopologyModel(_Strict):
    n_sensory: int = Field(25, ge=1, description="sensory neurons; the arena produces exactly 25")
    n_hidden: int = Field(10, ge=1, description="recurrent hidden neurons")
    n_motor: int = Field(2, ge=1, description="motor neurons (tm, rm)")


class ArenaModel(_Strict):
    side: float = Field(3.0, gt=0, description="square arena side, m")
    central_cylinder: bool = Field(False, description="add the 0.1 m central cylinder")
    cylinder_diameter: float = Field(0.1, gt=0, description="cylinder diameter, m")
    cylinder_occludes: bool = Field(True, description="cylinder hides the opponent from the camera")
    ir_range: float = Field(0.12, gt=0, description="infrared range from the body surface, m")
    ground_sensor_radius: float = Field(0.06, ge=0, description="ground sensor offset from centre, m")
    sensor_noise: float = Field(0.0, ge=0, description="uniform additive sensor noise amplitude")
    signed_rotation: bool = Field(False, description="map rm to 2*rm - 1 (allows reversing)")


class RobotModel(_Strict):
    max_wheel_speed: Optional[float] = Field(
        None, gt=0, description="rad/s; default 8.5 predator / 10 prey, 10 for both with the cylinder")
    body_radius: float = Field(0.085, gt=0, description="m")
    wheel_radius: float = Field(0.029, gt=0, description="m")
    axle_track: float = Field(0.104, gt=0, description="m")
    start: Optional[tuple[float, float, float]] = Field(
        None, description="x, y, heading; default (-0.75, 0, 0) predator, (0.75, 0, pi) prey")


class ExperimentManifest(_Strict):
    variant: Literal["standard", "simplified", "vanilla"] = Field("standard", description="algorithm")
    master_seed: int = Field(0, ge=0, description="root of every random stream")
    N: int = Field(80, ge=1, description="population size")
    n: Optional[int] = Field(None, ge=1, description="agents/opponents per phase; default 10, N for vanilla")
    nphases: int = Field(1500, ge=1, description="number of phases")
    ngenerations: int = Field(100, ge=1, description="generations per phase")
    invert_every: int = Field(500, ge=1, description="swap evolving role every this many generations")
    mutation_rate: float = Field(0.02, ge=0, le=1, description="per-gene replacement probability")
    archive_every: int = Field(10000, ge=1, description="archive both populations every this many generations")
    max_steps: int = Field(1000, ge=1, description="episode length in 0.1 s steps")
    episodes_per_pair: int = Field(1, ge=1, description="episodes averaged per pairing (useful with noise)")
    checkpoint_every: int = Field(100, ge=0, description="generations between checkpoints (0 = only on stop)")
    topology: TopologyModel = Field(default_factory=TopologyModel)
    arena: ArenaModel = Field(default_factory=ArenaModel)
    predator: RobotModel = Field(default_factory=RobotModel)
    prey: RobotModel = Field(default_factory=RobotModel)
    output_dir: Optional[str] = Field(None, description="run directory; CLI --out overrides")
    workers: int = Field(1, ge=1, description="episode worker threads; never changes results")

    @model_validator(mode="after")
    def _check(self):
        if self.n is None:
            self.n = self.N if self.variant == "vanilla" else 10
        if self.variant == "vanilla":
            if self.n != self.N:
                raise ValueError(f"n: vanilla needs n == N (got n={self.n}, N={self.N})")
        else:
            k = halving_rounds(self.N, self.n)
            if not self.n < self.N or k is None or k < 1:
                raise ValueError(f"N: {self.N} is not n*2^k (k >= 1) for n={self.n}")
        if self.invert_every % self.ngenerations:
            raise ValueError("invert_every: must be a multiple of ngenerations")
        if self.archive_every % self.ngenerations:
            raise ValueError("archive_every: must be a multiple of ngenerations")
        return self

    # -- conversions -------------------------------------------------------
    def robot_specs(self) -> tuple[RobotSpec, RobotSpec]:
        cyl = self.arena.central_cylinder
        specs = []
        for role, model, ms in (("predator", self.predator, 10.0 if cyl else 8.5), ("prey", self.prey, 10.0)):
            kw = model.model_dump(exclude_none=True)
            kw.setdefault("max_wheel_speed", ms)
            specs.append(RobotSpec(role=role, **kw))
        return tuple(specs)

    def to_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            variant=self.variant, master_seed=self.master_seed, N=self.N, n=self.n,
            nphases=self.nphases, ngenerations=self.ngenerations, invert_every=self.invert_every,
            mutation_rate=self.mutation_rate, archive_every=self.archive_every, max_steps=self.max_steps,
            episodes_per_pair=self.episodes_per_pair, arena=ArenaConfig(**self.arena.model_dump()),
            robots=self.robot_specs(), topology=ControllerTopology(**self.topology.model_dump()))

    def science_dict(self) -> dict:
        """Everything that can change results (excludes paths, workers, checkpoint cadence)."""
        return self.model_dump(mode="json", exclude={"output_dir", "workers", "checkpoint_every"})

    def digest(self) -> bytes:
        canon = json.dumps(self.science_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).digest()

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _format_errors(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        msg = e["msg"].removeprefix("Value error, ")
        loc = ".".join(str(p) for p in e["loc"])
        parts.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(parts)


def parse_manifest(data: dict) -> ExperimentManifest:
    try:
        return ExperimentManifest.model_validate(data)
    except ValidationError as err:
        raise ConfigurationError(_format_errors(err)) from None


def load_manifest(path) -> ExperimentManifest:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path}: not valid JSON ({err})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: manifest must be a JSON object")
    return parse_manifest(data)

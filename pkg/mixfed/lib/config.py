"""Experiment configuration models and JSON loading."""

import json
import math
import os
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from .errors import ConfigError

DEFAULT_OUTPUT_DIR = Path("runs")
OUTPUT_DIR_VAR = "MIXFED_OUTPUT_DIR"

MAX_SEED = 2**64 - 1
PROBABILITY_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12


class FeatureMapSpec(BaseModel):
    """Identity map or graded monomial basis of total degree <= ``degree``."""
    kind: Literal["identity", "polynomial"] = "identity"
    degree: int = Field(1, ge=1)
    input_dim: int | None = Field(None, ge=1)

    def output_dim(self, d: int) -> int:
        """Length of φ(x); ``d`` is used when the identity map leaves input_dim open."""
        if self.kind == "identity":
            return self.input_dim or d
        raw = self.input_dim or 1
        return math.comb(raw + self.degree, self.degree)


class UniformSizes(BaseModel):
    kind: Literal["uniform"] = "uniform"
    low: int = Field(ge=1)
    high: int = Field(ge=1)

    @model_validator(mode="after")
    def ordered(self):
        if self.low > self.high:
            raise ValueError(f"uniform sizes need low <= high, got {self.low} > {self.high}")
        return self


class ZipfSizes(BaseModel):
    """Zipf(s) truncated to [n_min, n_max]."""
    kind: Literal["zipf"] = "zipf"
    s: float = Field(gt=0)
    n_min: int = Field(ge=1)
    n_max: int = Field(ge=1)

    @model_validator(mode="after")
    def ordered(self):
        if self.n_min > self.n_max:
            raise ValueError(f"zipf sizes need n_min <= n_max, got {self.n_min} > {self.n_max}")
        return self


class ConstantSizes(BaseModel):
    kind: Literal["constant"] = "constant"
    n: int = Field(ge=1)


SizeSpec = Annotated[Union[UniformSizes, ZipfSizes, ConstantSizes], Field(discriminator="kind")]


class MixtureConfig(BaseModel):
    """Mixture-of-regressions instance description."""
    k: int = Field(ge=1)
    d: int = Field(ge=1)
    M: int = Field(ge=1)
    sizes: list[int] | SizeSpec
    p: list[float] | None = None
    sigma: float = Field(0.0, ge=0)
    covariances: list[list[float]] | None = None
    alpha: float = Field(1.0, gt=0)
    beta: float = Field(1.0, gt=0)
    R: float = Field(1.0, gt=0)
    radius: float | None = Field(None, gt=0)
    thetas: list[list[float]] | None = None
    delta_target: float = Field(0.0, ge=0)
    feature_map: FeatureMapSpec = FeatureMapSpec()
    seed: int = Field(0, ge=0, le=MAX_SEED)

    @model_validator(mode="after")
    def check_invariants(self):
        if self.alpha > self.beta:
            raise ValueError(f"alpha ({self.alpha}) must not exceed beta ({self.beta})")

        if self.p is not None:
            if len(self.p) != self.k:
                raise ValueError(f"p has {len(self.p)} entries, expected k={self.k}")
            for j, pj in enumerate(self.p):
                if pj <= 0:
                    raise ValueError(f"zero-probability component: p[{j}] = {pj}")
            if abs(math.fsum(self.p) - 1.0) > PROBABILITY_TOLERANCE:
                raise ValueError(f"p must sum to 1, got {math.fsum(self.p)!r}")

        if isinstance(self.sizes, list):
            if len(self.sizes) != self.M:
                raise ValueError(f"sizes has {len(self.sizes)} entries, expected M={self.M}")
            for i, n in enumerate(self.sizes):
                if n < 1:
                    raise ValueError(f"data count n_i = {n} for client {i}; every client needs n_i >= 1")

        if self.covariances is not None:
            if self.feature_map.kind != "identity":
                raise ValueError("covariances can only be set with the identity feature map")
            if len(self.covariances) != self.k or any(len(c) != self.d for c in self.covariances):
                raise ValueError(f"covariances must be {self.k} diagonal vectors of length {self.d}")
            for j, diag in enumerate(self.covariances):
                for value in diag:
                    if not self.alpha <= value <= self.beta:
                        raise ValueError(
                            f"covariance bound violated: cluster {j} eigenvalue {value} "
                            f"outside [{self.alpha}, {self.beta}]"
                        )

        if self.radius is not None and self.radius > self.R:
            raise ValueError(f"radius {self.radius} exceeds the model norm bound R={self.R}")

        if self.thetas is not None:
            if len(self.thetas) != self.k or any(len(t) != self.d for t in self.thetas):
                raise ValueError(f"thetas must be {self.k} vectors of length {self.d}")
            for j, theta in enumerate(self.thetas):
                norm = math.sqrt(math.fsum(v * v for v in theta))
                if norm > self.R + NORM_TOLERANCE:
                    raise ValueError(f"theta {j} has norm {norm} > R={self.R}")

        if self.feature_map.output_dim(self.d) != self.d:
            raise ValueError(
                f"feature map produces {self.feature_map.output_dim(self.d)} features, d={self.d}"
            )
        return self

    @property
    def probabilities(self) -> np.ndarray:
        if self.p is None:
            return np.full(self.k, 1.0 / self.k)
        return np.asarray(self.p, dtype=float)

    @property
    def sphere_radius(self) -> float:
        return self.radius if self.radius is not None else self.R

    def covariance_diagonals(self) -> np.ndarray:
        """k x d array of diagonal covariances (default: identity clipped to [alpha, beta])."""
        if self.covariances is not None:
            return np.asarray(self.covariances, dtype=float)
        fill = min(max(1.0, self.alpha), self.beta)
        return np.full((self.k, self.d), fill)


class Phase1Config(BaseModel):
    """Federated moment descent parameters."""
    n_H: int = Field(ge=1)
    m: int = Field(ge=1)
    ell: int = Field(ge=1)
    T: int = Field(ge=0)
    T1: int = Field(ge=2)
    T2: int = Field(ge=1)
    epsilon: float = Field(gt=0, lt=0.25)
    delta_hint: float | None = Field(None, gt=0)
    alpha: float | None = Field(None, gt=0)
    beta: float | None = Field(None, gt=0)
    theta0: list[float] | None = None
    allow_data_reuse: bool = False
    min_local: int | None = Field(None, ge=2)

    @model_validator(mode="after")
    def check_invariants(self):
        if self.T1 % 2:
            raise ValueError(f"T1 must be even, got {self.T1}")
        if self.alpha is not None and self.beta is not None and self.alpha > self.beta:
            raise ValueError(f"alpha ({self.alpha}) must not exceed beta ({self.beta})")
        return self

    @property
    def required_local(self) -> int:
        """Minimum data count for an anchor."""
        if self.min_local is not None:
            return self.min_local
        if self.allow_data_reuse:
            return 2 * self.ell
        return 2 * self.ell * max(self.T, 1)


class Phase2Config(BaseModel):
    """FedX + clustering parameters."""
    mode: Literal["fedavg", "fedprox"] = "fedavg"
    eta: float = Field(gt=0)
    s: int = Field(1, ge=1)
    T_prime: int = Field(ge=0)
    tie_break: Literal["lowest-index"] = "lowest-index"


class ExperimentConfig(BaseModel):
    """Top-level experiment document."""
    mixture: MixtureConfig
    phase1: Phase1Config
    phase2: Phase2Config
    seeds: list[int] = Field(min_length=1)
    output_dir: Path | None = None
    emit_instance: bool = False
    c_cal: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def check_consistency(self):
        for seed in self.seeds:
            if not 0 <= seed <= MAX_SEED:
                raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
        theta0 = self.phase1.theta0
        if theta0 is not None and len(theta0) != self.mixture.d:
            raise ValueError(f"phase1.theta0 has length {len(theta0)}, mixture d={self.mixture.d}")
        return self

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Copy with a single seed, re-validated."""
        return ExperimentConfig.model_validate({**self.model_dump(), "seeds": [seed]})


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config from JSON.

    Raises:
        ConfigError: If the file is missing, is not JSON, or fails validation
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e


def resolve_output_dir(cfg: ExperimentConfig | None = None, override: str | Path | None = None) -> Path:
    """Output directory priority: explicit override, config, $MIXFED_OUTPUT_DIR, ./runs."""
    if override is not None:
        return Path(override)
    if cfg is not None and cfg.output_dir is not None:
        return cfg.output_dir
    env = os.environ.get(OUTPUT_DIR_VAR)
    if env:
        return Path(env)
    return DEFAULT_OUTPUT_DIR

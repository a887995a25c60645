"""Mixture-of-regressions data model and synthetic instance generator.

Client i holds n_i points (φ(x_ij), y_ij) with

    y_ij = <φ(x_ij), θ*_{z_i}> + noise_ij

where the hidden label z_i is drawn from p. Labels are 0-based.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from typing import Any

import numpy as np

from .config import ConstantSizes, FeatureMapSpec, MixtureConfig, UniformSizes, ZipfSizes
from .errors import ConfigError, DimensionError, InsufficientDataError
from .rng import Stream, stream

logger = logging.getLogger(__name__)

MAX_CENTER_DRAWS = 10_000


# ═══════════════════════════════════════════════════════════════════════════════
# Domain types
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass
class ClientDataset:
    """One client's local data."""
    index: int
    features: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.responses = np.asarray(self.responses, dtype=float)
        if self.features.ndim != 2:
            raise DimensionError(f"client {self.index}: features must be 2-D, got {self.features.shape}")
        if self.responses.shape != (self.features.shape[0],):
            raise DimensionError(
                f"client {self.index}: {self.features.shape[0]} feature rows but "
                f"responses have shape {self.responses.shape}"
            )
        if self.features.shape[0] < 1:
            raise InsufficientDataError(f"points on client {self.index}", 1, 0)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass
class GroundTruth:
    """True models, proportions and hidden labels of a generated instance.

    ``covariances`` holds E[φφᵀ] per cluster: k x d diagonals, or k x d x d
    full matrices when the feature map is polynomial.
    """
    thetas: np.ndarray
    labels: np.ndarray
    delta: float
    p_min: float
    p: np.ndarray
    covariances: np.ndarray
    sizes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def k(self) -> int:
        return self.thetas.shape[0]

    @property
    def d(self) -> int:
        return self.thetas.shape[1]

    @property
    def M(self) -> int:
        return self.labels.shape[0]

    def apply_covariance(self, label: int, vector) -> np.ndarray:
        """Σ_label · vector for diagonal or full covariances."""
        cov = self.covariances[label]
        vector = np.asarray(vector, dtype=float)
        return cov @ vector if cov.ndim == 2 else cov * vector

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "d": self.d,
            "M": self.M,
            "thetas": self.thetas.tolist(),
            "labels": self.labels.tolist(),
            "delta": self.delta,
            "p_min": self.p_min,
            "p": self.p.tolist(),
            "covariances": self.covariances.tolist(),
            "sizes": self.sizes.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GroundTruth":
        return cls(
            thetas=np.asarray(data["thetas"], dtype=float),
            labels=np.asarray(data["labels"], dtype=np.int64),
            delta=float(data["delta"]),
            p_min=float(data["p_min"]),
            p=np.asarray(data["p"], dtype=float),
            covariances=np.asarray(data["covariances"], dtype=float),
            sizes=np.asarray(data.get("sizes", []), dtype=np.int64),
        )


# ═══════════════════════════════════════════════════════════════════════════════
# Feature maps
# ═══════════════════════════════════════════════════════════════════════════════


def _monomials(input_dim: int, degree: int) -> list[tuple[int, ...]]:
    """Graded monomial exponents: constant, then degree 1 in variable order, ..."""
    terms: list[tuple[int, ...]] = []
    for deg in range(degree + 1):
        terms.extend(combinations_with_replacement(range(input_dim), deg))
    return terms


def feature_map(raw_point, spec: FeatureMapSpec) -> np.ndarray:
    """Map one raw point to φ(x).

    Raises:
        DimensionError: If the raw point does not match the map's input dimension
    """
    x = np.atleast_1d(np.asarray(raw_point, dtype=float))
    if x.ndim != 1:
        raise DimensionError(f"raw point must be a vector, got shape {x.shape}")
    return feature_matrix(x[None, :], spec)[0]


def feature_matrix(raw: np.ndarray, spec: FeatureMapSpec) -> np.ndarray:
    """Row-wise :func:`feature_map` for an n x input_dim array."""
    raw = np.asarray(raw, dtype=float)
    if spec.kind == "identity":
        if spec.input_dim is not None and raw.shape[1] != spec.input_dim:
            raise DimensionError(f"identity map expects {spec.input_dim} inputs, got {raw.shape[1]}")
        return raw.copy()
    input_dim = spec.input_dim or 1
    if raw.shape[1] != input_dim:
        raise DimensionError(f"polynomial map expects {input_dim} inputs, got {raw.shape[1]}")
    columns = [np.prod(raw[:, list(term)], axis=1) for term in _monomials(input_dim, spec.degree)]
    return np.column_stack(columns)


def _gaussian_moment(powers) -> float:
    """E[∏ x_i^{a_i}] for independent standard normal x_i."""
    if any(a % 2 for a in powers):
        return 0.0
    return float(math.prod(math.prod(range(a - 1, 0, -2)) for a in powers))


def feature_second_moment(spec: FeatureMapSpec) -> np.ndarray:
    """E[φ(x)φ(x)ᵀ] for a polynomial map of x ~ N(0, I)."""
    input_dim = spec.input_dim or 1
    powers = np.array([
        np.bincount(np.asarray(term, dtype=np.int64), minlength=input_dim)
        for term in _monomials(input_dim, spec.degree)
    ])
    size = powers.shape[0]
    return np.array([[_gaussian_moment(powers[s] + powers[t]) for t in range(size)] for s in range(size)])


# ═══════════════════════════════════════════════════════════════════════════════
# Generation
# ═══════════════════════════════════════════════════════════════════════════════


def min_separation(thetas) -> float:
    """Minimum Euclidean distance over unordered pairs of centers."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[0] < 2:
        raise InsufficientDataError("cluster centers for a separation", 2, 0 if thetas.ndim != 2 else thetas.shape[0])
    return min(
        float(np.linalg.norm(thetas[a] - thetas[b]))
        for a, b in combinations(range(thetas.shape[0]), 2)
    )


def sample_sizes(cfg: MixtureConfig) -> np.ndarray:
    """Per-client data counts n_i."""
    spec = cfg.sizes
    if isinstance(spec, list):
        return np.asarray(spec, dtype=np.int64)
    rng = stream(cfg.seed, Stream.SIZES)
    if isinstance(spec, ConstantSizes):
        return np.full(cfg.M, spec.n, dtype=np.int64)
    if isinstance(spec, UniformSizes):
        return rng.integers(spec.low, spec.high, endpoint=True, size=cfg.M).astype(np.int64)
    if isinstance(spec, ZipfSizes):
        support = np.arange(spec.n_min, spec.n_max + 1)
        weights = support.astype(float) ** (-spec.s)
        return rng.choice(support, size=cfg.M, p=weights / weights.sum()).astype(np.int64)
    raise ConfigError(f"Unknown size spec: {spec!r}")


def sample_labels(cfg: MixtureConfig) -> np.ndarray:
    """Hidden labels z_i drawn i.i.d. from p."""
    rng = stream(cfg.seed, Stream.LABELS)
    return rng.choice(cfg.k, size=cfg.M, p=cfg.probabilities).astype(np.int64)


def sample_centers(cfg: MixtureConfig) -> np.ndarray:
    """θ*_j uniform on the sphere, resampled until the separation target is met."""
    if cfg.thetas is not None:
        return np.asarray(cfg.thetas, dtype=float)
    rng = stream(cfg.seed, Stream.CENTERS)
    radius = cfg.sphere_radius
    for attempt in range(MAX_CENTER_DRAWS):
        g = rng.standard_normal((cfg.k, cfg.d))
        thetas = radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        if cfg.k < 2 or min_separation(thetas) >= cfg.delta_target:
            logger.debug("Centers accepted after %d draws", attempt + 1)
            return thetas
    raise ConfigError(
        f"No center draw on the radius-{radius} sphere reached separation "
        f"{cfg.delta_target} in {MAX_CENTER_DRAWS} attempts"
    )


def _client_data(cfg: MixtureConfig, index: int, n: int, theta: np.ndarray, cov: np.ndarray) -> ClientDataset:
    rng = stream(cfg.seed, Stream.CLIENT, index)
    if cfg.feature_map.kind == "identity":
        features = rng.standard_normal((n, cfg.d)) * np.sqrt(cov)
    else:
        raw = rng.standard_normal((n, cfg.feature_map.input_dim or 1))
        features = feature_matrix(raw, cfg.feature_map)
    noise = rng.standard_normal(n)
    responses = features @ theta
    if cfg.sigma > 0:
        responses = responses + cfg.sigma * noise
    return ClientDataset(index=index, features=features, responses=responses)


def generate_instance(cfg: MixtureConfig) -> tuple[list[ClientDataset], GroundTruth]:
    """Draw a full instance; bit-identical for identical configs."""
    sizes = sample_sizes(cfg)
    if np.any(sizes < 1):
        bad = int(np.argmin(sizes))
        raise InsufficientDataError(f"points on client {bad}", 1, int(sizes[bad]))
    thetas = sample_centers(cfg)
    labels = sample_labels(cfg)
    covariances = cfg.covariance_diagonals()
    if cfg.feature_map.kind == "polynomial":
        moment = feature_second_moment(cfg.feature_map)
        covariances = np.broadcast_to(moment, (cfg.k, *moment.shape)).copy()

    clients = [
        _client_data(cfg, i, int(sizes[i]), thetas[labels[i]], covariances[labels[i]])
        for i in range(cfg.M)
    ]

    if cfg.k >= 2:
        delta = min_separation(thetas)
    else:
        delta = cfg.delta_target if cfg.delta_target > 0 else cfg.sphere_radius
    p = cfg.probabilities
    truth = GroundTruth(
        thetas=thetas,
        labels=labels,
        delta=delta,
        p_min=float(p.min()),
        p=p,
        covariances=covariances,
        sizes=sizes,
    )
    logger.info("Generated instance: k=%d d=%d M=%d N=%d delta=%.4g", cfg.k, cfg.d, cfg.M, int(sizes.sum()), delta)
    return clients, truth

"""Evaluation quantities: permutation-invariant distance, quantity skew, clustering errors."""

import math
from dataclasses import asdict, dataclass
from itertools import permutations
from typing import Any, Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError, UnsupportedSizeError
from .model import GroundTruth

MAX_BRUTE_FORCE_K = 10


@dataclass
class EvalReport:
    distance: float
    best_permutation: list[int]
    misclustering_mass: float
    chi2: float
    per_cluster_mass: list[float]
    rho: float
    nu_uniform_term: float
    pe_sum_term: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        return cls(**{name: data[name] for name in cls.__dataclass_fields__})


def permutation_distance(est_thetas, true_thetas) -> tuple[float, tuple[int, ...]]:
    """min over π of max_j ‖θ̂_{π(j)} − θ*_j‖, with the minimizing π.

    π maps a true index to an estimated index. Ties keep the
    lexicographically smallest π.
    """
    est = np.asarray(est_thetas, dtype=float)
    true = np.asarray(true_thetas, dtype=float)
    if est.shape != true.shape or est.ndim != 2:
        raise DimensionError(f"model sets differ in shape: {est.shape} vs {true.shape}")
    k = true.shape[0]
    if k > MAX_BRUTE_FORCE_K:
        raise UnsupportedSizeError(k, MAX_BRUTE_FORCE_K)
    pairwise = np.linalg.norm(est[:, None, :] - true[None, :, :], axis=2)

    best = math.inf
    best_perm: tuple[int, ...] = tuple(range(k))
    for perm in permutations(range(k)):
        value = max(pairwise[perm[j], j] for j in range(k))
        if value < best:
            best, best_perm = value, perm
    return float(best), best_perm


def chi_squared_skew(sizes: Sequence[int]) -> float:
    """χ² divergence of the data-mass distribution n_i/N from uniform over clients."""
    n = np.asarray(sizes, dtype=float)
    if n.size == 0:
        raise InsufficientDataError("clients for a quantity-skew measure", 1, 0)
    if np.any(n < 1):
        raise DimensionError("every client size must be >= 1")
    M = n.size
    return float(M * np.sum((n / n.sum() - 1.0 / M) ** 2))


def misclustering_mass(est_labels, truth, permutation: Sequence[int], sizes) -> float:
    """Data mass of clients with est_i ≠ π(z_i), as a fraction of N."""
    true_labels = truth.labels if isinstance(truth, GroundTruth) else np.asarray(truth)
    est = np.asarray(est_labels)
    n = np.asarray(sizes, dtype=float)
    if not (est.shape == true_labels.shape == n.shape):
        raise DimensionError(
            f"label and size arrays differ in length: {est.shape}, {true_labels.shape}, {n.shape}"
        )
    aligned = np.asarray(permutation)[true_labels]
    return float(n[est != aligned].sum() / n.sum())


def predicted_error_prob(n_i: float, k: int, delta: float, sigma: float, c_cal: float = 1.0) -> float:
    """p_e(n) = min(1, 4k·exp(−c·n·(1 ∧ Δ²/σ²)²)); the ratio term is 1 when σ = 0."""
    ratio = 1.0 if sigma == 0 else min(1.0, delta**2 / sigma**2)
    return min(1.0, 4 * k * math.exp(-c_cal * n_i * ratio**2))


def residual_norm(covariance, theta_star, theta) -> float:
    """‖Σ(θ* − θ)‖ for a diagonal (vector) or full covariance."""
    cov = np.asarray(covariance, dtype=float)
    diff = np.asarray(theta_star, dtype=float) - np.asarray(theta, dtype=float)
    if cov.shape[0] != diff.shape[0]:
        raise DimensionError(f"covariance {cov.shape} does not match θ {diff.shape}")
    return float(np.linalg.norm(cov @ diff if cov.ndim == 2 else cov * diff))


def evaluate(
    est_thetas,
    est_labels,
    truth: GroundTruth,
    sizes=None,
    sigma: float = 0.0,
    c_cal: float = 1.0,
) -> EvalReport:
    """Every report quantity for a final model and per-client labels."""
    n = np.asarray(truth.sizes if sizes is None else sizes, dtype=float)
    distance, perm = permutation_distance(est_thetas, truth.thetas)
    N = n.sum()
    per_cluster = [float(n[truth.labels == j].sum() / N) for j in range(truth.k)]
    chi2 = chi_squared_skew(n)
    nu = math.sqrt(truth.d * truth.k * math.log(truth.k) / truth.M * (chi2 + 1.0))
    pe_sum = float(sum(ni * predicted_error_prob(ni, truth.k, truth.delta, sigma, c_cal) for ni in n) / N)
    return EvalReport(
        distance=distance,
        best_permutation=list(perm),
        misclustering_mass=misclustering_mass(est_labels, truth.labels, perm, n),
        chi2=chi2,
        per_cluster_mass=per_cluster,
        rho=min(per_cluster),
        nu_uniform_term=nu,
        pe_sum_term=pe_sum,
    )

"""Federated orthogonal iteration over clients' residual pairs.

Each participating client i holds pairs (a_ij, b_ij) of residual vectors
ε(x, y, θ) = (y − <φ(x), θ>)·φ(x) computed at two of its points. The
server never sees the pairs; it only sums the clients' d x k messages.
The iteration estimates the top-k left singular subspace of

    Y = Σ_i w_i (1/n_i) Σ_j a_ij b_ijᵀ
"""

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .comm import CommLedger
from .config import PROBABILITY_TOLERANCE
from .errors import (
    ConfigError,
    DegenerateRoundError,
    DimensionError,
    InsufficientDataError,
    RankDeficiencyError,
    WeightSumError,
)
from .linalg import OrthonormalBasis, qr_orthonormalize, random_orthonormal
from .model import ClientDataset, GroundTruth

logger = logging.getLogger(__name__)


def residual_pair(point, theta) -> np.ndarray:
    """ε(x, y, θ) for one point given as (φ(x), y)."""
    features, response = point
    features = np.asarray(features, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if features.shape != theta.shape or features.ndim != 1:
        raise DimensionError(f"feature vector {features.shape} does not match θ {theta.shape}")
    return (float(response) - float(features @ theta)) * features


def residuals(features: np.ndarray, responses: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Row-wise ε for an n x d feature matrix."""
    features = np.asarray(features, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if features.ndim != 2 or features.shape[1] != theta.shape[0]:
        raise DimensionError(f"features {features.shape} do not match θ {theta.shape}")
    return (np.asarray(responses, dtype=float) - features @ theta)[:, None] * features


@dataclass
class ResidualPairProvider:
    """Residual pairs grouped by client, in ascending client order.

    ``a`` and ``b`` stack every pair row-wise; client c owns rows
    ``offsets[c]:offsets[c] + counts[c]``.
    """
    a: np.ndarray
    b: np.ndarray
    counts: np.ndarray
    weights: np.ndarray
    client_indices: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.counts.size == 0:
            raise InsufficientDataError("clients for orthogonal iteration", 1, 0)
        if self.a.shape != self.b.shape or self.a.ndim != 2:
            raise DimensionError(f"pair arrays disagree: {self.a.shape} vs {self.b.shape}")
        if np.any(self.counts < 1) or int(self.counts.sum()) != self.a.shape[0]:
            raise DimensionError("every client needs at least one pair and counts must cover all rows")
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise WeightSumError(total)

    @property
    def d(self) -> int:
        return self.a.shape[1]

    @property
    def num_clients(self) -> int:
        return self.counts.size

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.counts)[:-1]))

    @classmethod
    def from_clients(
        cls,
        clients: Sequence[ClientDataset],
        theta: np.ndarray,
        pairs_per_client: int | None = 1,
    ) -> "ResidualPairProvider":
        """Pair points (2j, 2j+1) on every client; ``None`` uses all full pairs.

        Weights are w_i = n_i / Σ n_i with n_i the client's pair count.
        """
        return PairCohort.from_clients(clients, pairs_per_client).provider(theta)

    def client_messages(self, Q: np.ndarray, transpose: bool) -> np.ndarray:
        """Per-client (1/n_i) Σ_j b aᵀ Q (``transpose``) or a bᵀ Q, shape clients x d x k."""
        left, right = (self.b, self.a) if transpose else (self.a, self.b)
        coeffs = right @ Q
        outer = left[:, :, None] * coeffs[:, None, :]
        sums = np.add.reduceat(outer, self.offsets, axis=0)
        return sums / self.counts[:, None, None]

    def aggregate(self, messages: np.ndarray) -> np.ndarray:
        """Weighted sum of client messages in ascending client order."""
        # axis-0 reduction adds client rows one after another
        return np.add.reduce(self.weights[:, None, None] * messages, axis=0)

    def assembled_matrix(self) -> np.ndarray:
        """Y = Σ_i w_i (1/n_i) Σ_j a_ij b_ijᵀ."""
        scale = np.repeat(self.weights / self.counts, self.counts)
        return (self.a * scale[:, None]).T @ self.b


@dataclass
class PairCohort:
    """Raw pair points of a client cohort, stacked once for many iterates.

    Rows 2j and 2j+1 of ``features``/``responses`` form pair j.
    """
    features: np.ndarray
    responses: np.ndarray
    counts: np.ndarray
    client_indices: np.ndarray

    @classmethod
    def from_clients(cls, clients: Sequence[ClientDataset], pairs_per_client: int | None = 1) -> "PairCohort":
        features, responses, counts = [], [], []
        for client in clients:
            available = client.n // 2
            count = available if pairs_per_client is None else pairs_per_client
            if count < 1 or count > available:
                raise InsufficientDataError(f"points on client {client.index}", 2 * max(count, 1), client.n)
            features.append(client.features[: 2 * count])
            responses.append(client.responses[: 2 * count])
            counts.append(count)
        if not counts:
            raise InsufficientDataError("clients for orthogonal iteration", 1, 0)
        return cls(
            features=np.vstack(features),
            responses=np.concatenate(responses),
            counts=np.asarray(counts, dtype=np.int64),
            client_indices=np.asarray([c.index for c in clients], dtype=np.int64),
        )

    def provider(self, theta: np.ndarray) -> ResidualPairProvider:
        """Residual pairs of the whole cohort at θ."""
        eps = residuals(self.features, self.responses, theta)
        return ResidualPairProvider(
            a=eps[0::2],
            b=eps[1::2],
            counts=self.counts,
            weights=self.counts / self.counts.sum(),
            client_indices=self.client_indices,
        )


def federated_orthogonal_iteration(
    provider: ResidualPairProvider,
    k: int,
    T1: int,
    seed=None,
    ledger: CommLedger | None = None,
    start: OrthonormalBasis | None = None,
) -> OrthonormalBasis:
    """Estimate the top-k left singular subspace of the provider's Y.

    Even rounds: clients return (1/n_i) Σ_j b_ij a_ijᵀ Q_t, the server sums.
    Odd rounds: clients return (1/n_i) Σ_j a_ij b_ijᵀ Q_t, the server sums
    and orthonormalizes.

    Raises:
        DegenerateRoundError: If an odd round's sum is rank-deficient
    """
    if T1 < 2 or T1 % 2:
        raise ConfigError(f"T1 must be a positive even count, got {T1}")
    if not 1 <= k <= provider.d:
        raise DimensionError(f"k={k} out of range for dimension {provider.d}")

    Q = (start if start is not None else random_orthonormal(provider.d, k, seed)).columns
    basis_reals = provider.d * k
    for t in range(T1):
        summed = provider.aggregate(provider.client_messages(Q, transpose=(t % 2 == 0)))
        if ledger is not None:
            ledger.record(up_reals=basis_reals * provider.num_clients, down_reals=basis_reals)
        if t % 2 == 0:
            Q = summed
            continue
        try:
            Q = qr_orthonormalize(summed).columns
        except RankDeficiencyError as e:
            logger.debug("Orthogonal iteration degenerate at round %d", t)
            raise DegenerateRoundError(t, e.smallest, e.largest) from e
    return OrthonormalBasis(Q)


def expected_moment_matrix(theta, truth: GroundTruth, covariances=None) -> np.ndarray:
    """E[Y] = Σ_j p_j Σ_j (θ*_j − θ)(θ*_j − θ)ᵀ Σ_j for diagonal or full Σ_j."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (truth.d,):
        raise DimensionError(f"θ has shape {theta.shape}, expected ({truth.d},)")
    if covariances is not None:
        truth = replace(truth, covariances=np.asarray(covariances, dtype=float))
    if truth.covariances.shape not in ((truth.k, truth.d), (truth.k, truth.d, truth.d)):
        raise DimensionError(
            f"covariances have shape {truth.covariances.shape}, expected ({truth.k}, {truth.d}) "
            f"or ({truth.k}, {truth.d}, {truth.d})"
        )
    result = np.zeros((truth.d, truth.d))
    for j in range(truth.k):
        v = truth.apply_covariance(j, truth.thetas[j] - theta)
        result += truth.p[j] * np.outer(v, v)
    return result

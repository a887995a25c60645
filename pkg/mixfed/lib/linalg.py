"""Dense linear-algebra primitives shared by both phases."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateRoundError, DimensionError, RankDeficiencyError

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12
ORTHONORMAL_TOLERANCE = 1e-10
START_TOLERANCE = 1e-12


@dataclass
class OrthonormalBasis:
    """d x r matrix with orthonormal columns."""
    columns: np.ndarray

    def __post_init__(self):
        self.columns = np.asarray(self.columns, dtype=float)
        if self.columns.ndim != 2 or self.columns.shape[1] > self.columns.shape[0]:
            raise DimensionError(f"basis must be d x r with r <= d, got {self.columns.shape}")
        err = np.linalg.norm(self.columns.T @ self.columns - np.eye(self.r), 2)
        if err > ORTHONORMAL_TOLERANCE:
            raise DimensionError(f"columns are not orthonormal (||Q^T Q - I|| = {err:.3e})")

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def r(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T


def householder_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR of a tall matrix by Householder reflections, diag(R) >= 0.

    First pass applies the reflectors to R; second pass accumulates Q
    backwards as H_0 H_1 ... H_{n-1} I.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] > A.shape[0]:
        raise DimensionError(f"householder_qr expects a tall matrix, got shape {A.shape}")
    m, n = A.shape
    R = A.copy()
    reflectors: list[np.ndarray | None] = []
    for i in range(min(n, m - 1)):
        x = R[i:, i]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            reflectors.append(None)
            continue
        v = x.copy()
        v[0] += (1.0 if x[0] >= 0 else -1.0) * normx
        v /= np.linalg.norm(v)
        reflectors.append(v)
        R[i:, i:] -= 2.0 * v[:, None] * (v @ R[i:, i:])

    Q = np.eye(m, n)
    for j in range(len(reflectors) - 1, -1, -1):
        v = reflectors[j]
        if v is None:
            continue
        Q[j:, :] -= 2.0 * v[:, None] * (v @ Q[j:, :])

    R = np.triu(R[:n, :])
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def qr_orthonormalize(A: np.ndarray) -> OrthonormalBasis:
    """Orthonormal basis for the column span of ``A``.

    Raises:
        RankDeficiencyError: If the smallest singular value is at most
            1e-12 times the largest
    """
    A = np.asarray(A, dtype=float)
    singular = np.linalg.svd(A, compute_uv=False)
    largest = float(singular[0]) if singular.size else 0.0
    smallest = float(singular[-1]) if singular.size else 0.0
    if largest == 0.0 or smallest <= RANK_TOLERANCE * largest:
        raise RankDeficiencyError(smallest, largest)
    Q, _ = householder_qr(A)
    return OrthonormalBasis(Q)


@dataclass
class PowerResult:
    """Leading eigenpair estimate of a PSD operator."""
    vector: np.ndarray
    value: float
    degenerate: bool = False

    @property
    def sigma(self) -> float:
        """Square root of the Rayleigh value, clamped at zero."""
        return float(np.sqrt(max(self.value, 0.0)))


def power_iteration(op: np.ndarray, T2: int, seed=None) -> PowerResult:
    """Run ``T2`` power steps on a symmetric PSD matrix from a seeded start.

    ``value`` is the Rayleigh quotient of the final unit iterate. Applied to
    A Aᵀ it is the squared leading singular value of A.
    """
    op = np.asarray(op, dtype=float)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] < 1:
        raise DimensionError(f"power_iteration needs a square operator, got shape {op.shape}")
    if T2 < 1:
        raise ConfigError(f"T2 must be >= 1, got {T2}")
    rng = np.random.default_rng(seed)
    r = op.shape[0]

    v = rng.standard_normal(r)
    if np.linalg.norm(v) < START_TOLERANCE:
        v = rng.standard_normal(r)
    v /= np.linalg.norm(v)

    if not np.any(op):
        return PowerResult(vector=v, value=0.0, degenerate=True)

    for _ in range(T2):
        w = op @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            logger.debug("Power iterate fell into the null space")
            return PowerResult(vector=v, value=0.0, degenerate=True)
        v = w / norm
    return PowerResult(vector=v, value=float(v @ op @ v))


def dense_top_k_left_singular(A: np.ndarray, k: int) -> OrthonormalBasis:
    """Exact top-k left singular vectors via a full SVD."""
    A = np.asarray(A, dtype=float)
    if not 1 <= k <= min(A.shape):
        raise DimensionError(f"k={k} out of range for a {A.shape[0]} x {A.shape[1]} matrix")
    U, _, _ = np.linalg.svd(A)
    return OrthonormalBasis(U[:, :k])


def random_orthonormal(d: int, k: int, seed=None) -> OrthonormalBasis:
    """Seeded random d x k orthonormal start."""
    if not 1 <= k <= d:
        raise DimensionError(f"k={k} out of range for dimension {d}")
    rng = np.random.default_rng(seed)
    return qr_orthonormalize(rng.standard_normal((d, k)))


def projector_distance(P, Q) -> float:
    """Spectral norm of P Pᵀ − Q Qᵀ."""
    p = P.columns if isinstance(P, OrthonormalBasis) else np.asarray(P, dtype=float)
    q = Q.columns if isinstance(Q, OrthonormalBasis) else np.asarray(Q, dtype=float)
    if p.shape[0] != q.shape[0]:
        raise DimensionError(f"bases live in different dimensions: {p.shape[0]} vs {q.shape[0]}")
    return float(np.linalg.norm(p @ p.T - q @ q.T, 2))


def orthogonal_iteration(
    Y: np.ndarray,
    k: int,
    rounds: int,
    seed=None,
    start: OrthonormalBasis | None = None,
) -> OrthonormalBasis:
    """Central orthogonal iteration on Y Yᵀ.

    Even rounds map Q to Yᵀ Q; odd rounds orthonormalize Y Q.

    Raises:
        DegenerateRoundError: If an odd round's product is rank-deficient
    """
    Y = np.asarray(Y, dtype=float)
    if rounds % 2:
        raise ConfigError(f"orthogonal iteration needs an even round count, got {rounds}")
    d = Y.shape[0]
    Q = (start if start is not None else random_orthonormal(d, k, seed)).columns
    for t in range(rounds):
        if t % 2 == 0:
            Q = Y.T @ Q
        else:
            try:
                Q = qr_orthonormalize(Y @ Q).columns
            except RankDeficiencyError as e:
                raise DegenerateRoundError(t, e.smallest, e.largest) from e
    return OrthonormalBasis(Q)

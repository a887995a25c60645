"""Phase 2: iterative hard clustering with FedAvg or FedProx local updates.

Every round the server broadcasts the k models; each client picks the model
with the smallest local square loss, refines only that slot, and the server
averages the reports with weights n_i / N.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np

from .comm import CommLedger, phase2_round_reals
from .config import PROBABILITY_TOLERANCE, Phase2Config
from .errors import DimensionError, DivergenceError, InsufficientDataError, WeightSumError
from .metrics import misclustering_mass, permutation_distance
from .model import ClientDataset, GroundTruth

logger = logging.getLogger(__name__)

Mode = Literal["fedavg", "fedprox"]


@dataclass
class GlobalModel:
    """The k cluster models held by the server after ``round`` rounds."""
    thetas: np.ndarray
    round: int = 0

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        if self.thetas.ndim != 2:
            raise DimensionError(f"global model must be k x d, got {self.thetas.shape}")
        if not np.all(np.isfinite(self.thetas)):
            raise DivergenceError(self.round)

    @property
    def k(self) -> int:
        return self.thetas.shape[0]

    def to_dict(self) -> dict[str, Any]:
        return {"thetas": self.thetas.tolist(), "round": self.round}


@dataclass
class LocalReport:
    """A client's k-slot upload; only ``label``'s slot differs from the broadcast."""
    client_index: int
    label: int
    thetas: np.ndarray
    n: int
    weight: float | None = None
    unstable: bool = False


@dataclass
class Phase2Result:
    model: GlobalModel
    labels: np.ndarray
    client_thetas: np.ndarray
    trace: list[dict[str, Any]] = field(default_factory=list)
    ledger: CommLedger = field(default_factory=CommLedger)
    unstable: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "labels": self.labels.tolist(),
            "unstable": self.unstable,
            "comm": self.ledger.to_dict(),
        }


# ═══════════════════════════════════════════════════════════════════════════════
# Client side
# ═══════════════════════════════════════════════════════════════════════════════


def estimate_label(client: ClientDataset, model: GlobalModel) -> int:
    """argmin_j ‖y − Fθ_j‖; ties go to the lowest index."""
    losses = np.linalg.norm(client.responses[:, None] - client.features @ model.thetas.T, axis=0)
    return int(np.argmin(losses))


def client_gamma(client: ClientDataset, eta: float) -> float:
    """γ_i = η‖F_i‖₂² / n_i."""
    return eta * float(np.linalg.norm(client.features, 2)) ** 2 / client.n


def stability_gamma(clients: Sequence[ClientDataset], eta: float) -> float:
    """γ = max_i γ_i; FedAvg needs γ < 1."""
    return max(client_gamma(c, eta) for c in clients)


def _report(client: ClientDataset, model: GlobalModel, label: int, theta: np.ndarray, N, unstable=False):
    thetas = model.thetas.copy()
    thetas[label] = theta
    return LocalReport(
        client_index=client.index,
        label=label,
        thetas=thetas,
        n=client.n,
        weight=None if N is None else client.n / N,
        unstable=unstable,
    )


def local_fedavg(
    client: ClientDataset, model: GlobalModel, label: int, eta: float, s: int, N: int | None = None
) -> LocalReport:
    """s gradient steps θ ← θ − (η/n_i)Fᵀ(Fθ − y) on the labelled slot."""
    F, y = client.features, client.responses
    rate = eta / client.n
    theta = model.thetas[label].copy()
    for _ in range(s):
        theta = theta - rate * (F.T @ (F @ theta - y))
    unstable = client_gamma(client, eta) >= 1.0
    return _report(client, model, label, theta, N, unstable)


def local_fedprox(
    client: ClientDataset, model: GlobalModel, label: int, eta: float, N: int | None = None
) -> LocalReport:
    """Proximal step: argmin_θ' (1/2n_i)‖Fθ' − y‖²·η + ½‖θ' − θ‖².

    Solved in d x d form when n_i >= d, else through the n_i x n_i
    push-through form θ − (η/n_i)Fᵀ(I + (η/n_i)FFᵀ)⁻¹(Fθ − y).
    """
    F, y = client.features, client.responses
    rate = eta / client.n
    theta = model.thetas[label]
    n, d = F.shape
    if n >= d:
        updated = np.linalg.solve(np.eye(d) + rate * (F.T @ F), theta + rate * (F.T @ y))
    else:
        inner = np.linalg.solve(np.eye(n) + rate * (F @ F.T), F @ theta - y)
        updated = theta - rate * (F.T @ inner)
    return _report(client, model, label, updated, N)


def build_P(client: ClientDataset, eta: float, s: int, mode: Mode) -> np.ndarray:
    """Residual propagator P_i with X = (η/n_i)FFᵀ.

    fedavg: Σ_{ℓ<s} (I − X)^ℓ. fedprox: (I + X)⁻¹.
    """
    F = client.features
    n = client.n
    X = (eta / n) * (F @ F.T)
    identity = np.eye(n)
    if mode == "fedprox":
        return np.linalg.inv(identity + X)
    term = identity.copy()
    total = identity.copy()
    for _ in range(s - 1):
        term = term @ (identity - X)
        total += term
    return total


def kappa(gamma: float, s: int) -> float:
    """κ = γs / (1 − (1 − γ)^s); FedAvg P_i eigenvalues lie in [s/κ, s]."""
    return gamma * s / (1.0 - (1.0 - gamma) ** s)


# ═══════════════════════════════════════════════════════════════════════════════
# Server side
# ═══════════════════════════════════════════════════════════════════════════════


def aggregate(reports: Sequence[LocalReport], N: int | None = None, round: int | None = None) -> GlobalModel:
    """Σ_i w_i θ_i over reports in ascending client order.

    With ``N`` given, weights are recomputed as n_i / N.

    Raises:
        WeightSumError: If the weights do not sum to 1 within 1e-12
    """
    if not reports:
        raise InsufficientDataError("client reports", 1, 0)
    ordered = sorted(reports, key=lambda r: r.client_index)
    weights = [r.n / N if N is not None else r.weight for r in ordered]
    if any(w is None for w in weights):
        raise WeightSumError(float("nan"))
    total_weight = float(np.sum(weights))
    if abs(total_weight - 1.0) > PROBABILITY_TOLERANCE:
        raise WeightSumError(total_weight)
    thetas = np.zeros_like(ordered[0].thetas)
    for w, report in zip(weights, ordered):
        thetas += w * report.thetas
    return GlobalModel(thetas=thetas, round=0 if round is None else round)


def closed_form_step(
    clients: Sequence[ClientDataset],
    labels,
    model: GlobalModel,
    eta: float,
    s: int,
    mode: Mode,
) -> GlobalModel:
    """θ_j ← θ_j − η·(1/N)ΦᵀPΛ_j(Φθ_j − y) on the stacked system.

    Φ stacks every client's features, P is block diagonal in the clients'
    P_i and Λ_j selects the rows of clients labelled j.
    """
    labels = np.asarray(labels)
    Phi = np.vstack([c.features for c in clients])
    y = np.concatenate([c.responses for c in clients])
    N = Phi.shape[0]
    P = np.zeros((N, N))
    row_labels = np.empty(N, dtype=labels.dtype)
    start = 0
    for client, label in zip(clients, labels):
        stop = start + client.n
        P[start:stop, start:stop] = build_P(client, eta, s, mode)
        row_labels[start:stop] = label
        start = stop

    thetas = model.thetas.copy()
    for j in range(model.k):
        mask = (row_labels == j).astype(float)
        residual = mask * (Phi @ model.thetas[j] - y)
        thetas[j] = model.thetas[j] - eta * (Phi.T @ (P @ residual)) / N
    return GlobalModel(thetas=thetas, round=model.round + 1)


def run_fedx(
    clients: Sequence[ClientDataset],
    theta_start: GlobalModel,
    cfg: Phase2Config,
    truth: GroundTruth | None = None,
    ledger: CommLedger | None = None,
) -> Phase2Result:
    """T′ rounds of broadcast, label estimation, local update and aggregation.

    Trace rows carry the distance of the aggregated model to the truth and
    the misclustering mass of that round's labels (aligned with the
    broadcast model) when ``truth`` is given.
    """
    ledger = ledger if ledger is not None else CommLedger()
    sizes = np.asarray([c.n for c in clients])
    N = int(sizes.sum())
    k = theta_start.k
    d = theta_start.thetas.shape[1]

    unstable = False
    if cfg.mode == "fedavg":
        gamma = stability_gamma(clients, cfg.eta)
        if gamma >= 1.0:
            unstable = True
            logger.warning("FedAvg stability violated: gamma=%.4g >= 1 (eta=%.4g)", gamma, cfg.eta)

    model = GlobalModel(thetas=theta_start.thetas.copy(), round=0)
    start_row: dict[str, Any] = {
        "phase": "phase2", "round": 0, "mode": cfg.mode,
        "bytes_up": ledger.bytes_up, "bytes_down": ledger.bytes_down,
    }
    if truth is not None:
        start_row["distance_to_truth"] = permutation_distance(model.thetas, truth.thetas)[0]
    trace: list[dict[str, Any]] = [start_row]
    logger.info("Phase 2: %s, %d clients, T'=%d, eta=%.4g, s=%d", cfg.mode, len(clients), cfg.T_prime, cfg.eta, cfg.s)

    for t in range(1, cfg.T_prime + 1):
        labels = np.asarray([estimate_label(c, model) for c in clients])
        if cfg.mode == "fedavg":
            reports = [local_fedavg(c, model, int(z), cfg.eta, cfg.s, N) for c, z in zip(clients, labels)]
        else:
            reports = [local_fedprox(c, model, int(z), cfg.eta, N) for c, z in zip(clients, labels)]
        broadcast = model
        model = aggregate(reports, N, round=t)

        up, down = phase2_round_reals(d, k, len(clients))
        ledger.record(up_reals=up, down_reals=down)
        ledger.finalize_round()

        row: dict[str, Any] = {
            "phase": "phase2", "round": t, "mode": cfg.mode,
            "bytes_up": ledger.bytes_up, "bytes_down": ledger.bytes_down,
        }
        if truth is not None:
            row["distance_to_truth"] = permutation_distance(model.thetas, truth.thetas)[0]
            _, perm = permutation_distance(broadcast.thetas, truth.thetas)
            row["misclustering_mass"] = misclustering_mass(labels, truth.labels, perm, sizes)
        trace.append(row)
        logger.info("Phase 2 round %d: %s", t, {key: row[key] for key in ("distance_to_truth", "misclustering_mass") if key in row})

    labels = np.asarray([estimate_label(c, model) for c in clients], dtype=np.int64)
    return Phase2Result(
        model=model,
        labels=labels,
        client_thetas=model.thetas[labels],
        trace=trace,
        ledger=ledger,
        unstable=unstable,
    )

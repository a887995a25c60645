"""Phase 1: federated moment descent with anchor clients.

Each anchor walks its iterate toward its own cluster model. Per round it
estimates the residual subspace with the help of m fresh clients, fits the
leading direction on 2ℓ of its own points, and steps along that direction
until the residual magnitude estimate drops below εΔ. The final anchor
iterates are grouped into k clusters by single linkage at Δ/2.
"""

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from .comm import CommLedger
from .config import Phase1Config
from .errors import (
    ClusteringError,
    ConfigError,
    DegenerateRoundError,
    InsufficientAnchorsError,
    InsufficientDataError,
    MixFedError,
)
from .linalg import OrthonormalBasis, power_iteration
from .model import ClientDataset, GroundTruth
from .rng import Stream, seed_sequence, stream
from .subspace import PairCohort, federated_orthogonal_iteration, residuals

logger = logging.getLogger(__name__)


@dataclass
class AnchorState:
    """Iterate and stopping status of one anchor client."""
    client_index: int
    theta: np.ndarray
    sigma_hat: float | None = None
    frozen: bool = False
    rounds_used: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "client_index": self.client_index,
            "theta": self.theta.tolist(),
            "sigma_hat": self.sigma_hat,
            "frozen": self.frozen,
            "rounds_used": self.rounds_used,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnchorState":
        return cls(
            client_index=int(data["client_index"]),
            theta=np.asarray(data["theta"], dtype=float),
            sigma_hat=data.get("sigma_hat"),
            frozen=bool(data.get("frozen", False)),
            rounds_used=int(data.get("rounds_used", 0)),
        )


@dataclass
class Phase1Result:
    centers: np.ndarray | None
    anchors: list[int]
    states: list[AnchorState]
    trace: list[dict[str, Any]] = field(default_factory=list)
    failure: MixFedError | None = None
    ledger: CommLedger = field(default_factory=CommLedger)

    @property
    def succeeded(self) -> bool:
        return self.centers is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "centers": None if self.centers is None else self.centers.tolist(),
            "anchors": list(self.anchors),
            "states": [s.to_dict() for s in self.states],
            "failure": None if self.failure is None else {
                "code": self.failure.code,
                "message": str(self.failure),
                "components": getattr(self.failure, "components", None),
                "k": getattr(self.failure, "k", None),
                "reason": getattr(self.failure, "reason", None),
            },
            "comm": self.ledger.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Phase1Result":
        failure = data.get("failure")
        return cls(
            centers=None if data["centers"] is None else np.asarray(data["centers"], dtype=float),
            anchors=[int(i) for i in data["anchors"]],
            states=[AnchorState.from_dict(s) for s in data["states"]],
            trace=list(data.get("trace", [])),
            failure=None if failure is None else ClusteringError(
                failure["components"], failure["k"], failure.get("reason")
            ),
            ledger=CommLedger.from_dict(data.get("comm", {})),
        )


# ═══════════════════════════════════════════════════════════════════════════════
# Anchor selection and local moment matrix
# ═══════════════════════════════════════════════════════════════════════════════


def select_anchors(clients: Sequence[ClientDataset], n_H: int, min_local: int, seed: int) -> list[int]:
    """Uniform sample of n_H clients among those holding >= min_local points.

    Raises:
        InsufficientAnchorsError: If fewer than n_H clients are eligible
    """
    eligible = [c.index for c in clients if c.n >= min_local]
    if len(eligible) < n_H:
        raise InsufficientAnchorsError(n_H, len(eligible), min_local)
    rng = stream(seed, Stream.ANCHORS)
    chosen = rng.choice(len(eligible), size=n_H, replace=False)
    return sorted(eligible[i] for i in chosen)


def anchor_batch(
    anchor: ClientDataset, ell: int, batch: int, allow_reuse: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """The 2ℓ points an anchor spends in its ``batch``-th active round.

    Batch t covers rows [2ℓt, 2ℓ(t+1)); with reuse, batches cycle over the
    full batches the anchor holds.
    """
    size = 2 * ell
    full_batches = anchor.n // size
    if allow_reuse and full_batches > 0:
        batch %= full_batches
    start = size * batch
    if start + size > anchor.n:
        raise InsufficientDataError(f"fresh points on anchor {anchor.index}", start + size, anchor.n)
    return anchor.features[start:start + size], anchor.responses[start:start + size]


def build_A(
    anchor: ClientDataset,
    theta: np.ndarray,
    U_hat: OrthonormalBasis,
    ell: int,
    round: int,
    allow_reuse: bool = False,
) -> np.ndarray:
    """A = (1/ℓ) Σ_j (Ûᵀε_j)(Ûᵀε̃_j)ᵀ over the ℓ point pairs (2j, 2j+1) of the batch."""
    return _pair_moment(_projected_batch(anchor, theta, U_hat, ell, round, allow_reuse), ell)


def _projected_batch(anchor, theta, U_hat, ell, batch, allow_reuse) -> np.ndarray:
    features, responses = anchor_batch(anchor, ell, batch, allow_reuse)
    return residuals(features, responses, theta) @ U_hat.columns


def _pair_moment(projected: np.ndarray, ell: int) -> np.ndarray:
    return projected[0::2].T @ projected[1::2] / ell


# ═══════════════════════════════════════════════════════════════════════════════
# One round
# ═══════════════════════════════════════════════════════════════════════════════


def _anchor_error(theta: np.ndarray, truth: GroundTruth, client_index: int) -> float:
    return float(np.linalg.norm(theta - truth.thetas[truth.labels[client_index]]))


def _true_residual(theta: np.ndarray, truth: GroundTruth, label: int) -> float:
    v = truth.apply_covariance(label, truth.thetas[label] - theta)
    return float(v @ v)


def fedmd_round(
    states: Sequence[AnchorState],
    fresh_clients: Sequence[ClientDataset],
    cfg: Phase1Config,
    anchors: Mapping[int, ClientDataset],
    round_index: int,
    *,
    k: int,
    delta: float,
    alpha: float,
    beta: float,
    seed: int,
    ledger: CommLedger | None = None,
    truth: GroundTruth | None = None,
) -> tuple[list[AnchorState], list[dict[str, Any]]]:
    """Advance every unfrozen anchor by one moment-descent step.

    Raises:
        DegenerateRoundError: If the subspace estimate collapses while the
            anchor's full-space residual estimate is still above εΔ
    """
    threshold = cfg.epsilon * delta
    cohort = PairCohort.from_clients(fresh_clients, pairs_per_client=1)
    new_states: list[AnchorState] = []
    rows: list[dict[str, Any]] = []

    for state in states:
        row: dict[str, Any] = {"phase": "phase1", "round": round_index, "anchor": state.client_index}
        if state.frozen:
            new_states.append(state)
            row.update(sigma_hat=state.sigma_hat, frozen=True, bytes_up=0, bytes_down=0)
            if truth is not None:
                row["anchor_error"] = _anchor_error(state.theta, truth, state.client_index)
            rows.append(row)
            continue

        anchor = anchors[state.client_index]
        d = state.theta.shape[0]
        round_ledger = CommLedger()
        # θ and the start Q_0 go to the cohort
        round_ledger.record(down_reals=d + d * k)

        provider = cohort.provider(state.theta)
        degenerate: DegenerateRoundError | None = None
        try:
            U_hat = federated_orthogonal_iteration(
                provider, k, cfg.T1,
                seed=seed_sequence(seed, Stream.ORTHO, state.client_index, round_index),
                ledger=round_ledger,
            )
        except DegenerateRoundError as e:
            degenerate = e
            U_hat = OrthonormalBasis(np.eye(d))
        # Û to the anchor, updated θ back
        round_ledger.record(down_reals=d * k, up_reals=d)

        projected = _projected_batch(anchor, state.theta, U_hat, cfg.ell, state.rounds_used, cfg.allow_data_reuse)
        A = _pair_moment(projected, cfg.ell)
        power = power_iteration(
            A @ A.T, cfg.T2, seed=seed_sequence(seed, Stream.POWER, state.client_index, round_index)
        )
        sigma_hat = float(np.sqrt(power.sigma))

        if degenerate is not None:
            if sigma_hat > threshold:
                raise degenerate
            logger.warning(
                "Anchor %d: degenerate subspace round %d treated as converged (sigma_hat=%.3g)",
                state.client_index, round_index, sigma_hat,
            )

        if sigma_hat > threshold:
            direction = power.vector
            if direction @ projected.mean(axis=0) < 0:
                direction = -direction
            step = alpha * sigma_hat / (2.0 * beta**2)
            theta = state.theta + step * (U_hat.columns @ direction)
            updated = replace(state, theta=theta, sigma_hat=sigma_hat, rounds_used=state.rounds_used + 1)
            logger.debug("Anchor %d round %d: sigma_hat=%.4g step=%.4g", state.client_index, round_index, sigma_hat, step)
        else:
            updated = replace(state, sigma_hat=sigma_hat, frozen=True, rounds_used=state.rounds_used + 1)
            logger.debug("Anchor %d frozen at round %d (sigma_hat=%.4g)", state.client_index, round_index, sigma_hat)

        if ledger is not None:
            ledger.absorb(round_ledger)
        row.update(
            sigma_hat=sigma_hat,
            frozen=updated.frozen,
            degenerate=degenerate is not None,
            theta_norm=float(np.linalg.norm(updated.theta)),
            bytes_up=round_ledger.bytes_up,
            bytes_down=round_ledger.bytes_down,
        )
        if truth is not None:
            label = int(truth.labels[state.client_index])
            row["residual_true"] = _true_residual(state.theta, truth, label)
            row["delta_diag"] = float(np.max(np.linalg.norm(truth.thetas - state.theta, axis=1)))
            row["anchor_error"] = _anchor_error(updated.theta, truth, state.client_index)
        new_states.append(updated)
        rows.append(row)
    return new_states, rows


# ═══════════════════════════════════════════════════════════════════════════════
# Clustering and driver
# ═══════════════════════════════════════════════════════════════════════════════


def greedy_cluster(anchor_thetas, threshold: float, k: int) -> np.ndarray:
    """Single-linkage components at ``threshold``; one mean center per component.

    Components are ordered by their lowest anchor position.

    Raises:
        ClusteringError: Unless there are exactly k components, each with
            diameter below 2 * threshold
    """
    if threshold <= 0:
        raise ConfigError(f"clustering threshold must be positive, got {threshold}")
    points = np.asarray(anchor_thetas, dtype=float)
    n = points.shape[0]
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    adjacent = dist < threshold

    components: list[list[int]] = []
    visited = np.zeros(n, dtype=bool)
    for root in range(n):
        if visited[root]:
            continue
        visited[root] = True
        members = [root]
        queue = deque([root])
        while queue:
            current = queue.popleft()
            for nxt in np.flatnonzero(adjacent[current] & ~visited):
                visited[nxt] = True
                members.append(int(nxt))
                queue.append(int(nxt))
        components.append(sorted(members))

    if len(components) != k:
        raise ClusteringError(len(components), k)
    for members in components:
        diameter = float(dist[np.ix_(members, members)].max())
        if diameter >= 2 * threshold:
            raise ClusteringError(
                len(components), k, f"component diameter {diameter:.4g} >= {2 * threshold:.4g}"
            )
    return np.vstack([points[members].mean(axis=0) for members in components])


def _draw_fresh(pool: list[int], m: int, seed: int, round_index: int) -> list[int]:
    if len(pool) < m:
        raise InsufficientDataError(f"fresh clients for round {round_index}", m, len(pool))
    rng = stream(seed, Stream.FRESH, round_index)
    picked = rng.choice(len(pool), size=m, replace=False)
    return sorted(pool[i] for i in picked)


def run_fedmd(
    clients: Sequence[ClientDataset],
    cfg: Phase1Config,
    *,
    k: int,
    seed: int,
    delta: float | None = None,
    alpha: float | None = None,
    beta: float | None = None,
    truth: GroundTruth | None = None,
    ledger: CommLedger | None = None,
) -> Phase1Result:
    """Select anchors, run T descent rounds, then cluster the anchor iterates.

    Δ, α and β come from the config when set, else from the arguments.
    Clustering failure is reported in ``Phase1Result.failure``.
    """
    delta = cfg.delta_hint if cfg.delta_hint is not None else delta
    if delta is None:
        delta = truth.delta if truth is not None else None
    if delta is None:
        raise ConfigError("Phase 1 needs a separation: set phase1.delta_hint or pass the instance's delta")
    alpha = cfg.alpha if cfg.alpha is not None else (alpha if alpha is not None else 1.0)
    beta = cfg.beta if cfg.beta is not None else (beta if beta is not None else 1.0)
    ledger = ledger if ledger is not None else CommLedger()

    d = clients[0].d
    by_index = {c.index: c for c in clients}
    anchor_ids = select_anchors(clients, cfg.n_H, cfg.required_local, seed)
    theta0 = np.zeros(d) if cfg.theta0 is None else np.asarray(cfg.theta0, dtype=float)
    states = [AnchorState(client_index=i, theta=theta0.copy()) for i in anchor_ids]

    anchor_set = set(anchor_ids)
    pool = [c.index for c in clients if c.index not in anchor_set and c.n >= 2]
    logger.info("Phase 1: %d anchors, %d candidate fresh clients, T=%d", len(anchor_ids), len(pool), cfg.T)

    trace: list[dict[str, Any]] = []
    for t in range(cfg.T):
        if all(s.frozen for s in states):
            logger.info("Phase 1: every anchor frozen after %d rounds", t)
            break
        fresh_ids = _draw_fresh(pool, cfg.m, seed, t)
        if not cfg.allow_data_reuse:
            used = set(fresh_ids)
            pool = [i for i in pool if i not in used]
        states, rows = fedmd_round(
            states,
            [by_index[i] for i in fresh_ids],
            cfg,
            by_index,
            t,
            k=k, delta=delta, alpha=alpha, beta=beta, seed=seed, ledger=ledger, truth=truth,
        )
        trace.extend(rows)
        ledger.finalize_round()
        logger.info(
            "Phase 1 round %d: %d/%d anchors frozen", t, sum(s.frozen for s in states), len(states)
        )

    centers: np.ndarray | None = None
    failure: MixFedError | None = None
    try:
        centers = greedy_cluster([s.theta for s in states], delta / 2.0, k)
    except ClusteringError as e:
        logger.warning("Phase 1 clustering failed: %s", e)
        failure = e
    return Phase1Result(
        centers=centers, anchors=anchor_ids, states=states, trace=trace, failure=failure, ledger=ledger
    )

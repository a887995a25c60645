"""
Unit tests for mixfed/lib/phase1.py.

Tests anchor selection, the local moment matrix, single descent rounds,
single-linkage clustering and the Phase 1 driver.
"""

from collections import Counter

import numpy as np
import pytest

from mixfed.lib.comm import BYTES_PER_REAL, CommLedger, phase1_anchor_round_reals
from mixfed.lib.config import MixtureConfig, Phase1Config
from mixfed.lib.errors import (
    ClusteringError,
    DegenerateRoundError,
    InsufficientAnchorsError,
    InsufficientDataError,
)
from mixfed.lib.linalg import OrthonormalBasis
from mixfed.lib.metrics import permutation_distance
from mixfed.lib.model import ClientDataset, generate_instance
from mixfed.lib.phase1 import (
    AnchorState,
    Phase1Result,
    anchor_batch,
    build_A,
    fedmd_round,
    greedy_cluster,
    run_fedmd,
    select_anchors,
)
from mixfed.lib.subspace import expected_moment_matrix


def linear_client(index: int, theta, n: int, rng: np.random.Generator) -> ClientDataset:
    """Noiseless client with standard normal features."""
    F = rng.standard_normal((n, len(theta)))
    return ClientDataset(index=index, features=F, responses=F @ np.asarray(theta, dtype=float))


def phase1_config(**kw) -> Phase1Config:
    return Phase1Config(**{"n_H": 1, "m": 10, "ell": 50, "T": 1, "T1": 10, "T2": 50, "epsilon": 0.1, **kw})


# =============================================================================
# Anchor selection
# =============================================================================


class TestSelectAnchors:

    def clients(self, sizes):
        return [ClientDataset(index=i, features=np.ones((n, 2)), responses=np.ones(n)) for i, n in enumerate(sizes)]

    def test_all_eligible_selected(self):
        assert select_anchors(self.clients([5, 1, 6, 7]), 3, 5, seed=0) == [0, 2, 3]

    def test_no_eligible_client(self):
        with pytest.raises(InsufficientAnchorsError) as exc:
            select_anchors(self.clients([1, 2]), 1, 5, seed=0)
        assert (exc.value.needed, exc.value.available, exc.value.min_local) == (1, 0, 5)

    def test_uniform_over_eligible(self):
        clients = self.clients([4, 1, 4, 4, 1, 4])
        counts = Counter(select_anchors(clients, 1, 4, seed=s)[0] for s in range(10_000))
        assert set(counts) == {0, 2, 3, 5}
        for count in counts.values():
            assert abs(count / 10_000 - 0.25) <= 0.02

    def test_seeded(self):
        clients = self.clients([3] * 20)
        assert select_anchors(clients, 5, 2, seed=4) == select_anchors(clients, 5, 2, seed=4)


# =============================================================================
# Anchor batches and the local moment matrix
# =============================================================================


class TestAnchorBatch:

    def client(self, n):
        return ClientDataset(index=0, features=np.arange(2 * n, dtype=float).reshape(n, 2), responses=np.arange(n, dtype=float))

    def test_batches_are_disjoint_rows(self):
        _, y0 = anchor_batch(self.client(8), 2, 0)
        _, y1 = anchor_batch(self.client(8), 2, 1)
        assert y0.tolist() == [0.0, 1.0, 2.0, 3.0]
        assert y1.tolist() == [4.0, 5.0, 6.0, 7.0]

    def test_exhausted_without_reuse(self):
        with pytest.raises(InsufficientDataError):
            anchor_batch(self.client(8), 2, 2)

    def test_reuse_cycles(self):
        _, y = anchor_batch(self.client(8), 2, 3, allow_reuse=True)
        assert y.tolist() == [4.0, 5.0, 6.0, 7.0]


class TestBuildA:

    def test_zero_at_truth(self):
        anchor = linear_client(0, [1.0, -1.0], 20, np.random.default_rng(0))
        A = build_A(anchor, np.array([1.0, -1.0]), OrthonormalBasis(np.eye(2)), 10, 0)
        assert np.allclose(A, 0.0)

    def test_single_pair_by_hand(self):
        F = np.array([[1.0, 2.0], [0.0, 1.0]])
        anchor = ClientDataset(index=0, features=F, responses=np.array([1.0, 3.0]))
        U = OrthonormalBasis(np.array([[1.0], [0.0]]))
        # ε0 = 1·(1, 2), ε1 = 3·(0, 1); projections 1 and 0
        assert build_A(anchor, np.zeros(2), U, 1, 0).tolist() == [[0.0]]
        U2 = OrthonormalBasis(np.eye(2))
        assert build_A(anchor, np.zeros(2), U2, 1, 0).tolist() == [[0.0, 3.0], [0.0, 6.0]]

    def test_large_batch_matches_expected_moment(self):
        cfg = MixtureConfig(k=1, d=2, M=1, sizes=[200_000], R=1.0, thetas=[[1.0, 0.0]], seed=1)
        clients, truth = generate_instance(cfg)
        theta = np.zeros(2)
        A = build_A(clients[0], theta, OrthonormalBasis(np.eye(2)), 100_000, 0)
        expected = expected_moment_matrix(theta, truth)
        assert np.linalg.norm(A - expected, 2) <= 0.05 * np.linalg.norm(expected, 2)


# =============================================================================
# Descent rounds
# =============================================================================


class TestFedmdRound:

    @pytest.fixture
    def setup(self):
        rng = np.random.default_rng(3)
        anchor = linear_client(0, [3.0, 0.0], 2000, rng)
        fresh = [linear_client(i, [3.0, 0.0] if i % 2 else [-3.0, 0.0], 2, rng) for i in range(1, 11)]
        return anchor, fresh

    def run(self, states, fresh, anchors, **kw):
        params = {"k": 2, "delta": 6.0, "alpha": 1.0, "beta": 2.0, "seed": 0}
        params.update(kw)
        return fedmd_round(states, fresh, phase1_config(ell=1000), anchors, 0, **params)

    def test_frozen_anchor_is_untouched(self, setup):
        anchor, fresh = setup
        state = AnchorState(client_index=0, theta=np.array([1.0, 2.0]), sigma_hat=0.1, frozen=True, rounds_used=3)
        new_states, rows = self.run([state], fresh, {0: anchor})
        assert new_states[0] is state
        assert rows[0]["frozen"] and rows[0]["bytes_up"] == rows[0]["bytes_down"] == 0

    def test_step_length_and_orientation(self, setup):
        anchor, fresh = setup
        state = AnchorState(client_index=0, theta=np.zeros(2))
        new_states, rows = self.run([state], fresh, {0: anchor})
        updated = new_states[0]
        step = updated.theta - state.theta
        assert np.linalg.norm(step) == pytest.approx(1.0 * updated.sigma_hat / (2 * 2.0**2), rel=1e-9)
        assert step @ np.array([3.0, 0.0]) > 0
        assert updated.sigma_hat == pytest.approx(3.0, rel=0.25)
        assert updated.rounds_used == 1 and not updated.frozen
        assert rows[0]["sigma_hat"] == updated.sigma_hat

    def test_unit_sigma_gives_half_step(self):
        # σ̂ = 1 with α = β = 1 moves the iterate by exactly 0.5
        state = AnchorState(client_index=0, theta=np.zeros(1))
        F = np.ones((2, 1))
        anchor = ClientDataset(index=0, features=F, responses=np.ones(2))
        fresh = [ClientDataset(index=1, features=F, responses=np.ones(2))]
        cfg = phase1_config(ell=1, m=1)
        new_states, _ = fedmd_round(
            [state], fresh, cfg, {0: anchor}, 0, k=1, delta=1.0, alpha=1.0, beta=1.0, seed=0
        )
        assert new_states[0].sigma_hat == pytest.approx(1.0, rel=1e-12)
        assert new_states[0].theta.tolist() == pytest.approx([0.5], rel=1e-12)

    def test_sigma_hat_nondecreasing_in_T2(self, setup):
        anchor, fresh = setup
        values = []
        for T2 in (1, 2, 4, 8, 16, 32):
            _, rows = fedmd_round(
                [AnchorState(client_index=0, theta=np.zeros(2))], fresh, phase1_config(ell=1000, T2=T2), {0: anchor}, 0,
                k=2, delta=6.0, alpha=1.0, beta=2.0, seed=0,
            )
            values.append(rows[0]["sigma_hat"])
        assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))

    def test_byte_inventory(self, setup):
        anchor, fresh = setup
        ledger = CommLedger()
        _, rows = self.run([AnchorState(client_index=0, theta=np.zeros(2))], fresh, {0: anchor}, ledger=ledger)
        up, down = phase1_anchor_round_reals(d=2, k=2, m=10, T1=10)
        assert rows[0]["bytes_up"] == ledger.bytes_up == BYTES_PER_REAL * up
        assert rows[0]["bytes_down"] == ledger.bytes_down == BYTES_PER_REAL * down
        # (T1 + 2) bases of d x k plus the θ broadcast
        assert rows[0]["bytes_down"] == (10 + 2) * 2 * 2 * 8 + 2 * 8

    def test_degenerate_round_at_truth_freezes(self):
        rng = np.random.default_rng(5)
        theta = np.array([1.0, 1.0])
        anchor = linear_client(0, theta, 2000, rng)
        fresh = [linear_client(i, theta, 2, rng) for i in range(1, 6)]
        new_states, rows = self.run([AnchorState(client_index=0, theta=theta.copy())], fresh, {0: anchor})
        assert new_states[0].frozen
        assert rows[0]["degenerate"] is True
        assert new_states[0].sigma_hat == 0.0

    def test_degenerate_round_far_from_truth_raises(self):
        rng = np.random.default_rng(6)
        theta = np.array([1.0, 1.0])
        anchor = linear_client(0, [4.0, 1.0], 2000, rng)
        fresh = [linear_client(i, theta, 2, rng) for i in range(1, 6)]
        with pytest.raises(DegenerateRoundError):
            self.run([AnchorState(client_index=0, theta=theta.copy())], fresh, {0: anchor})


# =============================================================================
# Clustering
# =============================================================================


class TestGreedyCluster:

    def test_two_components(self):
        centers = greedy_cluster([[0.0, 0.0], [0.01, 0.0], [5.0, 0.0]], 1.0, 2)
        assert np.allclose(centers, [[0.005, 0.0], [5.0, 0.0]])

    def test_identical_anchors(self):
        assert greedy_cluster([[1.0, 2.0]] * 4, 0.5, 1).tolist() == [[1.0, 2.0]]

    def test_chain_merges_into_one_component(self):
        with pytest.raises(ClusteringError) as exc:
            greedy_cluster([[0.0], [1.0], [2.0]], 1.5, 2)
        assert (exc.value.components, exc.value.k) == (1, 2)

    def test_wide_component_is_rejected(self):
        with pytest.raises(ClusteringError, match="diameter"):
            greedy_cluster([[0.0], [0.9], [1.8], [2.7]], 1.0, 1)

    def test_ordered_by_first_member(self):
        centers = greedy_cluster([[5.0], [0.0], [5.1]], 1.0, 2)
        assert centers[:, 0] == pytest.approx([5.05, 0.0])


# =============================================================================
# Driver
# =============================================================================


class TestRunFedmd:

    def test_no_rounds_reports_clustering_failure(self, two_cluster_config):
        clients, truth = generate_instance(two_cluster_config.mixture)
        cfg = two_cluster_config.phase1.model_copy(update={"T": 0})
        result = run_fedmd(clients, cfg, k=2, seed=1, truth=truth)
        assert not result.succeeded
        assert isinstance(result.failure, ClusteringError)
        assert result.trace == []
        assert all(np.array_equal(s.theta, np.zeros(2)) for s in result.states)

    def test_two_clusters_recovered(self, two_cluster_config):
        clients, truth = generate_instance(two_cluster_config.mixture)
        result = run_fedmd(clients, two_cluster_config.phase1, k=2, seed=1, truth=truth)
        assert result.succeeded
        distance, _ = permutation_distance(result.centers, truth.thetas)
        assert distance <= truth.delta / 4
        assert len(result.anchors) == 16

    def test_frozen_anchor_stays_put(self, two_cluster_config):
        clients, truth = generate_instance(two_cluster_config.mixture)
        result = run_fedmd(clients, two_cluster_config.phase1, k=2, seed=1, truth=truth)
        frozen_at: dict[int, float] = {}
        for row in result.trace:
            if row["anchor"] in frozen_at:
                assert row["frozen"]
                assert row["anchor_error"] == frozen_at[row["anchor"]]
            elif row["frozen"]:
                frozen_at[row["anchor"]] = row["anchor_error"]

    def test_single_cluster_noiseless(self):
        mixture = MixtureConfig(k=1, d=3, M=300, sizes={"kind": "constant", "n": 600}, R=2.0, delta_target=2.0, seed=4)
        clients, truth = generate_instance(mixture)
        cfg = Phase1Config(n_H=4, m=200, ell=300, T=12, T1=10, T2=30, epsilon=0.1, allow_data_reuse=True)
        result = run_fedmd(clients, cfg, k=1, seed=2, truth=truth)
        assert result.succeeded
        assert np.linalg.norm(result.centers[0] - truth.thetas[0]) <= 0.1 * 2.0

    def test_fresh_pool_too_small(self, two_cluster_config):
        clients, truth = generate_instance(two_cluster_config.mixture)
        cfg = two_cluster_config.phase1.model_copy(update={"m": 100})
        with pytest.raises(InsufficientDataError, match="fresh clients"):
            run_fedmd(clients, cfg, k=2, seed=1, truth=truth)

    def test_result_round_trip(self, two_cluster_config):
        clients, truth = generate_instance(two_cluster_config.mixture)
        cfg = two_cluster_config.phase1.model_copy(update={"T": 0})
        result = run_fedmd(clients, cfg, k=2, seed=1, truth=truth)
        restored = Phase1Result.from_dict(result.to_dict())
        assert restored.anchors == result.anchors
        assert restored.centers is None
        assert str(restored.failure) == str(result.failure)

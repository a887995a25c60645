"""
Pytest fixtures for mixfed tests.

The "two-cluster" experiment is small enough to run end to end in well
under a second: d = k = 2, so the fresh-client subspace always spans the
whole space and every anchor converges in a handful of rounds.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from mixfed.lib.config import ExperimentConfig, MixtureConfig
from mixfed.lib.model import ClientDataset


def two_cluster_document(**overrides) -> dict:
    """Experiment config document for the two-cluster instance."""
    document = {
        "mixture": {
            "k": 2,
            "d": 2,
            "M": 60,
            "sizes": {"kind": "constant", "n": 800},
            "sigma": 0.0,
            "R": 2.0,
            "thetas": [[2.0, 0.0], [-2.0, 0.0]],
        },
        "phase1": {
            "n_H": 16,
            "m": 40,
            "ell": 400,
            "T": 10,
            "T1": 10,
            "T2": 30,
            "epsilon": 0.1,
            "allow_data_reuse": True,
        },
        "phase2": {"mode": "fedavg", "eta": 0.5, "s": 1, "T_prime": 10},
        "seeds": [11],
        "emit_instance": True,
    }
    for section, values in overrides.items():
        if isinstance(values, dict) and isinstance(document.get(section), dict):
            document[section] = {**document[section], **values}
        else:
            document[section] = values
    return document


@pytest.fixture
def two_cluster_config() -> ExperimentConfig:
    return ExperimentConfig.model_validate(two_cluster_document())


@pytest.fixture
def config_file(tmp_path):
    """Write a config document to disk and return its path."""
    def write(document: dict | None = None) -> Path:
        import json

        path = tmp_path / "config.json"
        path.write_text(json.dumps(document if document is not None else two_cluster_document()))
        return path
    return write


@pytest.fixture
def small_mixture() -> MixtureConfig:
    return MixtureConfig(k=2, d=3, M=20, sizes={"kind": "uniform", "low": 2, "high": 6}, sigma=0.1, seed=5)


def make_clients(rng: np.random.Generator, sizes, d: int) -> list[ClientDataset]:
    """Random clients with standard normal features and responses."""
    return [
        ClientDataset(index=i, features=rng.standard_normal((n, d)), responses=rng.standard_normal(n))
        for i, n in enumerate(sizes)
    ]

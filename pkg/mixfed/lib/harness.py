"""Experiment orchestration: per-seed pipeline, staging and run-directory layout.

Layout under the output directory::

    seed_<seed>/instance/      manifest + client binaries
    seed_<seed>/phase1.json    anchors, centers, Phase 1 trace
    seed_<seed>/phase2.json    final model, labels, Phase 2 trace
    seed_<seed>/config.json    the experiment config the run used
    seed_<seed>/trace.jsonl    every detailed trace row
    seed_<seed>/distance.csv   per-round plot data
    seed_<seed>/summary.json   EvalReport and outcome
    summary.json               every seed's summary
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import ExperimentConfig, MixtureConfig
from .errors import ClusteringError, ConfigError, MixFedError
from .metrics import EvalReport, evaluate, permutation_distance
from .model import ClientDataset, GroundTruth, generate_instance
from .phase1 import Phase1Result, run_fedmd
from .phase2 import GlobalModel, Phase2Result, run_fedx
from .storage import load_instance, read_json, save_instance, write_json, write_plot_csv, write_trace

logger = logging.getLogger(__name__)

INSTANCE_DIR = "instance"
PHASE1_FILE = "phase1.json"
PHASE2_FILE = "phase2.json"
TRACE_FILE = "trace.jsonl"
PLOT_FILE = "distance.csv"
SUMMARY_FILE = "summary.json"
CONFIG_FILE = "config.json"


@dataclass
class RoundTrace:
    """One plot row; bytes are cumulative over the whole run."""
    phase: str
    round: int
    distance: float | None
    misclustering: float | None
    bytes_up: int
    bytes_down: int

    @property
    def bytes(self) -> int:
        return self.bytes_up + self.bytes_down

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "bytes": self.bytes}


def seed_dir(out_dir: Path, seed: int) -> Path:
    return Path(out_dir) / f"seed_{seed}"


def mixture_for_seed(cfg: ExperimentConfig, seed: int) -> MixtureConfig:
    """The run seed replaces the mixture seed."""
    return cfg.mixture.model_copy(update={"seed": seed})


# ═══════════════════════════════════════════════════════════════════════════════
# Trace assembly
# ═══════════════════════════════════════════════════════════════════════════════


def round_traces(phase1_rows: Sequence[dict], phase2_rows: Sequence[dict]) -> list[RoundTrace]:
    """Collapse detailed rows into one RoundTrace per phase round.

    Phase 1 distance is the worst anchor error after the round; Phase 2
    bytes continue from Phase 1's total.
    """
    traces: list[RoundTrace] = []
    up = down = 0
    rounds: dict[int, list[dict]] = {}
    for row in phase1_rows:
        rounds.setdefault(row["round"], []).append(row)
    for t in sorted(rounds):
        rows = rounds[t]
        up += sum(r["bytes_up"] for r in rows)
        down += sum(r["bytes_down"] for r in rows)
        errors = [r["anchor_error"] for r in rows if "anchor_error" in r]
        traces.append(RoundTrace("phase1", t, max(errors) if errors else None, None, up, down))
    for row in phase2_rows:
        traces.append(RoundTrace(
            "phase2",
            row["round"],
            row.get("distance_to_truth"),
            row.get("misclustering_mass"),
            up + row["bytes_up"],
            down + row["bytes_down"],
        ))
    return traces


# ═══════════════════════════════════════════════════════════════════════════════
# Stages
# ═══════════════════════════════════════════════════════════════════════════════


def stage_generate(cfg: ExperimentConfig, seed: int, out_dir: Path | None = None) -> tuple[list[ClientDataset], GroundTruth]:
    """Draw the instance; persist it when ``out_dir`` is given."""
    clients, truth = generate_instance(mixture_for_seed(cfg, seed))
    if out_dir is not None:
        save_instance(seed_dir(out_dir, seed) / INSTANCE_DIR, clients, truth)
    return clients, truth


def stage_phase1(
    cfg: ExperimentConfig,
    seed: int,
    clients: Sequence[ClientDataset],
    truth: GroundTruth,
    out_dir: Path | None = None,
) -> Phase1Result:
    result = run_fedmd(
        clients,
        cfg.phase1,
        k=cfg.mixture.k,
        seed=seed,
        delta=truth.delta,
        alpha=cfg.mixture.alpha,
        beta=cfg.mixture.beta,
        truth=truth,
    )
    if out_dir is not None:
        write_json(seed_dir(out_dir, seed) / PHASE1_FILE, {**result.to_dict(), "trace": result.trace})
    return result


def stage_phase2(
    cfg: ExperimentConfig,
    seed: int,
    clients: Sequence[ClientDataset],
    truth: GroundTruth,
    theta_start: np.ndarray,
    out_dir: Path | None = None,
) -> Phase2Result:
    result = run_fedx(clients, GlobalModel(thetas=theta_start), cfg.phase2, truth=truth)
    if out_dir is not None:
        write_json(seed_dir(out_dir, seed) / PHASE2_FILE, {**result.to_dict(), "trace": result.trace})
        write_json(seed_dir(out_dir, seed) / CONFIG_FILE, cfg.model_dump(mode="json"))
    return result


def load_theta_start(path: Path) -> np.ndarray:
    """θ_start from a phase1.json (``centers``), a phase2.json (``model``) or a bare k x d list.

    Raises:
        ClusteringError: If the file records a Phase 1 clustering failure
    """
    data = read_json(path)
    if isinstance(data, list):
        return np.asarray(data, dtype=float)
    if "centers" in data:
        if data["centers"] is None:
            failure = data.get("failure") or {}
            raise ClusteringError(
                failure.get("components", 0), failure.get("k", 0), "phase 1 produced no centers"
            )
        return np.asarray(data["centers"], dtype=float)
    if "model" in data:
        return np.asarray(data["model"]["thetas"], dtype=float)
    if "thetas" in data:
        return np.asarray(data["thetas"], dtype=float)
    raise ConfigError(f"{path} holds no centers or thetas")


def build_summary(
    cfg: ExperimentConfig,
    seed: int,
    truth: GroundTruth,
    phase1: Phase1Result | None,
    phase2: Phase2Result | None,
    failure: dict[str, Any] | None = None,
) -> dict[str, Any]:
    summary: dict[str, Any] = {"seed": seed, "status": "ok" if failure is None else "failed", "delta": truth.delta}
    if failure is not None:
        summary["failure"] = failure
    if phase1 is not None:
        summary["phase1"] = {
            "succeeded": phase1.succeeded,
            "anchors": phase1.anchors,
            "distance": None if phase1.centers is None else permutation_distance(phase1.centers, truth.thetas)[0],
            "bytes": phase1.ledger.total,
        }
    if phase2 is not None:
        report = evaluate(
            phase2.model.thetas, phase2.labels, truth, sigma=cfg.mixture.sigma, c_cal=cfg.c_cal
        )
        summary["report"] = report.to_dict()
        summary["phase2"] = {"rounds": phase2.model.round, "unstable": phase2.unstable, "bytes": phase2.ledger.total}
        summary["final_distance"] = report.distance
        summary["distance_over_delta"] = report.distance / truth.delta
    summary["bytes_total"] = (phase1.ledger.total if phase1 else 0) + (phase2.ledger.total if phase2 else 0)
    return summary


def finalize_seed(
    cfg: ExperimentConfig,
    seed: int,
    out_dir: Path,
    truth: GroundTruth,
    phase1: Phase1Result | None,
    phase2: Phase2Result | None,
    failure: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Write trace.jsonl, distance.csv and summary.json for one seed."""
    directory = seed_dir(out_dir, seed)
    phase1_rows = phase1.trace if phase1 else []
    phase2_rows = phase2.trace if phase2 else []
    write_trace(directory / TRACE_FILE, [*phase1_rows, *phase2_rows])
    write_plot_csv(directory / PLOT_FILE, [t.to_dict() for t in round_traces(phase1_rows, phase2_rows)])
    summary = build_summary(cfg, seed, truth, phase1, phase2, failure)
    write_json(directory / SUMMARY_FILE, summary)
    return summary


# ═══════════════════════════════════════════════════════════════════════════════
# End-to-end
# ═══════════════════════════════════════════════════════════════════════════════


def _failure(error: MixFedError, phase: str) -> dict[str, Any]:
    return {"code": error.code, "phase": phase, "message": str(error)}


def _complete_seed(
    cfg: ExperimentConfig,
    seed: int,
    out_dir: Path,
    clients: Sequence[ClientDataset],
    truth: GroundTruth,
    phase1: Phase1Result | None,
    theta_start: np.ndarray | None = None,
) -> dict[str, Any]:
    """Phase 2 from the Phase 1 centers (or an explicit start), then the run files."""
    phase2: Phase2Result | None = None
    failure: dict[str, Any] | None = None
    if theta_start is None and (phase1 is None or phase1.failure is not None):
        if phase1 is None:
            raise ConfigError(f"Seed {seed} has neither Phase 1 output nor a starting model")
        failure = _failure(phase1.failure, "phase1")
    else:
        try:
            start = theta_start if theta_start is not None else phase1.centers
            phase2 = stage_phase2(cfg, seed, clients, truth, start, out_dir)
        except MixFedError as e:
            logger.warning("Seed %d failed in phase2: %s", seed, e)
            failure = _failure(e, "phase2")
    return finalize_seed(cfg, seed, out_dir, truth, phase1, phase2, failure)


def run_seed(cfg: ExperimentConfig, seed: int, out_dir: Path) -> dict[str, Any]:
    """generate → Phase 1 → Phase 2 → evaluate; failures end up in the summary."""
    clients, truth = stage_generate(cfg, seed, out_dir if cfg.emit_instance else None)
    try:
        phase1 = stage_phase1(cfg, seed, clients, truth, out_dir)
    except MixFedError as e:
        logger.warning("Seed %d failed in phase1: %s", seed, e)
        return finalize_seed(cfg, seed, out_dir, truth, None, None, _failure(e, "phase1"))
    return _complete_seed(cfg, seed, out_dir, clients, truth, phase1)


def run_full(cfg: ExperimentConfig, out_dir: Path) -> list[dict[str, Any]]:
    """Run every seed; one summary per seed, also written to ``<out>/summary.json``."""
    out_dir = Path(out_dir)
    summaries = []
    for seed in cfg.seeds:
        logger.info("Running seed %d", seed)
        summaries.append(run_seed(cfg, seed, out_dir))
    write_json(out_dir / SUMMARY_FILE, {"seeds": summaries})
    return summaries


def load_stage_instance(out_dir: Path, seed: int) -> tuple[list[ClientDataset], GroundTruth]:
    return load_instance(seed_dir(out_dir, seed) / INSTANCE_DIR)


def saved_config(out_dir: Path, seed: int) -> ExperimentConfig | None:
    """The config a run wrote next to its phase2.json, if any."""
    path = seed_dir(out_dir, seed) / CONFIG_FILE
    return ExperimentConfig.model_validate(read_json(path)) if path.exists() else None


def evaluate_run(cfg: ExperimentConfig | None, out_dir: Path, seed: int) -> EvalReport:
    """Recompute the EvalReport from instance/ + phase2.json, else read summary.json.

    Without ``cfg`` the run's own config.json supplies σ and c_cal; a run
    without one is read from its summary.
    """
    directory = seed_dir(out_dir, seed)
    instance = directory / INSTANCE_DIR
    phase2_path = directory / PHASE2_FILE
    cfg = cfg if cfg is not None else saved_config(out_dir, seed)
    if cfg is not None and instance.exists() and phase2_path.exists():
        _, truth = load_instance(instance)
        data = read_json(phase2_path)
        return evaluate(
            np.asarray(data["model"]["thetas"]), np.asarray(data["labels"]), truth,
            sigma=cfg.mixture.sigma, c_cal=cfg.c_cal,
        )
    summary = read_json(directory / SUMMARY_FILE)
    if "report" not in summary:
        failure = summary.get("failure", {})
        raise ConfigError(f"Run for seed {seed} has no evaluation report ({failure.get('code', 'unknown')})")
    return EvalReport.from_dict(summary["report"])


# ═══════════════════════════════════════════════════════════════════════════════
# Staged pipeline
# ═══════════════════════════════════════════════════════════════════════════════


def run_stage_generate(cfg: ExperimentConfig, seed: int, out_dir: Path) -> GroundTruth:
    _, truth = stage_generate(cfg, seed, out_dir)
    return truth


def run_stage_phase1(cfg: ExperimentConfig, seed: int, out_dir: Path) -> Phase1Result:
    """Phase 1 on a persisted instance; writes phase1.json."""
    clients, truth = load_stage_instance(out_dir, seed)
    return stage_phase1(cfg, seed, clients, truth, out_dir)


def run_stage_phase2(
    cfg: ExperimentConfig, seed: int, out_dir: Path, theta_start: Path | None = None
) -> dict[str, Any]:
    """Phase 2 on a persisted instance and Phase 1 output, then the run files.

    ``theta_start`` overrides the Phase 1 centers as the starting model.
    """
    clients, truth = load_stage_instance(out_dir, seed)
    phase1_path = seed_dir(out_dir, seed) / PHASE1_FILE
    phase1 = Phase1Result.from_dict(read_json(phase1_path)) if phase1_path.exists() else None
    start = load_theta_start(theta_start) if theta_start is not None else None
    return _complete_seed(cfg, seed, out_dir, clients, truth, phase1, start)

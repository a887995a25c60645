"""Run-directory persistence: instances, JSON documents, JSONL traces and CSV plot data."""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DimensionError
from .model import ClientDataset, GroundTruth

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
PLOT_COLUMNS = ("phase", "round", "distance", "misclustering", "bytes")
FLOAT_DTYPE = np.dtype("<f8")


def _default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    """Deterministic JSON text; floats keep their shortest round-trip repr."""
    return json.dumps(data, indent=2, sort_keys=True, default=_default)


def write_json(path: Path, data: Any) -> None:
    """Write atomically through a temporary sibling."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(dumps(data) + "\n")
    tmp_path.replace(path)


def read_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return json.loads(path.read_text())


def write_trace(path: Path, rows: Iterable[dict[str, Any]]) -> None:
    """One JSON object per line, keys sorted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, default=_default) + "\n")


def read_trace(path: Path) -> list[dict[str, Any]]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_plot_csv(path: Path, rows: Sequence[dict[str, Any]]) -> None:
    """Columns phase,round,distance,misclustering,bytes; missing values stay empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in PLOT_COLUMNS])


# ═══════════════════════════════════════════════════════════════════════════════
# Instances
# ═══════════════════════════════════════════════════════════════════════════════


def _client_files(index: int) -> tuple[str, str]:
    return f"client_{index:05d}_features.bin", f"client_{index:05d}_responses.bin"


def save_instance(directory: Path, clients: Sequence[ClientDataset], truth: GroundTruth) -> Path:
    """Write the manifest plus little-endian float64 row-major client files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for client in clients:
        features_name, responses_name = _client_files(client.index)
        (directory / features_name).write_bytes(client.features.astype(FLOAT_DTYPE).tobytes(order="C"))
        (directory / responses_name).write_bytes(client.responses.astype(FLOAT_DTYPE).tobytes(order="C"))
        entries.append({
            "index": client.index,
            "n": client.n,
            "features": features_name,
            "responses": responses_name,
        })
    manifest = {"format_version": FORMAT_VERSION, **truth.to_dict(), "clients": entries}
    write_json(directory / MANIFEST_NAME, manifest)
    logger.info("Saved instance with %d clients to %s", len(clients), directory)
    return directory


def load_instance(directory: Path) -> tuple[list[ClientDataset], GroundTruth]:
    """Inverse of :func:`save_instance`; arrays come back bit-exact.

    Raises:
        FileNotFoundError: If the manifest or a client file is missing
        DimensionError: If a client file's size disagrees with the manifest
    """
    directory = Path(directory)
    manifest = read_json(directory / MANIFEST_NAME)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DimensionError(f"Unsupported instance format version: {manifest.get('format_version')}")
    d = int(manifest["d"])
    clients = []
    for entry in manifest["clients"]:
        n = int(entry["n"])
        features_path = directory / entry["features"]
        responses_path = directory / entry["responses"]
        for p in (features_path, responses_path):
            if not p.exists():
                raise FileNotFoundError(f"File not found: {p}")
        features = np.frombuffer(features_path.read_bytes(), dtype=FLOAT_DTYPE)
        responses = np.frombuffer(responses_path.read_bytes(), dtype=FLOAT_DTYPE)
        if features.size != n * d or responses.size != n:
            raise DimensionError(f"client {entry['index']}: files do not hold {n} rows of dimension {d}")
        clients.append(ClientDataset(
            index=int(entry["index"]),
            features=features.reshape(n, d).astype(float),
            responses=responses.astype(float),
        ))
    return clients, GroundTruth.from_dict(manifest)

"""mixfed - Clustered federated learning simulator for mixed linear regression."""

import importlib.metadata

# Importing formatters triggers decorator-based auto-registration
import mixfed.formatters  # noqa: F401

try:
    __version__ = importlib.metadata.version("mixfed-sim")
except importlib.metadata.PackageNotFoundError:
    __version__ = "0.0.0+local"

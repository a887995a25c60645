"""Simulator library: instance generation, the two federated phases, metrics and run orchestration."""

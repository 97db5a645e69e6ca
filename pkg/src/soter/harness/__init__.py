"""Deterministic multi-node harness: topologies, scenarios, adversaries, metrics."""

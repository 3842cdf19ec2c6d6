"""Experiment harness: seeded generators, conjecture probes, experiments and CLI."""

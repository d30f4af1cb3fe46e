"""Builtin scenario manifests and the registry that discovers them."""

from wavebreak.scenarios.registry import ScenarioRegistry

__all__ = ["ScenarioRegistry"]

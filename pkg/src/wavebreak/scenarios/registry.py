"""Scenario registry: discovers manifests shipped in builtin/ or a user directory."""

from __future__ import annotations

from pathlib import Path

from wavebreak.core.errors import WavebreakError
from wavebreak.core.scenario import Scenario
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

BUILTIN_DIR = Path(__file__).parent / "builtin"


class ScenarioRegistry:
    """Named scenarios loaded from YAML manifests."""

    def __init__(self) -> None:
        self._scenarios: dict[str, Scenario] = {}
        self._sources: dict[str, Path] = {}

    def discover(self, scenarios_dir: str | Path | None = None) -> None:
        """Load every *.yaml / *.yml manifest; broken files are logged and skipped."""
        search_dir = Path(scenarios_dir) if scenarios_dir else BUILTIN_DIR
        if not search_dir.exists():
            logger.warning("scenarios_dir_not_found", path=str(search_dir))
            return

        files = sorted([*search_dir.glob("*.yaml"), *search_dir.glob("*.yml")])
        for manifest_file in files:
            try:
                scenario = Scenario.from_file(manifest_file)
            except (WavebreakError, ValueError, OSError) as e:
                logger.warning("scenario_load_failed", file=manifest_file.name, error=str(e))
                continue
            self.register(scenario, source=manifest_file)
            logger.debug("scenario_registered", name=scenario.name, kind=scenario.kind.value)

    def register(self, scenario: Scenario, source: Path | None = None) -> None:
        self._scenarios[scenario.name] = scenario
        if source is not None:
            self._sources[scenario.name] = source

    def get(self, name: str) -> Scenario:
        if name not in self._scenarios:
            raise KeyError(
                f"Scenario '{name}' not found. Available: {self.list_scenarios()}"
            )
        return self._scenarios[name]

    def source(self, name: str) -> Path | None:
        return self._sources.get(name)

    def has(self, name: str) -> bool:
        return name in self._scenarios

    def list_scenarios(self) -> list[str]:
        return sorted(self._scenarios)

    def list_details(self) -> list[dict[str, str]]:
        return [
            {
                "name": s.name,
                "kind": s.kind.value,
                "description": s.description,
            }
            for s in sorted(self._scenarios.values(), key=lambda s: s.name)
        ]


def load_scenario(target: str | Path, registry: ScenarioRegistry | None = None) -> Scenario:
    """A manifest path if one exists on disk, otherwise a builtin scenario name."""
    path = Path(target)
    if path.suffix in (".yaml", ".yml", ".json") or path.exists():
        return Scenario.from_file(path)
    if registry is None:
        registry = ScenarioRegistry()
        registry.discover()
    return registry.get(str(target))

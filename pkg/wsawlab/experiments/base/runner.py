"""Base experiment runner.

Every CLI subcommand is an experiment: it validates its configuration,
computes a set of result tables plus a summary, and writes them together
with a run manifest. Subclasses implement :meth:`BaseExperiment.execute`.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional

import structlog
from pydantic import BaseModel, Field

from wsawlab import __version__
from wsawlab.domain.errors import ConfigurationError
from wsawlab.domain.montecarlo.metropolis import MetropolisConfig
from wsawlab.domain.montecarlo.perm import ChainGrowthConfig
from wsawlab.domain.montecarlo.statistics import EstimateWithError
from wsawlab.experiments.base.config import BudgetPresetModel, ExperimentConfig
from wsawlab.experiments.base.manifest import CatalogLoader, ExperimentManifestModel, RunManifestModel
from wsawlab.infrastructure.outputs import ResultTable, write_manifest, write_summary, write_table
from wsawlab.infrastructure.settings import WsawSettings, get_settings

logger = structlog.get_logger()


class RunSummary(BaseModel):
    """Structured result written to ``summary.json``."""

    experiment: str
    estimates: Dict[str, EstimateWithError] = Field(default_factory=dict)
    values: Dict[str, Any] = Field(default_factory=dict)


@dataclass
class ExperimentOutput:
    tables: List[ResultTable] = field(default_factory=list)
    estimates: Dict[str, EstimateWithError] = field(default_factory=dict)
    values: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunRecord:
    """Where a run put its files and what it reported."""

    directory: Path
    files: List[str]
    summary: RunSummary
    manifest: RunManifestModel


class BaseExperiment(ABC):
    """Abstract base class for experiments.

    Attributes
    ----------
    name : str
        Catalog name, equal to the CLI command.
    version : str
        Semantic version of the experiment; must match the catalog.
    """

    name: ClassVar[str]
    version: ClassVar[str] = "0.1.0"

    def __init__(
        self,
        config: ExperimentConfig,
        settings: Optional[WsawSettings] = None,
        catalog_path: Optional[str] = None,
    ) -> None:
        if config.command != self.name:
            raise ConfigurationError(f"config for '{config.command}' given to '{self.name}'")
        self.config = config
        self.settings = settings or get_settings()
        self.entry: ExperimentManifestModel = CatalogLoader.entry(self.name, self.version, catalog_path)
        self.budget = self._resolve_budget()
        self.log = logger.bind(experiment=self.name, seed=config.seed)

    def _resolve_budget(self) -> BudgetPresetModel:
        budget = self.config.budget
        if isinstance(budget, str):
            if budget not in self.entry.budgets:
                raise ConfigurationError(
                    f"unknown budget '{budget}' for {self.name}; "
                    f"choose one of {sorted(self.entry.budgets)} or an integer node cap"
                )
            return self.entry.budgets[budget]
        if budget < 1:
            raise ConfigurationError(f"budget must be positive, got {budget}")
        base = self.entry.budgets.get("small")
        if base is None:
            return BudgetPresetModel(node_budget=budget)
        return base.model_copy(update={"node_budget": budget})

    @property
    def node_budget(self) -> int:
        """Node cap: an explicit integer budget wins, presets are capped by settings."""
        if isinstance(self.config.budget, int):
            return self.budget.node_budget
        return min(self.budget.node_budget, self.settings.node_budget)

    @property
    def workers(self) -> int:
        return self.settings.workers

    def option(self, key: str, default: Any = None) -> Any:
        """Option value: explicit config, then catalog default, then ``default``."""
        if key in self.config.options and self.config.options[key] is not None:
            return self.config.options[key]
        return self.entry.option_defaults().get(key, default)

    def chain_growth(self) -> ChainGrowthConfig:
        if self.config.chain_growth is not None:
            return self.config.chain_growth
        return ChainGrowthConfig(
            tours=int(self.option("tours", self.budget.tours)),
            seed=self.config.seed,
            max_nodes=self.node_budget,
        )

    def metropolis(self) -> MetropolisConfig:
        if self.config.metropolis is not None:
            return self.config.metropolis
        sweeps = int(self.option("sweeps", self.budget.sweeps))
        return MetropolisConfig(
            sweeps=sweeps,
            thermalization=max(1, sweeps // 10),
            seed=self.config.seed,
            chains=int(self.option("chains", 1)),
        )

    def resolved_config(self) -> ExperimentConfig:
        """The config with catalog defaults and budget caps written out.

        Replaying it needs neither the catalog presets nor ``WSAW_NODE_BUDGET``.
        """
        options = dict(self.entry.option_defaults())
        options.update({k: v for k, v in self.config.options.items() if v is not None})
        options.setdefault("tours", self.budget.tours)
        options.setdefault("sweeps", self.budget.sweeps)
        options.setdefault("samples", self.budget.samples)
        return self.config.model_copy(update={"budget": self.node_budget, "options": options})

    def seeds(self) -> Dict[str, int]:
        seeds = {"seed": self.config.seed}
        if self.config.chain_growth is not None:
            seeds["chain_growth"] = self.config.chain_growth.seed
        if self.config.metropolis is not None:
            seeds["metropolis"] = self.config.metropolis.seed
        return seeds

    def samples(self) -> int:
        return int(self.option("samples", self.budget.samples))

    def validate(self) -> None:
        """Check command-specific preconditions before any work starts."""

    @abstractmethod
    def execute(self) -> ExperimentOutput:
        """Compute the experiment's tables and summary values."""
        raise NotImplementedError("Subclasses must implement execute()")

    def run(self, output_dir: Optional[str] = None) -> RunRecord:
        """Validate, execute and write CSV tables, ``summary.json`` and ``manifest.yaml``."""
        directory = Path(output_dir or self.config.output_path)
        self.validate()
        self.log.info("experiment_started", params=self.config.params.model_dump(), budget=self.config.budget)
        try:
            output = self.execute()
        except Exception as e:
            self.log.error("experiment_failed", error=str(e), error_type=type(e).__name__)
            raise

        directory.mkdir(parents=True, exist_ok=True)
        files = [write_table(directory, table).name for table in output.tables]
        summary = RunSummary(experiment=self.name, estimates=output.estimates, values=output.values)
        files.append(write_summary(directory, summary).name)
        manifest = RunManifestModel(
            tool_version=__version__,
            experiment=self.name,
            experiment_version=self.version,
            config=self.config,
            resolved=self.resolved_config(),
            budget=self.budget,
            node_budget=self.node_budget,
            seeds=self.seeds(),
            files=files + ["manifest.yaml"],
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        write_manifest(directory, manifest)
        self.log.info("experiment_completed", directory=str(directory), files=files)
        return RunRecord(directory=directory, files=manifest.files, summary=summary, manifest=manifest)

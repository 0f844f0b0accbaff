"""Experiment catalog and run manifests.

The catalog (``experiments/catalog.yaml``) declares, for every command, its
options, output files and budget presets. A run manifest records the fully
resolved configuration of one run so it can be replayed.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from wsawlab.domain.errors import ConfigurationError
from wsawlab.experiments.base.config import BudgetPresetModel, ExperimentConfig

DEFAULT_CATALOG = Path(__file__).resolve().parent.parent / "catalog.yaml"


class IOSpecModel(BaseModel):
    """An option or output file declared by an experiment."""

    name: str = Field(..., description="Option or file name")
    type: str = Field(..., description="Data type")
    description: str = Field("", description="What it holds")
    default: Any = Field(None, description="Default when the option is omitted")


class ExperimentManifestModel(BaseModel):
    """Catalog entry for one experiment."""

    name: str = Field(..., description="Experiment name, equal to its CLI command")
    version: str = Field(..., description="Experiment version")
    description: str = Field("", description="Experiment description")
    options: List[IOSpecModel] = Field(default_factory=list)
    outputs: List[IOSpecModel] = Field(default_factory=list)
    budgets: Dict[str, BudgetPresetModel] = Field(default_factory=dict)
    tags: List[str] = Field(default_factory=list)

    def option_defaults(self) -> Dict[str, Any]:
        return {opt.name: opt.default for opt in self.options if opt.default is not None}


class CatalogModel(BaseModel):
    experiments: List[ExperimentManifestModel] = Field(default_factory=list)

    def get(self, name: str) -> ExperimentManifestModel:
        for entry in self.experiments:
            if entry.name == name:
                return entry
        raise ConfigurationError(f"experiment '{name}' is not in the catalog")


class RunManifestModel(BaseModel):
    """What a finished run writes next to its tables."""

    tool_version: str
    experiment: str
    experiment_version: str
    config: ExperimentConfig
    resolved: Optional[ExperimentConfig] = Field(
        None, description="Config with defaults and caps pinned; replayed when present"
    )
    budget: BudgetPresetModel
    node_budget: Optional[int] = Field(None, description="Node cap in effect")
    seeds: Dict[str, int] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
    created_at: str


class CatalogLoader:
    """Load and validate the experiment catalog."""

    @staticmethod
    def load(catalog_path: Optional[Union[str, Path]] = None) -> CatalogModel:
        """Read the catalog YAML and validate it.

        Raises
        ------
        FileNotFoundError
            If the catalog file doesn't exist.
        ConfigurationError
            If the content is invalid or experiment names repeat.
        """
        path = Path(catalog_path) if catalog_path is not None else DEFAULT_CATALOG
        if not os.path.exists(path):
            raise FileNotFoundError(f"Catalog file not found: {path}")

        with open(path, "r") as f:
            data = yaml.safe_load(f)

        try:
            catalog = CatalogModel(**(data or {}))
        except (TypeError, ValidationError) as e:
            raise ConfigurationError(f"Invalid catalog format: {e}") from e

        names = [entry.name for entry in catalog.experiments]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigurationError(f"Catalog lists experiments more than once: {duplicates}")
        return catalog

    @staticmethod
    def entry(name: str, version: Optional[str] = None, catalog_path: Optional[Union[str, Path]] = None) -> ExperimentManifestModel:
        """Catalog entry for ``name``, optionally checking its version."""
        entry = CatalogLoader.load(catalog_path).get(name)
        if version is not None and entry.version != version:
            raise ConfigurationError(
                f"Catalog version '{entry.version}' doesn't match "
                f"experiment version '{version}' for '{name}'"
            )
        return entry


def load_run_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read an ExperimentConfig from a config file or a run manifest."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not hold a mapping")
    if "config" in data and "experiment" in data:
        data = data.get("resolved") or data["config"]
    return ExperimentConfig(**data)

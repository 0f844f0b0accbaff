from .config import COMMANDS, BudgetPresetModel, ExperimentConfig
from .manifest import CatalogLoader, load_run_config
from .runner import BaseExperiment, ExperimentOutput, RunRecord, RunSummary

__all__ = [
    "COMMANDS",
    "BaseExperiment",
    "BudgetPresetModel",
    "CatalogLoader",
    "ExperimentConfig",
    "ExperimentOutput",
    "RunRecord",
    "RunSummary",
    "load_run_config",
]

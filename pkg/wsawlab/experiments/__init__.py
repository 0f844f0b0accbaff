"""Experiment runners, one per CLI subcommand."""

from typing import Dict, Optional, Type

from wsawlab.experiments.base.config import ExperimentConfig
from wsawlab.experiments.base.runner import BaseExperiment, RunRecord
from wsawlab.experiments.enumeration import EnumerateExperiment, PlateauExperiment
from wsawlab.experiments.lace import LaceCheckExperiment
from wsawlab.experiments.sampling import MetropolisExperiment, PermExperiment
from wsawlab.experiments.scaling import (
    DegenerateExperiment,
    DiluteRatioExperiment,
    FddExperiment,
    TightnessExperiment,
)
from wsawlab.infrastructure.settings import WsawSettings

REGISTRY: Dict[str, Type[BaseExperiment]] = {
    cls.name: cls
    for cls in (
        EnumerateExperiment,
        LaceCheckExperiment,
        PermExperiment,
        MetropolisExperiment,
        FddExperiment,
        TightnessExperiment,
        DiluteRatioExperiment,
        DegenerateExperiment,
        PlateauExperiment,
    )
}


def run_experiment(
    config: ExperimentConfig,
    settings: Optional[WsawSettings] = None,
    output_dir: Optional[str] = None,
) -> RunRecord:
    """Build the experiment for ``config.command`` and run it."""
    return REGISTRY[config.command](config, settings).run(output_dir)


__all__ = ["REGISTRY", "BaseExperiment", "ExperimentConfig", "RunRecord", "run_experiment"]

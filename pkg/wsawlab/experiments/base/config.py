"""Experiment configuration models."""

from typing import Any, Dict, List, Literal, Optional, Union, get_args

from pydantic import BaseModel, ConfigDict, Field

from wsawlab.domain.montecarlo.metropolis import MetropolisConfig
from wsawlab.domain.montecarlo.perm import ChainGrowthConfig
from wsawlab.domain.walk import ModelParams

Command = Literal[
    "enumerate",
    "lace-check",
    "perm",
    "metropolis",
    "fdd",
    "tightness",
    "dilute-ratio",
    "degenerate",
    "plateau",
]

COMMANDS: List[str] = list(get_args(Command))


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce one run.

    ``budget`` is a preset name from the catalog or an explicit node cap.
    Sampler configs left unset are derived from the budget preset and
    ``seed``. ``options`` carries per-command settings (see the catalog).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    params: ModelParams
    chain_growth: Optional[ChainGrowthConfig] = None
    metropolis: Optional[MetropolisConfig] = None
    output_path: str = Field("results", description="Directory receiving CSV, summary and manifest")
    seed: int = Field(0, ge=0, lt=2**64)
    budget: Union[int, str] = "small"
    options: Dict[str, Any] = Field(default_factory=dict)


class BudgetPresetModel(BaseModel):
    """Caps attached to a budget preset."""

    node_budget: int = Field(..., ge=1, description="Enumeration / chain-growth node cap")
    tours: int = Field(200, ge=2, description="PERM tours")
    sweeps: int = Field(2000, ge=2, description="Metropolis sweeps including thermalisation")
    samples: int = Field(500, ge=2, description="Path snapshots for scaling statistics")

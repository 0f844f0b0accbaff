"""Exact-enumeration experiments: ``enumerate`` and ``plateau``."""

import math
from typing import Dict, List, Optional

import structlog

from wsawlab.domain.enumeration import (
    TORUS_DIRECT,
    TORUS_LIFT,
    EnumerationSummary,
    connective_ratio_sequence,
    enumerate_lengths,
    estimate_amplitude,
    fold_table,
    two_point_series,
)
from wsawlab.domain.errors import ConfigurationError, PreconditionError
from wsawlab.domain.walk import LatticePoint, ModelParams
from wsawlab.experiments.base.runner import BaseExperiment, ExperimentOutput
from wsawlab.infrastructure.outputs import ResultTable

logger = structlog.get_logger()


def coordinate_columns(d: int) -> List[str]:
    return [f"x_{i + 1}" for i in range(d)]


def amplitude_values(summaries: List[EnumerationSummary]) -> Dict[str, object]:
    """A_hat and mu_hat over the upper half of the lengths; None when too short."""
    try:
        fit = estimate_amplitude(summaries)
    except PreconditionError:
        return {"a_hat": None, "mu_hat": None, "fit_window": None}
    return {"a_hat": fit.a_hat, "mu_hat": fit.mu_hat, "fit_window": list(fit.window)}


def estimate_mu(params: ModelParams, n: int, workers: int, node_budget: int) -> float:
    """Connective-constant estimate c_n / c_{n-1} from exact Z^d counts."""
    plain = ModelParams(d=params.d, beta=params.beta)
    return connective_ratio_sequence(plain, n, workers=workers, node_budget=node_budget)[-1]


class EnumerateExperiment(BaseExperiment):
    """Exact c_k, mean-square displacement and ratios for k <= n, plus the endpoint table at n."""

    name = "enumerate"

    def validate(self) -> None:
        if self.option("lift", False) and not self.config.params.is_torus:
            raise ConfigurationError("lift enumeration needs a torus side r")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        mode = TORUS_LIFT if self.option("lift", False) else TORUS_DIRECT
        summaries = enumerate_lengths(
            params, workers=self.workers, node_budget=self.node_budget, torus_mode=mode
        )
        last = summaries[-1]

        counts = ResultTable("counts", ["n", "c_n", "msd"])
        for s in summaries:
            counts.add(s.n, s.c_n, s.msd)

        endpoints = ResultTable("endpoints", coordinate_columns(params.d) + ["weight"])
        for x, weight in sorted(last.endpoint_weights.items()):
            endpoints.add(*x, weight)

        ratios = ResultTable("ratios", ["n", "ratio"])
        for k in range(1, len(summaries)):
            if summaries[k - 1].c_n > 0:
                ratios.add(k, summaries[k].c_n / summaries[k - 1].c_n)

        return ExperimentOutput(
            tables=[counts, endpoints, ratios],
            values={
                "n": last.n,
                "c_n": last.c_n,
                "msd": last.msd,
                "nodes": last.nodes,
                "torus_mode": mode if params.is_torus else None,
                **amplitude_values(summaries),
            },
        )


class PlateauExperiment(BaseExperiment):
    """Truncated torus two-point function against the Z^d one, by site.

    ``z`` defaults to ``z_fraction / mu_hat`` with mu_hat from the exact
    ratio c_n / c_{n-1}.
    """

    name = "plateau"

    def validate(self) -> None:
        params = self.config.params
        if not params.is_torus:
            raise ConfigurationError("plateau needs a torus side r")
        if params.n < 1:
            raise ConfigurationError("plateau needs n >= 1 as the truncation length")

    def _activity(self) -> float:
        z: Optional[float] = self.option("z")
        if z is not None:
            return float(z)
        mu = estimate_mu(self.config.params, self.config.params.n, self.workers, self.node_budget)
        return float(self.option("z_fraction", 1.0)) / mu

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        z = self._activity()
        kwargs = {"workers": self.workers, "node_budget": self.node_budget}
        torus = two_point_series(params, z, params.n, **kwargs)
        plain = two_point_series(params.model_copy(update={"r": None}), z, params.n, **kwargs)
        folded = fold_table(plain.values, params.r)

        table = ResultTable(
            "plateau", coordinate_columns(params.d) + ["norm", "torus", "zd", "zd_folded"]
        )
        sites: Dict[LatticePoint, float] = torus.values
        for x in sorted(sites, key=lambda p: (sum(c * c for c in p), p)):
            table.add(
                *x,
                math.sqrt(sum(c * c for c in x)),
                sites[x],
                plain.values.get(x, 0.0),
                folded.get(x, 0.0),
            )
        logger.info("plateau_table_built", sites=len(sites), z=z)
        return ExperimentOutput(
            tables=[table],
            values={
                "z": z,
                "volume": params.volume,
                "torus_susceptibility": torus.susceptibility_partial,
                "zd_susceptibility": plain.susceptibility_partial,
                "truncation_error": torus.truncation_error,
            },
        )

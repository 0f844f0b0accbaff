"""Monte Carlo experiments: ``perm`` and ``metropolis``."""

from wsawlab.domain.errors import ConfigurationError
from wsawlab.domain.montecarlo.metropolis import metropolis_run
from wsawlab.domain.montecarlo.perm import perm_run
from wsawlab.experiments.base.runner import BaseExperiment, ExperimentOutput
from wsawlab.infrastructure.outputs import ResultTable


class PermExperiment(BaseExperiment):
    """PERM estimates of c_k (or c_k^T) and the weighted msd for every k <= n."""

    name = "perm"

    def validate(self) -> None:
        if self.config.params.n < 1:
            raise ConfigurationError("perm needs n >= 1")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        result = perm_run(params, self.chain_growth(), workers=self.workers)
        table = ResultTable(
            "perm",
            ["n", "c_n", "std_error", "log_c_n", "log_std_error", "msd", "msd_std_error"],
        )
        for k in range(result.n + 1):
            msd = result.msd[k]
            table.add(
                k,
                result.c[k].mean,
                result.c[k].std_error,
                result.log_c[k].mean,
                result.log_c[k].std_error,
                None if msd is None else msd.mean,
                None if msd is None else msd.std_error,
            )
        estimates = {"c_n": result.c_n, "log_c_n": result.log_c_n}
        if result.msd[result.n] is not None:
            estimates["msd"] = result.msd[result.n]
        return ExperimentOutput(
            tables=[table],
            estimates=estimates,
            values={"tours": result.tours, "nodes": result.nodes, "max_depth": result.max_depth},
        )


class MetropolisExperiment(BaseExperiment):
    """Fixed-length Metropolis run; writes every measured sweep of every chain."""

    name = "metropolis"

    def validate(self) -> None:
        if self.config.params.n < 1:
            raise ConfigurationError("metropolis needs n >= 1")

    def execute(self) -> ExperimentOutput:
        observables = list(self.option("observables") or ["end_to_end_sq"])
        result = metropolis_run(
            self.config.params, self.metropolis(), observables, workers=self.workers
        )
        trace = ResultTable("trace", ["chain", "sweep", *result.observables])
        for row in result.trace_rows():
            trace.add(*row)
        return ExperimentOutput(
            tables=[trace],
            estimates=result.estimates,
            values={"acceptance": result.acceptance, "chains": len(result.traces)},
        )

"""``lace-check``: KJK factorisation sweep and the |J| summability series."""

from typing import List

from wsawlab.domain.errors import ConfigurationError
from wsawlab.domain.lace import kjk_sweep, pi_series_partial
from wsawlab.experiments.base.runner import BaseExperiment, ExperimentOutput
from wsawlab.experiments.enumeration import estimate_mu
from wsawlab.infrastructure.outputs import ResultTable


class LaceCheckExperiment(BaseExperiment):
    """Worst KJK residual per (n, beta) and partial sums of sum_n n z^n sum_w |J[0, n]|.

    Options
    -------
    n_max : int
        Longest walk checked; defaults to ``params.n``.
    betas : list of float
        Interaction strengths for the sweep; defaults to ``[params.beta]``.
    exact : bool
        Rational arithmetic for the sweep.
    pi_n_max : int
        Longest length in the |J| series (0 skips it).
    z : float
        Activity for the series; defaults to ``z_fraction / mu_hat``.
    """

    name = "lace-check"

    def _n_max(self) -> int:
        return int(self.option("n_max", self.config.params.n))

    def _betas(self) -> List[float]:
        betas = self.option("betas") or [self.config.params.beta]
        return [float(b) for b in betas]

    def validate(self) -> None:
        if self.config.params.is_torus:
            raise ConfigurationError("lace-check runs on Z^d; drop r")
        if self._n_max() < 1:
            raise ConfigurationError("lace-check needs n_max >= 1")
        if any(not 0.0 <= b <= 1.0 for b in self._betas()):
            raise ConfigurationError(f"betas must lie in [0, 1], got {self._betas()}")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        n_max = self._n_max()
        exact = bool(self.option("exact", False))
        rows = kjk_sweep(params.d, n_max, self._betas(), exact=exact)

        kjk = ResultTable("kjk", ["n", "beta", "walks", "max_residual"])
        for row in rows:
            kjk.add(row.n, row.beta, row.walks, row.max_residual)
        values = {
            "max_residual": max(row.max_residual for row in rows),
            "exact": exact,
        }
        if exact:
            values["exact_zero"] = all(row.exact_zero for row in rows)
        tables = [kjk]

        pi_n_max = int(self.option("pi_n_max", n_max))
        if pi_n_max >= 1:
            z = self.option("z")
            if z is None:
                mu = estimate_mu(params, pi_n_max, self.workers, self.node_budget)
                z = float(self.option("z_fraction", 0.9)) / mu
            series = pi_series_partial(params, float(z), pi_n_max)
            pi = ResultTable("pi_series", ["n", "term", "partial_sum"])
            for n, term, partial in series.rows():
                pi.add(n, term, partial)
            tables.append(pi)
            values.update(
                {
                    "z": float(z),
                    "pi_partial_sum": series.partial_sums[-1],
                    "pi_terms_decreasing": series.same_parity_decreasing(
                        int(self.option("pi_n_min", 2))
                    ),
                }
            )
        return ExperimentOutput(tables=tables, values=values)

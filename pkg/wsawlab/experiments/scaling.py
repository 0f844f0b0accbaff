"""Scaling-limit and dilute-regime experiments."""

from typing import List, Optional, Sequence, Tuple

from wsawlab.domain.errors import ConfigurationError
from wsawlab.domain.scaling.experiments import (
    degenerate_regime_check,
    dilute_ratio_experiment,
    fdd_experiment,
    tightness_experiment,
)
from wsawlab.experiments.base.runner import BaseExperiment, ExperimentOutput
from wsawlab.infrastructure.outputs import ResultTable


def _pairs(raw: Sequence[Sequence[int]]) -> List[Tuple[int, int]]:
    pairs = []
    for item in raw:
        if len(item) != 2:
            raise ConfigurationError(f"pair {item!r} is not (n, r)")
        pairs.append((int(item[0]), int(item[1])))
    if not pairs:
        raise ConfigurationError("at least one (n, r) pair is required")
    return pairs


def _optional_float(raw: Optional[float]) -> Optional[float]:
    return None if raw is None else float(raw)


def _fit_pairs(raw: Optional[Sequence[Sequence[int]]]) -> Optional[List[Tuple[int, int]]]:
    return None if raw is None else _pairs(raw)


class _LengthsMixin:
    """``ns`` option with ``params.n`` as the fallback."""

    def lengths(self) -> List[int]:
        ns = self.option("ns") or [self.config.params.n]  # type: ignore[attr-defined]
        ns = [int(n) for n in ns]
        if any(n < 2 for n in ns):
            raise ConfigurationError(f"lengths must be at least 2, got {ns}")
        return ns


def _frequency_label(freqs) -> str:
    return ";".join(" ".join(repr(c) for c in block) for block in freqs)


class FddExperiment(_LengthsMixin, BaseExperiment):
    """Gaussian fdd deviation per length, using D_hat from PERM."""

    name = "fdd"

    def validate(self) -> None:
        self.lengths()
        if int(self.option("blocks", 2)) < 1:
            raise ConfigurationError("blocks must be at least 1")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        rows = fdd_experiment(
            params.d,
            params.beta,
            self.lengths(),
            metropolis=self.metropolis(),
            perm=self.chain_growth(),
            samples=self.samples(),
            blocks=int(self.option("blocks", 2)),
            horizon=float(self.option("horizon", 1.0)),
            torus=bool(self.option("torus", False)),
            workers=self.workers,
        )
        summary = ResultTable("fdd", ["n", "r", "d_hat", "deviation", "max_std_error"])
        points = ResultTable(
            "fdd_points", ["n", "frequencies", "re", "im", "std_error", "reference"]
        )
        for row in rows:
            summary.add(row.n, row.r, row.d_hat, row.deviation, row.max_std_error)
            for p in row.result.points:
                points.add(
                    row.n, _frequency_label(p.frequencies), p.mean.real, p.mean.imag, p.std_error, p.reference
                )
        deviations = [row.deviation for row in rows]
        return ExperimentOutput(
            tables=[summary, points],
            values={
                "deviations": {str(row.n): row.deviation for row in rows},
                "decreasing": all(a > b for a, b in zip(deviations, deviations[1:])),
            },
        )


class TightnessExperiment(_LengthsMixin, BaseExperiment):
    """A_hat = max E|Y_t - Y_s|^2 / |t - s| per length at r = floor(sqrt(n))."""

    name = "tightness"

    def validate(self) -> None:
        self.lengths()
        if int(self.option("grid", 6)) < 2:
            raise ConfigurationError("grid needs at least two time points")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        ns = self.lengths()
        results = tightness_experiment(
            params.d,
            params.beta,
            ns,
            metropolis=self.metropolis(),
            samples=self.samples(),
            horizon=float(self.option("horizon", 1.0)),
            grid_points=int(self.option("grid", 6)),
            workers=self.workers,
        )
        summary = ResultTable("tightness", ["n", "r", "a_hat"])
        pairs = ResultTable("tightness_pairs", ["n", "s", "t", "ratio"])
        for n, result in zip(ns, results):
            summary.add(n, result.r, result.a_hat)
            for s, t, ratio in result.ratios:
                pairs.add(n, s, t, ratio)
        a_hats = [result.a_hat for result in results]
        return ExperimentOutput(
            tables=[summary, pairs],
            values={"a_hat_max": max(a_hats), "a_hat_spread": max(a_hats) / min(a_hats)},
        )


class DiluteRatioExperiment(BaseExperiment):
    """c_n^T / c_n against beta (n^(-(d-4)/2) + n^2 / V) with one fitted constant."""

    name = "dilute-ratio"

    def validate(self) -> None:
        _pairs(self.option("pairs", []))

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        table = dilute_ratio_experiment(
            params.d,
            params.beta,
            _pairs(self.option("pairs", [])),
            exact_max=int(self.option("exact_max", 8)),
            perm=self.chain_growth(),
            workers=self.workers,
            node_budget=self.node_budget,
            envelope=_optional_float(self.option("envelope")),
            fit_pairs=_fit_pairs(self.option("fit_pairs")),
        )
        out = ResultTable("dilute_ratio", ["n", "r", "ratio", "std_error", "shape", "method"])
        for row in table.rows:
            out.add(row.n, row.r, row.ratio, row.std_error, row.shape, row.method)
        return ExperimentOutput(
            tables=[out],
            values={
                "envelope": table.envelope,
                "fitted_on": [list(p) for p in table.fitted_on],
                "held_out": len(table.held_out()),
                "bounded": table.bounded(3.0),
            },
        )


class DegenerateExperiment(BaseExperiment):
    """P^T(sup_k |w(k)| / r > epsilon) along (n, r) pairs with r growing."""

    name = "degenerate"

    def validate(self) -> None:
        pairs = _pairs(self.option("pairs", []))
        if any(r < 3 for _, r in pairs):
            raise ConfigurationError("torus sides must be at least 3")
        if float(self.option("epsilon", 0.25)) <= 0:
            raise ConfigurationError("epsilon must be positive")

    def execute(self) -> ExperimentOutput:
        params = self.config.params
        table = degenerate_regime_check(
            params.d,
            params.beta,
            _pairs(self.option("pairs", [])),
            float(self.option("epsilon", 0.25)),
            self.metropolis(),
            self.samples(),
            workers=self.workers,
        )
        out = ResultTable("degenerate", ["n", "r", "probability", "std_error", "samples"])
        for row in table.rows:
            out.add(row.n, row.r, row.probability, row.std_error, row.samples)
        return ExperimentOutput(
            tables=[out],
            values={"epsilon": table.epsilon, "decreasing": table.is_decreasing()},
        )

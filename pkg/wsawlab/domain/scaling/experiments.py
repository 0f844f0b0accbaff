"""Finite-size experiments probing the dilute torus regime and the scaling limit."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from wsawlab.domain.enumeration import DEFAULT_NODE_BUDGET, enumerate_lengths, evaluate_polynomial
from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.montecarlo.metropolis import MetropolisConfig, sample_positions
from wsawlab.domain.montecarlo.perm import ChainGrowthConfig, perm_run
from wsawlab.domain.scaling.statistics import (
    DiffusionFit,
    FddResult,
    IncrementSpec,
    TightnessResult,
    default_tightness_grid,
    diffusion_fit,
    fdd_statistic,
    standard_frequency_grid,
    tightness_check,
)
from wsawlab.domain.walk import ModelParams, torus_representative

logger = structlog.get_logger()

#: r = floor(n ** (1/2 - REGIME_DELTA)) keeps r^2 << n << V^(1/2) for d = 5.
REGIME_DELTA = 0.1


def regime_side(n: int, delta: float = REGIME_DELTA) -> int:
    """Torus side for length n in the scaling regime, at least 3."""
    return max(3, int(math.floor(n ** (0.5 - delta))))


def correction_shape(n: int, d: int, volume: int, beta: float) -> float:
    """beta * (n^(-(d-4)/2) + n^2 / V)."""
    return beta * (n ** (-(d - 4) / 2.0) + n**2 / volume)


@dataclass(frozen=True)
class DiluteRatioRow:
    n: int
    r: int
    ratio: float
    std_error: float
    shape: float
    method: str


@dataclass(frozen=True)
class DiluteRatioTable:
    """c_n^T / c_n against the predicted correction shape.

    ``envelope`` is the constant C fitted on the ``fitted_on`` pairs (or
    supplied up front, in which case ``fitted_on`` is empty). ``bounded``
    tests the remaining rows against C * shape.
    """

    d: int
    beta: float
    rows: Tuple[DiluteRatioRow, ...]
    envelope: float
    fitted_on: Tuple[Tuple[int, int], ...] = ()

    def held_out(self) -> Tuple[DiluteRatioRow, ...]:
        fitted = set(self.fitted_on)
        return tuple(row for row in self.rows if (row.n, row.r) not in fitted)

    def bounded(self, sigmas: float = 0.0) -> bool:
        return all(
            abs(row.ratio - 1.0) <= self.envelope * row.shape + sigmas * row.std_error + 1e-15
            for row in self.held_out()
        )


def calibration_pairs(pairs: Sequence[Tuple[int, int]]) -> Tuple[Tuple[int, int], ...]:
    """Every other pair in (n, r) order, starting with the first."""
    return tuple(sorted(set(pairs))[::2])


def fit_envelope(rows: Sequence[DiluteRatioRow]) -> float:
    """Smallest C with |ratio - 1| <= C * shape on ``rows``."""
    deviations = [
        abs(row.ratio - 1.0) / row.shape for row in rows if row.shape > 0 and row.ratio != 1.0
    ]
    return max(deviations) if deviations else 0.0


def build_dilute_table(
    d: int,
    beta: float,
    rows: Sequence[DiluteRatioRow],
    *,
    envelope: Optional[float] = None,
    fit_pairs: Optional[Sequence[Tuple[int, int]]] = None,
) -> DiluteRatioTable:
    """Attach the envelope: a supplied C, or one fitted on ``fit_pairs``."""
    if envelope is not None:
        if envelope < 0:
            raise PreconditionError(f"envelope must be nonnegative, got {envelope}")
        return DiluteRatioTable(d=d, beta=beta, rows=tuple(rows), envelope=envelope)
    if fit_pairs is None:
        fitted = calibration_pairs([(row.n, row.r) for row in rows])
    else:
        fitted = tuple((int(n), int(r)) for n, r in fit_pairs)
    unknown = set(fitted) - {(row.n, row.r) for row in rows}
    if unknown:
        raise PreconditionError(f"fit pairs {sorted(unknown)} are not in the table")
    c = fit_envelope([row for row in rows if (row.n, row.r) in fitted])
    return DiluteRatioTable(d=d, beta=beta, rows=tuple(rows), envelope=c, fitted_on=fitted)


def _exact_ratios(
    d: int, beta: float, pairs: Sequence[Tuple[int, int]], workers: int, node_budget: int
) -> Dict[Tuple[int, int], float]:
    if not pairs:
        return {}
    beta_q = Fraction(str(beta))
    plain = enumerate_lengths(
        ModelParams(d=d, beta=beta), max(n for n, _ in pairs), workers=workers, node_budget=node_budget
    )
    out: Dict[Tuple[int, int], float] = {}
    for r in sorted({r for _, r in pairs}):
        lengths = [n for n, rr in pairs if rr == r]
        torus = enumerate_lengths(
            ModelParams(d=d, beta=beta, r=r), max(lengths), workers=workers, node_budget=node_budget
        )
        for n in lengths:
            num = Fraction(evaluate_polynomial(torus[n].contact_polynomial, beta_q))
            den = Fraction(evaluate_polynomial(plain[n].contact_polynomial, beta_q))
            out[(n, r)] = float(num / den)
    return out


def dilute_ratio_experiment(
    d: int,
    beta: float,
    pairs: Sequence[Tuple[int, int]],
    *,
    exact_max: int = 8,
    perm: Optional[ChainGrowthConfig] = None,
    workers: int = 1,
    node_budget: int = DEFAULT_NODE_BUDGET,
    envelope: Optional[float] = None,
    fit_pairs: Optional[Sequence[Tuple[int, int]]] = None,
) -> DiluteRatioTable:
    """Tabulate c_n^T / c_n for (n, r) pairs.

    Lengths up to ``exact_max`` use exact enumeration (rational arithmetic,
    so the ratio is exactly 1 when no walk can wrap); longer ones use PERM
    with a delta-method error on the log scale.

    C is taken from ``envelope`` when given, otherwise fitted on ``fit_pairs``
    (default: every other pair); ``bounded()`` then checks the other rows.
    """
    for n, r in pairs:
        if n < 1 or r < 3:
            raise PreconditionError(f"invalid pair (n={n}, r={r})")
    exact_pairs = [(n, r) for n, r in pairs if n <= exact_max]
    exact = _exact_ratios(d, beta, exact_pairs, workers, node_budget)
    perm_cfg = perm or ChainGrowthConfig()

    rows: List[DiluteRatioRow] = []
    for n, r in pairs:
        shape = correction_shape(n, d, r**d, beta)
        if (n, r) in exact:
            rows.append(DiluteRatioRow(n, r, exact[(n, r)], 0.0, shape, "exact"))
            continue
        plain = perm_run(ModelParams(d=d, beta=beta, n=n), perm_cfg, workers=workers).log_c_n
        torus = perm_run(ModelParams(d=d, beta=beta, r=r, n=n), perm_cfg, workers=workers).log_c_n
        ratio = math.exp(torus.mean - plain.mean)
        se = ratio * math.hypot(torus.std_error, plain.std_error)
        rows.append(DiluteRatioRow(n, r, ratio, se, shape, "perm"))

    table = build_dilute_table(d, beta, rows, envelope=envelope, fit_pairs=fit_pairs)
    logger.info(
        "dilute_ratio_done",
        d=d,
        beta=beta,
        rows=len(rows),
        envelope=table.envelope,
        held_out=len(table.held_out()),
    )
    return table


@dataclass(frozen=True)
class DegenerateRow:
    n: int
    r: int
    probability: float
    std_error: float
    samples: int


@dataclass(frozen=True)
class DegenerateTable:
    epsilon: float
    rows: Tuple[DegenerateRow, ...]

    def is_decreasing(self) -> bool:
        probs = [row.probability for row in self.rows]
        return all(a > b for a, b in zip(probs, probs[1:]))


def sup_exceedance(positions: np.ndarray, r: int, epsilon: float) -> np.ndarray:
    """Per sample: does sup_k |rep(w(k))| / r exceed epsilon?"""
    reps = torus_representative(positions, r)
    sup = np.sqrt(np.max(np.sum(reps.astype(float) ** 2, axis=2), axis=1)) / r
    return sup > epsilon


def degenerate_regime_check(
    d: int,
    beta: float,
    pairs: Sequence[Tuple[int, int]],
    epsilon: float,
    cfg: MetropolisConfig,
    samples: int,
    workers: int = 1,
) -> DegenerateTable:
    """Empirical P^T(sup_k |w(k)| / r > epsilon) for each (n, r)."""
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    if samples < 2:
        raise PreconditionError("need at least two samples per pair")
    rows = []
    for n, r in pairs:
        params = ModelParams(d=d, beta=beta, r=r, n=n)
        hits = sup_exceedance(sample_positions(params, cfg, samples, workers), r, epsilon)
        p = float(hits.mean())
        rows.append(DegenerateRow(n, r, p, math.sqrt(p * (1.0 - p) / samples), samples))
        logger.debug("degenerate_pair_done", n=n, r=r, probability=p)
    return DegenerateTable(epsilon=epsilon, rows=tuple(rows))


def estimate_diffusion(
    params: ModelParams, perm: ChainGrowthConfig, window: Optional[Tuple[int, int]] = None, workers: int = 1
) -> DiffusionFit:
    """D_hat from PERM mean-square displacements on [n/2, n] (or ``window``)."""
    result = perm_run(params, perm, workers=workers)
    lo, hi = window if window is not None else (params.n // 2, params.n)
    return diffusion_fit(result.msd_table(range(lo, hi + 1)), (lo, hi))


@dataclass(frozen=True)
class FddRow:
    n: int
    r: Optional[int]
    d_hat: float
    deviation: float
    max_std_error: float
    result: FddResult = field(repr=False, compare=False)


def fdd_experiment(
    d: int,
    beta: float,
    ns: Sequence[int],
    *,
    metropolis: MetropolisConfig,
    perm: ChainGrowthConfig,
    samples: int,
    blocks: int = 2,
    horizon: float = 1.0,
    torus: bool = False,
    workers: int = 1,
) -> List[FddRow]:
    """Gaussian fdd deviation per length on the standard frequency grid.

    k = n / horizon. With ``torus`` the walks live on T_r^d with
    r = :func:`regime_side` (n) and are lifted before forming increments.
    """
    rows = []
    grid = standard_frequency_grid(d, blocks)
    for n in ns:
        r = regime_side(n) if torus else None
        params = ModelParams(d=d, beta=beta, r=r, n=n)
        fit = estimate_diffusion(params, perm, workers=workers)
        spec = IncrementSpec.uniform(blocks, horizon, n / horizon)
        result = fdd_statistic(
            sample_positions(params, metropolis, samples, workers), spec, fit.d_hat, grid
        )
        rows.append(
            FddRow(
                n=n,
                r=r,
                d_hat=fit.d_hat,
                deviation=result.deviation,
                max_std_error=max(p.std_error for p in result.points),
                result=result,
            )
        )
        logger.info("fdd_length_done", n=n, r=r, d_hat=fit.d_hat, deviation=result.deviation)
    return rows


def tightness_experiment(
    d: int,
    beta: float,
    ns: Sequence[int],
    *,
    metropolis: MetropolisConfig,
    samples: int,
    horizon: float = 1.0,
    grid_points: int = 6,
    workers: int = 1,
) -> List[TightnessResult]:
    """A_hat per length at matched r = floor(sqrt(n / horizon))."""
    out = []
    for n in ns:
        r = max(1, int(math.floor(math.sqrt(n / horizon))))
        params = ModelParams(d=d, beta=beta, n=n)
        grid = default_tightness_grid(min(horizon, n / r**2), grid_points)
        result = tightness_check(sample_positions(params, metropolis, samples, workers), r, grid)
        out.append(result)
        logger.info("tightness_length_done", n=n, r=r, a_hat=result.a_hat)
    return out

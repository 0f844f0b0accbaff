"""Unit tests for PERM chain growth against exact enumeration."""

import math

import pytest
from pydantic import ValidationError

from wsawlab.domain.enumeration import enumerate_lengths, enumerate_walks
from wsawlab.domain.errors import BudgetExceededError, DegenerateSamplerError, PreconditionError
from wsawlab.domain.montecarlo.perm import (
    ChainGrowthConfig,
    perm_partition_estimate,
    perm_run,
    pilot_log_references,
)
from wsawlab.domain.montecarlo.statistics import pool
from wsawlab.domain.walk import ModelParams


def params(d=2, beta=0.0, r=None, n=0):
    return ModelParams(d=d, beta=beta, r=r, n=n)


class TestChainGrowthConfig:
    """Test cases for ChainGrowthConfig validation."""

    def test_defaults(self):
        """Test that defaults validate."""
        cfg = ChainGrowthConfig()
        assert cfg.prune_threshold < cfg.enrich_threshold

    def test_thresholds_must_be_ordered(self):
        """Test that prune >= enrich is rejected."""
        with pytest.raises(ValidationError):
            ChainGrowthConfig(enrich_threshold=1.0, prune_threshold=1.0)

    def test_needs_two_tours(self):
        """Test that a single tour leaves no error bar and is rejected."""
        with pytest.raises(ValidationError):
            ChainGrowthConfig(tours=1)


class TestPerm:
    """Test cases for perm_run estimates."""

    def test_free_walks_are_exact(self):
        """Test that beta = 0 reproduces (2d)^k with zero error."""
        result = perm_run(params(d=3, n=7), ChainGrowthConfig(tours=20, seed=1))
        for k in range(8):
            assert result.c[k].mean == pytest.approx(6.0**k, rel=1e-12)
            assert result.c[k].std_error == 0.0
            assert result.log_c[k].mean == pytest.approx(k * math.log(6.0))

    def test_matches_enumeration(self):
        """Test c_8 on Z^2 at beta = 0.3 against the exact count."""
        p = params(d=2, beta=0.3, n=8)
        exact = enumerate_walks(p).c_n
        est = perm_partition_estimate(p, ChainGrowthConfig(tours=400, seed=7))
        assert est.covers(exact, sigmas=4.0)
        assert est.mean == pytest.approx(exact, rel=0.1)

    def test_matches_enumeration_high_dimension(self):
        """Test c_6 on Z^5 at beta = 0.1 and the msd against exact values."""
        p = params(d=5, beta=0.1, n=6)
        exact = enumerate_walks(p)
        result = perm_run(p, ChainGrowthConfig(tours=300, seed=3))
        assert result.c_n.covers(exact.c_n, sigmas=4.0)
        assert result.msd[6].covers(exact.msd, sigmas=4.0)

    def test_strict_self_avoidance(self):
        """Test that beta = 1 estimates the 780 six-step SAWs on Z^2."""
        est = perm_partition_estimate(params(beta=1.0, n=6), ChainGrowthConfig(tours=400, seed=2))
        assert est.covers(780.0, sigmas=4.0)

    def test_torus(self):
        """Test c_6^T on the r = 5 torus against torus enumeration."""
        p = params(d=2, beta=0.3, r=5, n=6)
        exact = enumerate_walks(p).c_n
        est = perm_partition_estimate(p, ChainGrowthConfig(tours=400, seed=5))
        assert est.covers(exact, sigmas=4.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("r", [None, 5])
    def test_eight_steps_in_five_dimensions(self, r):
        """Test c_8 on Z^5 and on the r = 5 torus at beta = 0.1."""
        p = params(d=5, beta=0.1, r=r, n=8)
        exact = enumerate_walks(p).c_n
        est = perm_partition_estimate(p, ChainGrowthConfig(tours=400, seed=9))
        assert est.covers(exact, sigmas=4.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("beta", [0.05, 0.1])
    def test_pooled_runs_in_five_dimensions(self, beta):
        """Test that 50 independent runs pooled cover c_4, c_6 and c_8 on Z^5."""
        exact = enumerate_lengths(params(d=5, beta=beta), 8)
        p = params(d=5, beta=beta, n=8)
        runs = [
            perm_run(p, ChainGrowthConfig(tours=20, seed=1000 + i)) for i in range(50)
        ]
        for n in (4, 6, 8):
            pooled = pool([run.c[n] for run in runs])
            assert pooled.covers(exact[n].c_n, sigmas=4.0)

    def test_reproducible_and_worker_independent(self):
        """Test that results depend only on the seed, not on the worker count."""
        p = params(d=2, beta=0.4, n=6)
        cfg = ChainGrowthConfig(tours=40, seed=9)
        serial = perm_run(p, cfg)
        again = perm_run(p, cfg)
        parallel = perm_run(p, cfg, workers=2)
        assert serial.log_c_n == again.log_c_n
        assert serial.log_c_n == parallel.log_c_n
        assert serial.nodes == parallel.nodes

    def test_all_tours_die(self):
        """Test that a torus with fewer sites than the walk kills every SAW."""
        with pytest.raises(DegenerateSamplerError) as exc_info:
            perm_run(params(d=1, beta=1.0, r=3, n=4), ChainGrowthConfig(tours=10))
        assert exc_info.value.statistics["tours"] == 10
        assert exc_info.value.statistics["max_depth"] < 4

    def test_node_budget(self):
        """Test that the node cap raises BudgetExceededError."""
        with pytest.raises(BudgetExceededError):
            perm_run(params(n=6), ChainGrowthConfig(tours=5, max_nodes=10))

    def test_length_must_be_positive(self):
        """Test that n = 0 is a precondition error."""
        with pytest.raises(PreconditionError):
            perm_run(params(n=0), ChainGrowthConfig())

    def test_pilot_levels_for_free_walks(self):
        """Test that the pilot reference is zero for every length at beta = 0."""
        refs = pilot_log_references(params(d=2), 5, 20, seed=0)
        assert refs.tolist() == [0.0] * 6

    def test_msd_table(self):
        """Test the msd lookup skips lengths without an estimate."""
        result = perm_run(params(d=2, n=4), ChainGrowthConfig(tours=50, seed=4))
        table = result.msd_table([1, 4])
        assert table[1] == pytest.approx(1.0)
        assert set(table) == {1, 4}

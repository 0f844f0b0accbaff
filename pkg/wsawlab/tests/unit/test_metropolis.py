"""Unit tests for the fixed-length Metropolis sampler and its observables."""

import numpy as np
import pytest
from pydantic import ValidationError

from wsawlab.domain.enumeration import enumerate_walks
from wsawlab.domain.errors import PreconditionError
from wsawlab.domain.montecarlo.metropolis import (
    CRANKSHAFT,
    PIVOT,
    MetropolisChain,
    MetropolisConfig,
    metropolis_run,
    metropolis_sample,
    sample_paths,
    sample_positions,
)
from wsawlab.domain.montecarlo.observables import parse_observable, parse_observables
from wsawlab.domain.montecarlo.streams import CHAIN, stream
from wsawlab.domain.walk import ModelParams, Walk, lift_walk


def params(d=2, beta=0.0, r=None, n=0):
    return ModelParams(d=d, beta=beta, r=r, n=n)


def config(**kwargs):
    values = {"sweeps": 400, "thermalization": 40, "seed": 0}
    values.update(kwargs)
    return MetropolisConfig(**values)


class TestMetropolisConfig:
    """Test cases for MetropolisConfig validation."""

    def test_thermalization_below_sweeps(self):
        """Test that thermalisation must leave measured sweeps."""
        with pytest.raises(ValidationError):
            MetropolisConfig(sweeps=100, thermalization=100)

    def test_some_move_must_exist(self):
        """Test that disabling both pivots and local moves is rejected."""
        with pytest.raises(ValidationError):
            MetropolisConfig(pivot_fraction=0.0, local_moves=False)

    def test_pivot_only(self):
        """Test that local moves can be switched off."""
        cfg = MetropolisConfig(pivot_fraction=1.0, local_moves=False)
        chain = MetropolisChain(params(n=5), cfg, stream(0, CHAIN))
        assert {chain.move() for _ in range(20)} == {PIVOT}


class TestMetropolisChain:
    """Test cases for single-chain moves and bookkeeping."""

    @pytest.mark.parametrize("r", [None, 3])
    def test_states_stay_walks_and_contacts_stay_exact(self, r):
        """Test that every move keeps a valid walk and an exact contact count."""
        chain = MetropolisChain(params(d=3, beta=0.4, r=r, n=12), config(), stream(1, CHAIN))
        for _ in range(300):
            chain.move()
            Walk.from_positions(chain.positions)
            assert chain.contacts == chain.count_contacts(chain.positions)

    def test_all_move_kinds_are_used(self):
        """Test that pivot, kink, end and crankshaft moves are all proposed."""
        chain = MetropolisChain(params(d=2, n=10), config(), stream(2, CHAIN))
        for _ in range(50):
            chain.sweep()
        assert set(chain.proposed) == {"pivot", "kink", "end", "crankshaft"}
        assert all(0.0 <= rate <= 1.0 for rate in chain.acceptance_rates().values())

    def test_crankshaft_needs_two_dimensions(self):
        """Test that d = 1 chains never propose crankshaft moves."""
        chain = MetropolisChain(params(d=1, n=6), config(), stream(3, CHAIN))
        for _ in range(20):
            chain.sweep()
        assert CRANKSHAFT not in chain.proposed

    def test_pivot_preserves_length_and_norms(self):
        """Test that a pivot moves the tail by a lattice symmetry."""
        chain = MetropolisChain(params(d=3, n=8), config(), stream(4, CHAIN))
        before = chain.positions.copy()
        chain.pivot()
        steps_before = np.abs(np.diff(before, axis=0)).sum(axis=1)
        steps_after = np.abs(np.diff(chain.positions, axis=0)).sum(axis=1)
        assert np.array_equal(steps_before, steps_after)

    def test_free_chain_accepts_everything(self):
        """Test that at beta = 0 every valid proposal is accepted."""
        chain = MetropolisChain(params(d=2, n=10), config(local_moves=False, pivot_fraction=1.0), stream(5, CHAIN))
        for _ in range(100):
            assert chain.pivot()

    def test_wrong_start_shape(self):
        """Test that a starting state of the wrong shape is rejected."""
        with pytest.raises(PreconditionError):
            MetropolisChain(params(n=4), config(), stream(0, CHAIN), positions=np.zeros((3, 2)))

    def test_needs_a_step(self):
        """Test that n = 0 has nothing to sample."""
        with pytest.raises(PreconditionError):
            MetropolisChain(params(n=0), config(), stream(0, CHAIN))


class TestMetropolisEstimates:
    """Test cases for estimates against exact enumeration."""

    def test_end_to_end_matches_enumeration(self):
        """Test E|w(8)|^2 on Z^2 at beta = 0.3 against the exact value."""
        p = params(d=2, beta=0.3, n=8)
        exact = enumerate_walks(p).msd
        est = metropolis_sample(p, config(sweeps=4000, thermalization=400, seed=11), ["end_to_end_sq"])
        assert est["end_to_end_sq"].covers(exact, sigmas=4.0)

    def test_torus_end_to_end_matches_enumeration(self):
        """Test the torus msd for r = 3 against torus enumeration."""
        p = params(d=2, beta=0.3, r=3, n=6)
        exact = enumerate_walks(p).msd
        est = metropolis_sample(p, config(sweeps=4000, thermalization=400, seed=12), ["end_to_end_sq"])
        assert est["end_to_end_sq"].covers(exact, sigmas=4.0)

    def test_contacts_match_enumeration(self):
        """Test the mean contact number against the contact polynomial."""
        p = params(d=2, beta=0.5, n=6)
        poly = enumerate_walks(p).contact_polynomial
        weights = {m: count * 0.5**m for m, count in poly.items()}
        exact = sum(m * w for m, w in weights.items()) / sum(weights.values())
        est = metropolis_sample(p, config(sweeps=4000, thermalization=400, seed=13), ["contacts"])
        assert est["contacts"].covers(exact, sigmas=4.0)

    @pytest.mark.slow
    def test_free_walk_diffuses(self):
        """Test E|w(100)|^2 / 100 close to 1 at beta = 0."""
        est = metropolis_sample(
            params(d=2, n=100), config(sweeps=2000, thermalization=200, seed=14), ["end_to_end_sq"]
        )
        assert est["end_to_end_sq"].covers(100.0, sigmas=4.0)
        assert est["end_to_end_sq"].mean / 100.0 == pytest.approx(1.0, abs=0.2)

    def test_independent_seeds_agree(self):
        """Test that two seeds give estimates within their combined error."""
        p = params(d=3, beta=0.4, n=10)
        a = metropolis_sample(p, config(sweeps=2000, thermalization=200, seed=31), ["end_to_end_sq"])
        b = metropolis_sample(p, config(sweeps=2000, thermalization=200, seed=32), ["end_to_end_sq"])
        x, y = a["end_to_end_sq"], b["end_to_end_sq"]
        assert abs(x.mean - y.mean) <= 4.0 * np.hypot(x.std_error, y.std_error)

    @pytest.mark.slow
    def test_end_to_end_in_five_dimensions(self):
        """Test E|w(8)|^2 on Z^5 at beta = 0.1 against the exact value."""
        p = params(d=5, beta=0.1, n=8)
        exact = enumerate_walks(p).msd
        est = metropolis_sample(p, config(sweeps=4000, thermalization=400, seed=33), ["end_to_end_sq"])
        assert est["end_to_end_sq"].covers(exact, sigmas=4.0)

    def test_chains_pool_and_trace_rows(self):
        """Test pooled chains and the layout of trace rows."""
        p = params(d=2, beta=0.2, n=6)
        cfg = config(sweeps=50, thermalization=10, chains=3)
        result = metropolis_run(p, cfg, ["end_to_end_sq", "contacts"])
        assert result.observables == ("end_to_end_sq", "contacts")
        assert len(result.traces) == 3
        assert all(trace.shape == (40, 2) for trace in result.traces)
        rows = result.trace_rows()
        assert len(rows) == 120
        assert rows[0][:2] == [0, 11]
        assert rows[-1][:2] == [2, 50]

    def test_reproducible(self):
        """Test that the same seed gives identical traces."""
        p = params(d=3, beta=0.3, n=8)
        a = metropolis_run(p, config(seed=21), ["end_to_end_sq"])
        b = metropolis_run(p, config(seed=21), ["end_to_end_sq"])
        assert all(np.array_equal(x, y) for x, y in zip(a.traces, b.traces))

    def test_worker_independent(self):
        """Test that chains fanned out over processes match the serial run."""
        p = params(d=3, beta=0.3, n=8)
        cfg = config(sweeps=60, thermalization=10, seed=22, chains=3)
        serial = metropolis_run(p, cfg, ["end_to_end_sq", "contacts"])
        parallel = metropolis_run(p, cfg, ["end_to_end_sq", "contacts"], workers=2)
        assert all(np.array_equal(x, y) for x, y in zip(serial.traces, parallel.traces))
        assert serial.estimates == parallel.estimates
        assert serial.acceptance == parallel.acceptance


class TestDetailedBalance:
    """Test cases for reversibility of the Metropolis moves."""

    @pytest.mark.parametrize("r", [None, 3])
    def test_kink_pair(self, r):
        """Test pi(a) P(a -> b) = pi(b) P(b -> a) for two walks one kink apart."""
        a = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]])
        b = np.array([[0, 0], [1, 0], [0, 0], [0, 1], [0, 0]])
        chain = MetropolisChain(params(d=2, beta=0.5, r=r, n=4), config(), stream(0, CHAIN), a)
        assert chain.contacts == 1
        forward = chain._local_delta([2], b[2][None, :])
        chain.set_positions(b)
        assert chain.contacts == 3
        backward = chain._local_delta([2], a[2][None, :])
        assert (forward, backward) == (2, -2)

        weight = {"a": 0.5**1, "b": 0.5**3}
        assert weight["a"] * chain.acceptance_probability(forward) == pytest.approx(
            weight["b"] * chain.acceptance_probability(backward)
        )

    def test_acceptance_probability(self):
        """Test min(1, (1 - beta)^delta) including strict self-avoidance."""
        chain = MetropolisChain(params(d=2, beta=0.25, n=3), config(), stream(0, CHAIN))
        assert chain.acceptance_probability(-2) == 1.0
        assert chain.acceptance_probability(0) == 1.0
        assert chain.acceptance_probability(2) == pytest.approx(0.5625)
        strict = MetropolisChain(params(d=2, beta=1.0, n=3), config(), stream(0, CHAIN))
        assert strict.acceptance_probability(1) == 0.0

    def test_pivot_fluxes_balance(self):
        """Test equal transition counts both ways between two-step walks in d = 1."""
        cfg = MetropolisConfig(pivot_fraction=1.0, local_moves=False, sweeps=2, thermalization=1)
        chain = MetropolisChain(params(d=1, beta=0.5, n=2), cfg, stream(5, CHAIN))
        moves = 40_000
        counts: dict = {}
        visits: dict = {}
        state = tuple(np.diff(chain.positions[:, 0]).tolist())
        for _ in range(moves):
            chain.move()
            new = tuple(np.diff(chain.positions[:, 0]).tolist())
            counts[(state, new)] = counts.get((state, new), 0) + 1
            visits[new] = visits.get(new, 0) + 1
            state = new

        straight, folded = (1, 1), (1, -1)
        ab, ba = counts.get((straight, folded), 0), counts.get((folded, straight), 0)
        assert ab / moves == pytest.approx(1 / 12, abs=0.01)
        assert abs(ab - ba) <= 4.0 * np.sqrt(ab + ba)
        folded_share = (visits.get((1, -1), 0) + visits.get((-1, 1), 0)) / moves
        assert folded_share == pytest.approx(1 / 3, abs=0.03)


class TestSamplePaths:
    """Test cases for decorrelated path samples."""

    def test_shape(self):
        """Test the (count, n + 1, d) layout split over chains."""
        out = sample_positions(params(d=2, beta=0.2, n=7), config(chains=2), 5)
        assert out.shape == (5, 8, 2)
        assert np.all(out[:, 0] == 0)

    def test_empty_and_negative(self):
        """Test count = 0 and count < 0."""
        assert sample_positions(params(n=3), config(), 0).shape == (0, 4, 2)
        with pytest.raises(PreconditionError):
            sample_positions(params(n=3), config(), -1)

    def test_worker_independent(self):
        """Test that snapshots do not depend on the worker count."""
        p = params(d=2, beta=0.2, n=7)
        cfg = config(sweeps=60, thermalization=10, seed=23, chains=3)
        serial = sample_positions(p, cfg, 7)
        parallel = sample_positions(p, cfg, 7, workers=2)
        assert np.array_equal(serial, parallel)

    def test_torus_paths(self):
        """Test that torus samples come back as torus walks."""
        walks = sample_paths(params(d=2, beta=0.2, r=3, n=6), config(), 3)
        assert len(walks) == 3
        assert all(w.r == 3 and w.n == 6 for w in walks)
        assert all(np.all((w.positions >= -1) & (w.positions <= 1)) for w in walks)

    def test_torus_samples_wrap(self):
        """Test that walks much longer than the side wind around the torus."""
        walks = sample_paths(params(d=2, beta=0.1, r=4, n=60), config(), 4)
        assert all(np.all((w.positions >= -2) & (w.positions <= 1)) for w in walks)
        reach = max(np.abs(lift_walk(w).positions).max() for w in walks)
        assert reach > 2


class TestObservables:
    """Test cases for observable parsing."""

    def test_increments(self):
        """Test increment observables on a straight walk."""
        pos = Walk.straight(5, 2).positions
        assert parse_observable("inc:1:4:0", 5, 2).evaluate(pos, 0) == 3.0
        assert parse_observable("inc:1:4:1", 5, 2).evaluate(pos, 0) == 0.0
        assert parse_observable("incsq:0:5", 5, 2).evaluate(pos, 0) == 25.0

    def test_torus_end_to_end_uses_representative(self):
        """Test that the torus norm folds the endpoint first."""
        pos = Walk.straight(4, 1).positions
        assert parse_observable("end_to_end_sq", 4, 1).evaluate(pos, 0) == 16.0
        assert parse_observable("end_to_end_sq", 4, 1, r=3).evaluate(pos, 0) == 1.0

    @pytest.mark.parametrize("name", ["radius", "inc:0:9:0", "inc:0:2:5", "inc:a:2:0", "incsq:1"])
    def test_invalid_names(self, name):
        """Test that unknown or out-of-range observables are rejected."""
        with pytest.raises(PreconditionError):
            parse_observable(name, 5, 2)

    def test_empty_list(self):
        """Test that at least one observable is required."""
        with pytest.raises(PreconditionError):
            parse_observables([], 5, 2)

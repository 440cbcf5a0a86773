import math

import numpy as np
import pytest

from rapidpp import (
    CoxBase,
    PeriodicIntensity,
    PoissonBase,
    RenewalGammaBase,
    chi_square_gof,
    chi_square_two_sample,
    occupation_integral,
    poisson_pmf,
    sample_cox_counts,
    sample_periodic_counts,
    sample_thinned_counts,
    simulate_base,
    simulate_constant_poisson,
    simulate_cox,
    simulate_periodic,
    thin_and_speed,
)
from rapidpp.arrivals import periodic_mean_count

from conftest import make_two_state

HALF_ON = PeriodicIntensity([0.0, 0.5], [2.0, 0.0])


class TestConstantPoisson:
    def test_mean_count(self, rng):
        reps = 100_000
        counts = np.array(
            [simulate_constant_poisson(1.0, 1.0, rng).count for _ in range(reps)]
        )
        assert abs(counts.mean() - 1.0) < 3.0 / math.sqrt(reps)

    def test_empty_probability(self, rng):
        reps = 30_000
        zeros = sum(simulate_constant_poisson(1.0, 1.0, rng).count == 0 for _ in range(reps))
        p = math.exp(-1)
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(zeros / reps - p) < 3 * se

    def test_times_are_uniform_given_count(self, rng):
        stream = simulate_constant_poisson(5.0, 10.0, rng)
        assert np.all(np.diff(stream.times) > 0)
        assert 0 < stream.times[0] and stream.times[-1] <= 10.0
        big = simulate_constant_poisson(2000.0, 1.0, rng)
        assert abs(big.times.mean() - 0.5) < 3 * np.sqrt(1 / 12 / big.count)

    def test_rejects_nonpositive_inputs(self, rng):
        with pytest.raises(ValueError):
            simulate_constant_poisson(0.0, 1.0, rng)


class TestSimulateCox:
    def test_constant_rates_reduce_to_poisson(self, rng):
        model = make_two_state(rates=(1.5, 1.5))
        counts = sample_cox_counts(model, 0.3, 1.0, 200_000, rng)
        res = chi_square_gof(np.bincount(counts), poisson_pmf(1.5))
        assert res.p_value > 0.01

    def test_stream_and_kernel_share_one_law(self, two_state_model):
        rng = np.random.default_rng(6)
        ref = np.bincount(
            [simulate_cox(two_state_model, 0.2, 1.0, rng)[0].count for _ in range(20_000)]
        )
        kern = np.bincount(sample_cox_counts(two_state_model, 0.2, 1.0, 200_000, rng))
        res = chi_square_two_sample(ref, kern)
        assert res.p_value > 0.01

    def test_compensator_mean_identity(self, two_state_model, rng):
        counts, means = sample_cox_counts(
            two_state_model, 0.25, 1.0, 100_000, rng, return_means=True
        )
        diff = counts - means
        se = diff.std(ddof=1) / math.sqrt(diff.size)
        assert abs(diff.mean()) < 3 * se

    def test_compensator_identity_on_reference_paths(self, two_state_model, rng):
        diffs = []
        for _ in range(4000):
            stream, path = simulate_cox(two_state_model, 0.25, 1.0, rng)
            comp = 0.25 * occupation_integral(path, two_state_model.rates)
            diffs.append(stream.count - comp)
        diffs = np.array(diffs)
        assert abs(diffs.mean()) < 3 * diffs.std(ddof=1) / math.sqrt(diffs.size)

    def test_marginal_approaches_poisson_as_eps_shrinks(self, two_state_model):
        # total variation against the constant-rate pmf decreases along the grid
        ref = poisson_pmf(1.0, 12)
        tvs = []
        for i, eps in enumerate((0.5, 0.2, 0.1, 0.05)):
            counts = sample_cox_counts(
                two_state_model, eps, 1.0, 200_000, np.random.default_rng(100 + i)
            )
            binned = np.bincount(counts, minlength=13)[:13]
            tvs.append(0.5 * np.abs(binned / counts.size - ref.probs).sum())
        assert all(a > b for a, b in zip(tvs, tvs[1:]))

    def test_path_is_returned_for_diagnostics(self, two_state_model, rng):
        stream, path = simulate_cox(two_state_model, 0.5, 2.0, rng)
        assert path.horizon == pytest.approx(4.0)
        assert stream.horizon == 2.0


class TestSimulatePeriodic:
    def test_single_piece_reduces_to_constant(self, rng):
        flat = PeriodicIntensity([0.0], [2.0])
        counts = np.array([simulate_periodic(flat, 0.5, 1.0, rng).count for _ in range(20_000)])
        res = chi_square_gof(np.bincount(counts), poisson_pmf(2.0))
        assert res.p_value > 0.01

    def test_whole_period_mean(self, rng):
        reps = 50_000
        counts = sample_periodic_counts(HALF_ON, 0.25, 3.0, reps, rng)
        assert periodic_mean_count(HALF_ON, 0.25, 3.0) == pytest.approx(3.0)
        assert abs(counts.mean() - 3.0) < 3 * math.sqrt(3.0 / reps)

    def test_no_arrivals_in_dead_zones(self, rng):
        for _ in range(50):
            stream = simulate_periodic(HALF_ON, 0.25, 3.0, rng)
            phases = (stream.times / 0.25) % 1.0
            assert np.all(phases < 0.5)

    def test_stream_and_kernel_share_one_law(self, rng):
        ref = np.bincount(
            [simulate_periodic(HALF_ON, 0.4, 1.3, rng).count for _ in range(20_000)]
        )
        kern = np.bincount(sample_periodic_counts(HALF_ON, 0.4, 1.3, 200_000, rng))
        assert chi_square_two_sample(ref, kern).p_value > 0.01

    def test_fractional_period_mean(self, rng):
        # t/eps = 3.25 periods: mean = eps * (3 * 1 + cumulative(0.25)) = 0.4 * 3.5
        mean = periodic_mean_count(HALF_ON, 0.4, 1.3)
        assert mean == pytest.approx(0.4 * (3.0 + 0.5), abs=1e-12)


class TestThinAndSpeed:
    def test_eps_one_is_identity_for_every_base(self, two_state_model):
        bases = [
            PoissonBase(2.0),
            RenewalGammaBase(2.0, 2.0),
            CoxBase(two_state_model),
        ]
        for base in bases:
            thinned = thin_and_speed(base, 1.0, 4.0, np.random.default_rng(77))
            direct = simulate_base(base, 4.0, np.random.default_rng(77))
            np.testing.assert_array_equal(thinned.times, direct.times)

    def test_poisson_base_closure(self, rng):
        # speeding up to rate lam/eps and thinning by eps restores rate lam
        counts = sample_thinned_counts(PoissonBase(1.3), 0.2, 1.0, 200_000, rng)
        assert chi_square_gof(np.bincount(counts), poisson_pmf(1.3)).p_value > 0.01

    def test_stream_level_poisson_closure(self, rng):
        counts = np.bincount(
            [thin_and_speed(PoissonBase(1.0), 0.25, 1.0, rng).count for _ in range(20_000)]
        )
        assert chi_square_gof(counts, poisson_pmf(1.0)).p_value > 0.01

    def test_cox_base_matches_direct_simulation(self, two_state_model, rng):
        thin = np.bincount(
            sample_thinned_counts(CoxBase(two_state_model), 0.2, 1.0, 150_000, rng)
        )
        direct = np.bincount(sample_cox_counts(two_state_model, 0.2, 1.0, 150_000, rng))
        assert chi_square_two_sample(thin, direct).p_value > 0.01

    def test_thinned_mean_identity_with_base_count(self, two_state_model, rng):
        thinned, base = sample_thinned_counts(
            CoxBase(two_state_model), 0.25, 1.0, 100_000, rng, return_base_counts=True
        )
        diff = thinned - 0.25 * base
        se = diff.std(ddof=1) / math.sqrt(diff.size)
        assert abs(diff.mean()) < 3 * se

    def test_renewal_base_approaches_poisson(self):
        # gamma(2, 2) interarrivals: long-run rate 1; thinned counts drift
        # toward Poisson(t) as eps shrinks
        base = RenewalGammaBase(2.0, 2.0)
        assert base.long_run_rate == 1.0
        ref = poisson_pmf(1.0, 10)
        tvs = []
        for i, eps in enumerate((0.5, 0.1, 0.02)):
            counts = sample_thinned_counts(base, eps, 1.0, 300_000, np.random.default_rng(i))
            binned = np.bincount(counts, minlength=11)[:11]
            tvs.append(0.5 * np.abs(binned / counts.size - ref.probs).sum())
        assert all(a > b for a, b in zip(tvs, tvs[1:]))

    def test_renewal_stream_matches_count_kernel(self, rng):
        base = RenewalGammaBase(2.0, 2.0)
        ref = np.bincount(
            [thin_and_speed(base, 0.25, 1.0, rng).count for _ in range(15_000)]
        )
        kern = np.bincount(sample_thinned_counts(base, 0.25, 1.0, 150_000, rng))
        assert chi_square_two_sample(ref, kern).p_value > 0.01


class TestStreamInvariants:
    def test_all_streams_strictly_increasing(self, two_state_model, rng):
        streams = [
            simulate_constant_poisson(3.0, 5.0, rng),
            simulate_cox(two_state_model, 0.3, 5.0, rng)[0],
            simulate_periodic(HALF_ON, 0.3, 5.0, rng),
            thin_and_speed(RenewalGammaBase(2.0, 4.0), 0.5, 5.0, rng),
        ]
        for stream in streams:
            if stream.count:
                assert np.all(np.diff(stream.times) > 0)
                assert stream.times[0] > 0 and stream.times[-1] <= stream.horizon

    def test_stream_constructor_rejects_ties(self):
        from rapidpp import ArrivalStream

        with pytest.raises(ValueError):
            ArrivalStream(1.0, np.array([0.25, 0.25, 0.5]))

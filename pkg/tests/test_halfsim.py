"""Half-model trapezoid walk: the sampler against the exact series law,
closed-form special cases, and exact scaling symmetries.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rectgilbert import backend, halfsim, recurrence
from rectgilbert.halfsim import TrapezoidState, monte_carlo_report, sample_ray_length, step
from rectgilbert.rng import Xoshiro256PP

F = Fraction

EL_EXACT = 2.0920992401062026
EL2_EXACT = 6.3768792304543656


class TestStep:
    def test_reference_matches_kernel(self):
        lens, steps = backend.run_half_samples(9, 64, 0.5, 1.0)
        for i in range(64):
            ref = sample_ray_length(0.5, 1.0, Xoshiro256PP.from_stream(9, i))
            assert lens[i] == ref

    def test_step_outcomes(self):
        rng = Xoshiro256PP.from_stream(1, 0)
        state = TrapezoidState()
        h_seen = v_seen = 0
        for _ in range(200):
            out, kind = step(state, 0.5, 1.0, rng)
            if kind == "V":
                v_seen += 1
                assert isinstance(out, float) and out >= state.x_total
                state = TrapezoidState()
            else:
                h_seen += 1
                assert isinstance(out, TrapezoidState)
                assert out.x_total > state.x_total
                assert out.y >= 0.0
                state = out
        assert h_seen > 0 and v_seen > 0

    def test_validation(self):
        rng = Xoshiro256PP.from_stream(1, 0)
        with pytest.raises(ValueError):
            sample_ray_length(1.0, 1.0, rng)  # q=1 never terminates
        with pytest.raises(ValueError):
            sample_ray_length(-0.1, 1.0, rng)
        with pytest.raises(ValueError):
            sample_ray_length(0.5, 0.0, rng)
        with pytest.raises(ValueError):
            TrapezoidState(y=-1.0)
        with pytest.raises(ValueError):
            monte_carlo_report(F(1, 2), 1.0, 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 3.0, allow_nan=False))
    def test_step_geometry(self, stream, y0):
        # One horizontal continuation never moves the frontier backwards
        # and lands inside the trapezoid cross-section it drew.
        rng = Xoshiro256PP.from_stream(77, stream)
        state = TrapezoidState(y=y0, x_total=1.0)
        out, kind = step(state, 0.9, 1.0, rng)
        if kind == "H":
            r = out.x_total - state.x_total
            assert r >= 0.0
            assert 0.0 <= out.y <= r + y0
        else:
            assert out >= 1.0


class TestAgainstClosedForms:
    def test_rayleigh_at_q_zero(self):
        # With no horizontal seeds the first vertical hit ends the ray:
        # P(L > t) = exp(-lam t^2 / 2) exactly.
        lens, steps = backend.run_half_samples(31, 100_000, 0.0, 1.0)
        assert np.all(steps == 1)
        res = stats.kstest(lens, lambda t: 1.0 - np.exp(-0.5 * t * t))
        assert res.pvalue > 0.01

    def test_geometric_step_counts(self):
        _, steps = backend.run_half_samples(32, 100_000, 0.5, 1.0)
        n = len(steps)
        kmax = 12
        observed = np.bincount(np.minimum(steps, kmax), minlength=kmax + 1)[1:]
        probs = np.array([0.5 ** k for k in range(1, kmax)] + [0.5 ** (kmax - 1)])
        res = stats.chisquare(observed, probs * n)
        assert res.pvalue > 0.01

    @pytest.mark.parametrize("q", [F(1, 4), F(1, 2)])
    def test_survival_matches_series(self, q):
        grid = np.array([0.25, 0.5, 1.0, 1.5, 2.0, 3.0])
        rep = monte_carlo_report(q, 1.0, 200_000, master_seed=13,
                                 survival_grid=grid)
        h = recurrence.compute_h(q, 80)
        cfg = recurrence.SeriesEvalConfig(lam=1.0, n_terms=81)
        for i, ell in enumerate(grid):
            res = recurrence.cdf(h, cfg, float(ell))
            assert res.converged
            exact = 1.0 - res.value
            se = max(rep.survival_se[i], 1e-12)
            assert abs(rep.survival[i] - exact) < 4 * se

    def test_moments_match_exact(self):
        rep = monte_carlo_report(F(1, 2), 1.0, 1_000_000, master_seed=2,
                                 threads=4)
        assert abs(rep.mean - EL_EXACT) < 4 * rep.mean_se
        assert abs(rep.second_moment - EL2_EXACT) < 4 * rep.second_moment_se
        assert rep.mean_steps == pytest.approx(2.0, abs=4 * rep.mean_steps_se)

    def test_general_q_mean_against_solver(self):
        from rectgilbert.moments import general_q_mean

        rep = monte_carlo_report(F(3, 4), 1.0, 400_000, master_seed=21)
        solver = general_q_mean(0.75, 1.0, record_convergence=False)
        assert abs(rep.mean - solver.mean) < 4 * rep.mean_se


class TestScaling:
    def test_lengths_halve_exactly_when_lam_quadruples(self):
        r1 = monte_carlo_report(F(1, 2), 1.0, 5_000, master_seed=6,
                                return_samples=True)
        r4 = monte_carlo_report(F(1, 2), 4.0, 5_000, master_seed=6,
                                return_samples=True)
        assert np.array_equal(r4.lengths, r1.lengths / 2.0)
        assert np.array_equal(r4.steps, r1.steps)
        assert r4.mean == r1.mean / 2.0

    def test_report_fields(self):
        rep = monte_carlo_report(F(1, 2), 1.0, 1_000, master_seed=0)
        assert rep.survival is None and rep.lengths is None
        assert rep.samples == 1_000 and rep.q == F(1, 2)
        grid = np.array([0.5, 1.0])
        rep2 = monte_carlo_report(F(1, 2), 1.0, 1_000, master_seed=0,
                                  survival_grid=grid, return_samples=True)
        assert rep2.survival.shape == grid.shape
        assert len(rep2.lengths) == 1_000
        assert len(rep2.steps) == 1_000
        # Survival estimates live in [0, 1] with binomial errors.
        assert np.all((0 <= rep2.survival) & (rep2.survival <= 1))
        assert np.all(rep2.survival_se <= 0.5 / math.sqrt(1_000) + 1e-12)

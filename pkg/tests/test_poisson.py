"""Poisson path sampling and the exact trig integrator."""

import math

import numpy as np
import pytest

from poisson_bm import (
    PoissonPath,
    char_fn,
    decay_factor,
    derive_stream,
    sample_poisson_path,
    trig_integral,
)
from oracles import riemann_trig_integral


class TestSamplePoissonPath:
    def test_zero_horizon_gives_empty_path(self):
        path = sample_poisson_path(0.0, derive_stream(1, 0, 0))
        assert path.jump_times.size == 0

    def test_negative_horizon_rejected(self):
        with pytest.raises(ValueError):
            sample_poisson_path(-1.0, derive_stream(1, 0, 0))

    def test_construction_invariants(self):
        for rep in range(20):
            path = sample_poisson_path(200.0, derive_stream(7, 0, rep))
            jt = path.jump_times
            assert np.all(np.diff(jt) > 0)
            assert jt[0] > 0
            assert jt[-1] <= 200.0

    def test_determinism(self):
        a = sample_poisson_path(123.0, derive_stream(42, 1, 5))
        b = sample_poisson_path(123.0, derive_stream(42, 1, 5))
        assert np.array_equal(a.jump_times, b.jump_times)

    def test_mean_jump_count_matches_horizon(self):
        # Poisson(h) has mean h; 1000 seeds at h = 1e4 give SE = sqrt(h/1000)
        horizon = 1.0e4
        n_seeds = 1000
        counts = np.array(
            [sample_poisson_path(horizon, derive_stream(11, 0, r)).jump_times.size
             for r in range(n_seeds)]
        )
        se = math.sqrt(horizon / n_seeds)
        assert abs(counts.mean() - horizon) <= 4.0 * se

    def test_invalid_jump_times_rejected(self):
        with pytest.raises(ValueError):
            PoissonPath(1.0, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            PoissonPath(1.0, np.array([0.5, 1.5]))
        with pytest.raises(ValueError):
            PoissonPath(1.0, np.array([-0.1]))

    def test_count_recovers_jumps(self):
        path = PoissonPath(2.0, np.array([0.25, 1.0, 1.75]))
        assert path.count(0.0) == 0
        assert path.count(0.25) == 1
        assert path.count(1.0) == 2
        assert path.count(2.0) == 3


class TestTrigIntegralExamples:
    def test_no_jumps(self):
        path = PoissonPath(2.0, np.empty(0))
        assert trig_integral(path, 1.234, 0.0, 2.0, "cos") == 2.0
        assert trig_integral(path, 1.234, 0.0, 2.0, "sin") == 0.0

    def test_single_jump_angle_pi(self):
        # (-1)^N: one unit at +1 then one unit at -1
        path = PoissonPath(2.0, np.array([1.0]))
        assert trig_integral(path, "pi", 0.0, 2.0, "cos") == 0.0

    def test_two_jumps_quarter_turn(self):
        # hand sum: 0.5*cos(0) + 0.5*cos(pi/2) + 0.5*cos(pi) and the sine analogue
        path = PoissonPath(1.5, np.array([0.5, 1.0]))
        assert trig_integral(path, "1/2 pi", 0.0, 1.5, "cos") == pytest.approx(0.0, abs=1e-12)
        assert trig_integral(path, "1/2 pi", 0.0, 1.5, "sin") == pytest.approx(0.5, rel=1e-15)

    def test_bounds_validation(self):
        path = PoissonPath(1.0, np.array([0.5]))
        with pytest.raises(ValueError):
            trig_integral(path, 1.0, 0.5, 1.5, "cos")
        with pytest.raises(ValueError):
            trig_integral(path, 1.0, 0.8, 0.2, "cos")
        with pytest.raises(ValueError):
            trig_integral(path, 1.0, 0.0, 1.0, "tan")


class TestTrigIntegralProperties:
    def test_riemann_oracle_agreement(self):
        # random paths, angles and intervals against a step-1e-5 midpoint sum
        rng = np.random.default_rng(2024)
        for case in range(60):
            horizon = float(rng.uniform(4.0, 10.0))
            path = sample_poisson_path(horizon, derive_stream(3000, 0, case))
            theta = float(rng.uniform(0.05, 2.0 * math.pi - 0.05))
            a = float(rng.uniform(0.0, horizon / 3))
            b = float(rng.uniform(a + 2.0, min(a + 6.0, horizon)))
            kind = "cos" if case % 2 == 0 else "sin"
            got = trig_integral(path, theta, a, b, kind)
            want = riemann_trig_integral(path.jump_times, theta, a, b, kind)
            assert abs(got - want) <= 1e-4 * (b - a), (case, theta, a, b)

    def test_additivity(self):
        rng = np.random.default_rng(5)
        for case in range(40):
            horizon = 50.0
            path = sample_poisson_path(horizon, derive_stream(3001, 0, case))
            a, b, c = np.sort(rng.uniform(0.0, horizon, size=3))
            theta = float(rng.uniform(0.1, 6.0))
            for kind in ("cos", "sin"):
                whole = trig_integral(path, theta, float(a), float(c), kind)
                split = trig_integral(path, theta, float(a), float(b), kind) + trig_integral(
                    path, theta, float(b), float(c), kind
                )
                # prefix-difference evaluation: only the outer subtractions
                # round, at the scale of the prefix values (<= horizon)
                assert abs(whole - split) <= 8 * np.spacing(horizon)

    def test_bounded_by_interval_length(self):
        rng = np.random.default_rng(6)
        for case in range(40):
            horizon = 30.0
            path = sample_poisson_path(horizon, derive_stream(3002, 0, case))
            a, b = np.sort(rng.uniform(0.0, horizon, size=2))
            theta = float(rng.uniform(0.1, 6.0))
            for kind in ("cos", "sin"):
                val = abs(trig_integral(path, theta, float(a), float(b), kind))
                assert val <= (b - a) + 8 * np.spacing(horizon)


class TestCharFn:
    def test_at_zero_time(self):
        assert char_fn(1.7, 0.0) == 1.0 + 0.0j

    def test_angle_pi(self):
        v = char_fn("pi", 1.0)
        assert v.real == pytest.approx(math.exp(-2.0), rel=1e-15)
        assert v.imag == pytest.approx(0.0, abs=1e-15)

    def test_closed_form(self):
        theta, s = 2.0, 3.0
        v = char_fn(theta, s)
        assert v.real == pytest.approx(
            math.exp(-s * (1 - math.cos(theta))) * math.cos(s * math.sin(theta)), rel=1e-14
        )
        assert v.imag == pytest.approx(
            math.exp(-s * (1 - math.cos(theta))) * math.sin(s * math.sin(theta)), rel=1e-14
        )

    def test_modulus_below_one(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            theta = float(rng.uniform(0.05, 6.2))
            s = float(rng.uniform(0.01, 10.0))
            assert abs(char_fn(theta, s)) < 1.0
        assert abs(char_fn(1.0, 0.0)) == 1.0

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            char_fn(1.0, -0.5)

    def test_monte_carlo_consistency(self):
        # empirical mean of cos(theta*N_s) vs the closed form, small grid
        M = 20000
        for theta, s in ((2.0, 3.0), (0.7, 1.0)):
            counts = np.array(
                [sample_poisson_path(s, derive_stream(900, 0, r)).jump_times.size
                 for r in range(M)]
            )
            for kind, target in (("cos", char_fn(theta, s).real),
                                 ("sin", char_fn(theta, s).imag)):
                vals = np.cos(theta * counts) if kind == "cos" else np.sin(theta * counts)
                se = vals.std(ddof=1) / math.sqrt(M)
                assert abs(vals.mean() - target) <= 4.0 * se


class TestDecayFactor:
    def test_reference_values(self):
        assert decay_factor("pi") == 2.0
        assert decay_factor(0.0) == 0.0
        assert decay_factor("1/2 pi") == pytest.approx(1.0, rel=1e-15)

    def test_range(self):
        for theta in np.linspace(0, 2 * math.pi, 50):
            assert 0.0 <= decay_factor(float(theta)) <= 2.0

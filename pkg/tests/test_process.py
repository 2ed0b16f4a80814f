"""Process assembly: grids, samples, increments, export."""

import math

import numpy as np
import pytest

from poisson_bm import (
    EvaluationGrid,
    ThetaConfig,
    build_sample,
    derive_stream,
    increments,
    map_to_path_time,
    sample_poisson_path,
    trig_integral,
)

EPS = 0.4
T = 1.0


def _path_for(eps=EPS, T_=T, seed=101, rep=0, margin=1.0):
    horizon = map_to_path_time(T_, eps) * margin
    return sample_poisson_path(horizon, derive_stream(seed, 0, rep))


class TestEvaluationGrid:
    def test_uniform_default(self):
        grid = EvaluationGrid.uniform(1.0)
        assert len(grid) == 65
        assert grid.times[0] == 0.0
        assert grid.times[-1] == 1.0

    def test_must_start_at_zero(self):
        with pytest.raises(ValueError):
            EvaluationGrid(times=np.array([0.5, 1.0]), horizon_T=1.0)

    def test_strictly_increasing(self):
        with pytest.raises(ValueError):
            EvaluationGrid(times=np.array([0.0, 0.5, 0.5]), horizon_T=1.0)

    def test_index_of_exact_match_only(self):
        grid = EvaluationGrid.uniform(1.0, 4)
        assert grid.index_of(0.5) == 2
        with pytest.raises(ValueError):
            grid.index_of(0.3)


class TestBuildSample:
    def test_all_components_zero_at_origin(self):
        cfg = ThetaConfig(cos_block=["1/2 pi", 2.2], sin_block=[1.1])
        grid = EvaluationGrid.uniform(T, 16)
        for rep in range(5):
            sample = build_sample(_path_for(rep=rep), EPS, cfg, grid)
            assert np.all(sample.values[:, 0] == 0.0)

    def test_bitwise_consistency_with_integral(self):
        cfg = ThetaConfig(cos_block=["1/2 pi"])
        grid = EvaluationGrid.uniform(T, 16)
        path = _path_for()
        sample = build_sample(path, EPS, cfg, grid)
        for g, t in enumerate(grid.times):
            x = map_to_path_time(t, EPS)
            expected = EPS * trig_integral(path, cfg.angles[0], 0.0, x, "cos")
            assert sample.values[0, g] == expected  # bit-for-bit

    def test_pi_rescale_is_exactly_inv_sqrt2(self):
        grid = EvaluationGrid.uniform(T, 16)
        path = _path_for()
        plain = build_sample(path, EPS, ThetaConfig(cos_block=["pi"]), grid)
        scaled = build_sample(
            path, EPS, ThetaConfig(cos_block=["pi"], allow_pi_in_cos=True), grid
        )
        assert np.array_equal(scaled.values, plain.values * (1.0 / math.sqrt(2.0)))

    def test_horizon_too_short_names_requirement(self):
        cfg = ThetaConfig(cos_block=[1.0])
        grid = EvaluationGrid.uniform(T, 8)
        short = sample_poisson_path(5.0, derive_stream(1, 0, 0))
        with pytest.raises(ValueError, match="2T/eps"):
            build_sample(short, EPS, cfg, grid)

    def test_epsilon_bounds(self):
        cfg = ThetaConfig(cos_block=[1.0])
        grid = EvaluationGrid.uniform(T, 8)
        path = _path_for()
        with pytest.raises(ValueError):
            build_sample(path, 0.0, cfg, grid)
        with pytest.raises(ValueError):
            build_sample(path, 1.5, cfg, grid)

    def test_horizon_cap_enforced(self):
        cfg = ThetaConfig(cos_block=[1.0])
        grid = EvaluationGrid.uniform(1000.0, 4)
        path = sample_poisson_path(1.0, derive_stream(1, 0, 0))
        with pytest.raises(ValueError, match="cap"):
            build_sample(path, 1e-4, cfg, grid)

    def test_determinism(self):
        cfg = ThetaConfig(cos_block=[2.2], sin_block=[1.1])
        grid = EvaluationGrid.uniform(T, 16)
        a = build_sample(_path_for(seed=55), EPS, cfg, grid)
        b = build_sample(_path_for(seed=55), EPS, cfg, grid)
        assert np.array_equal(a.values, b.values)

    def test_lipschitz_between_grid_points(self):
        # |x(t2) - x(t1)| <= 2 (t2 - t1) / eps: integrand bounded by one
        cfg = ThetaConfig(cos_block=[2.2, "1/2 pi"], sin_block=[1.1])
        grid = EvaluationGrid.uniform(T, 64)
        for rep in range(5):
            sample = build_sample(_path_for(rep=rep), EPS, cfg, grid)
            steps = np.abs(np.diff(sample.values, axis=1))
            bounds = 2.0 * np.diff(grid.times) / EPS
            slack = 8 * EPS * np.spacing(map_to_path_time(T, EPS))
            assert np.all(steps <= bounds + slack)

    def test_sum_2pi_degeneracy_identities_exact(self):
        # theta' = 2*pi - theta: cos components identical, sin components negated
        grid = EvaluationGrid.uniform(T, 32)
        path = _path_for(seed=77)
        cfg = ThetaConfig(
            cos_block=["2/5 pi", "8/5 pi"], sin_block=["2/5 pi", "8/5 pi"]
        )
        sample = build_sample(path, EPS, cfg, grid)
        assert np.array_equal(sample.values[0], sample.values[1])
        assert np.array_equal(sample.values[2], -sample.values[3])

    def test_sum_2pi_degeneracy_decimal_inputs_close(self):
        # decimal angles cannot be bit-exact; phase drift stays tiny
        grid = EvaluationGrid.uniform(T, 32)
        path = _path_for(seed=78)
        theta = 2.2
        cfg = ThetaConfig(
            cos_block=[theta, 2.0 * math.pi - theta],
            sin_block=[theta, 2.0 * math.pi - theta],
        )
        sample = build_sample(path, EPS, cfg, grid)
        assert np.allclose(sample.values[0], sample.values[1], atol=1e-10, rtol=0)
        assert np.allclose(sample.values[2], -sample.values[3], atol=1e-10, rtol=0)


class TestIncrements:
    def _sample(self):
        cfg = ThetaConfig(cos_block=["1/2 pi"], sin_block=[1.1])
        grid = EvaluationGrid.uniform(T, 8)
        return build_sample(_path_for(seed=91), EPS, cfg, grid)

    def test_from_origin_equals_value(self):
        sample = self._sample()
        table = increments(sample, [(0.0, 0.5)])
        assert np.array_equal(table.deltas[:, 0], sample.at_time(0.5))

    def test_telescoping(self):
        sample = self._sample()
        table = increments(sample, [(0.0, 0.5), (0.5, 1.0), (0.0, 1.0)])
        lhs = table.deltas[:, 0] + table.deltas[:, 1]
        assert np.allclose(lhs, table.deltas[:, 2], rtol=0, atol=1e-12)

    def test_off_grid_pair_rejected(self):
        with pytest.raises(ValueError):
            increments(self._sample(), [(0.0, 0.3)])

    def test_unordered_pair_rejected(self):
        with pytest.raises(ValueError):
            increments(self._sample(), [(0.5, 0.5)])

    def test_stroock_increment_bound(self):
        # |delta| <= eps * (2t/eps^2 - 2s/eps^2) for the angle-pi component
        grid = EvaluationGrid.uniform(T, 8)
        sample = build_sample(
            _path_for(seed=92), EPS, ThetaConfig(cos_block=["pi"]), grid
        )
        table = increments(sample, [(0.25, 0.75)])
        bound = EPS * (map_to_path_time(0.75, EPS) - map_to_path_time(0.25, EPS))
        assert abs(table.deltas[0, 0]) <= bound * (1 + 1e-12)


class TestCsvExport:
    def test_header_and_shape(self):
        cfg = ThetaConfig(cos_block=[2.2], sin_block=[1.1])
        grid = EvaluationGrid.uniform(T, 4)
        sample = build_sample(_path_for(seed=93), EPS, cfg, grid)
        lines = sample.to_csv().splitlines()
        assert lines[0] == "t,comp_1,comp_2"
        assert len(lines) == 1 + 5
        # 17 significant digits round-trip
        row = lines[2].split(",")
        assert float(row[1]) == sample.values[0, 1]

    def test_lf_line_endings(self):
        cfg = ThetaConfig(cos_block=[2.2])
        grid = EvaluationGrid.uniform(T, 2)
        text = build_sample(_path_for(seed=94), EPS, cfg, grid).to_csv()
        assert "\r" not in text
        assert text.endswith("\n")

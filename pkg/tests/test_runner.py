"""Experiment orchestration: determinism, counterexample mode, reports."""

import json

import pytest

from poisson_bm import (
    InvalidThetaError,
    RunConfig,
    RunReport,
    ThetaConfig,
    emit_plot_data,
    run_experiment,
)
from poisson_bm.report import (
    ASSERTIONS_FILENAME,
    PLOT_COV_HEATMAP,
    PLOT_MARGINAL_HIST,
    PLOT_RATE_LOGLOG,
    REPORT_FILENAME,
    TIMINGS_FILENAME,
)


def minimal_config(**overrides):
    kwargs = dict(
        theta=ThetaConfig(cos_block=["1/2 pi"]),
        epsilons=(0.2,),
        replications_M=100,
        master_seed=4242,
        grid_points=64,
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


class TestRunExperiment:
    def test_minimal_smoke_run_covariance_passes(self):
        report = run_experiment(minimal_config())
        cov = next(
            c for c in report.results[0]["checks"] if c["name"] == "covariance"
        )
        assert cov["pass"]

    def test_every_requested_check_appears_once_per_epsilon(self):
        cfg = minimal_config(
            theta=ThetaConfig(cos_block=["1/2 pi"], sin_block=[2.2]),
            epsilons=(0.3, 0.2),
            replications_M=120,
            grid_points=4,
        )
        report = run_experiment(cfg)
        assert len(report.results) == 2
        for block in report.results:
            names = [c["name"] for c in block["checks"]]
            assert names == list(cfg.resolved_checks)
            for check in block["checks"]:
                assert isinstance(check["pass"], bool)
                assert check["assertions"], check["name"]

    def test_invalid_theta_refused_with_report(self):
        cfg = minimal_config(theta=ThetaConfig(cos_block=["1/2 pi", "3/2 pi"]))
        with pytest.raises(InvalidThetaError) as exc_info:
            run_experiment(cfg)
        hyp = exc_info.value.hypothesis
        assert hyp["valid"] is False
        assert hyp["violations"][0]["rule"] == "SUM_2PI"

    def test_counterexample_mode_flags_degenerate_pair(self):
        cfg = minimal_config(
            theta=ThetaConfig(cos_block=["1/2 pi", "3/2 pi"]),
            allow_invalid_theta=True,
            replications_M=120,
            grid_points=8,
            checks=("covariance",),
        )
        report = run_experiment(cfg)
        cov = report.results[0]["checks"][0]
        flagged = cov["data"]["degenerate_pairs"]
        assert flagged == [{"i": 1, "j": 2, "correlation": pytest.approx(1.0, abs=1e-12)}]
        # the off-diagonal band check honestly fails for a degenerate pair
        assert not cov["pass"]
        assert not report.all_pass

    def test_stroock_check_included_and_passing(self):
        cfg = minimal_config(
            theta=ThetaConfig(cos_block=["pi"], allow_pi_in_cos=True),
            epsilons=(0.1,),
            replications_M=1500,
            grid_points=8,
            checks=("stroock",),
        )
        report = run_experiment(cfg)
        stroock = report.results[0]["checks"][0]
        assert stroock["data"]["rescaled"] is True
        assert stroock["assertions"][0]["target"] == 1.0
        assert stroock["pass"]

    def test_rate_summary_shape(self):
        cfg = minimal_config(
            theta=ThetaConfig(cos_block=["1/2 pi"], sin_block=[2.2]),
            epsilons=(0.4, 0.28, 0.2),
            replications_M=200,
            grid_points=4,
            checks=("cross_moments",),
        )
        report = run_experiment(cfg)
        fits = report.summary["rate_fits"]
        assert len(fits) == 1
        fit = fits[0]
        assert fit["kind"] == "cossin"
        assert len(fit["points"]) == 3
        for point in fit["points"]:
            assert point["bound_total"] > 0

    def test_workers_do_not_change_report_bytes(self):
        cfg1 = minimal_config(replications_M=120, grid_points=4)
        cfg4 = minimal_config(replications_M=120, grid_points=4, workers=4)
        r1 = run_experiment(cfg1)
        r4 = run_experiment(cfg4)
        assert r1.to_json_text() == r4.to_json_text()

    def test_repeat_runs_identical(self):
        cfg = minimal_config(replications_M=120, grid_points=4)
        assert run_experiment(cfg).to_json_text() == run_experiment(cfg).to_json_text()


class TestReportFiles:
    def test_write_and_reload(self, tmp_path):
        cfg = minimal_config(replications_M=120, grid_points=4, output_dir=tmp_path)
        report = run_experiment(cfg)
        path = report.write(cfg.output_dir)
        assert path.name == REPORT_FILENAME
        assert (tmp_path / ASSERTIONS_FILENAME).exists()
        assert (tmp_path / TIMINGS_FILENAME).exists()

        doc = json.loads(path.read_text())
        assert "timings" not in doc  # wall-clock stays out of the canonical report
        assert "workers" not in doc["config"]

        loaded = RunReport.from_json_file(path)
        assert loaded.to_json_text() == report.to_json_text()

    def test_assertions_csv_layout(self, tmp_path):
        cfg = minimal_config(replications_M=120, grid_points=4, output_dir=tmp_path)
        report = run_experiment(cfg)
        report.write(cfg.output_dir)
        lines = (tmp_path / ASSERTIONS_FILENAME).read_text().splitlines()
        assert lines[0] == "epsilon,check,assertion,value,std_error,target,band,pass"
        assert len(lines) > 5


@pytest.fixture(scope="module")
def plot_report():
    cfg = RunConfig(
        theta=ThetaConfig(cos_block=["1/2 pi"], sin_block=[2.2]),
        epsilons=(0.4, 0.28, 0.2),
        replications_M=200,
        master_seed=7,
        grid_points=4,
    )
    return run_experiment(cfg)


class TestPlotData:

    def test_rate_loglog_rows(self, plot_report):
        csv_text = emit_plot_data(plot_report, PLOT_RATE_LOGLOG)
        lines = csv_text.splitlines()
        assert lines[0] == "log_epsilon,log_abs_estimate,log_bound_total"
        assert len(lines) == 1 + 3
        assert all(len(line.split(",")) == 3 for line in lines[1:])

    def test_cov_heatmap_rows(self, plot_report):
        csv_text = emit_plot_data(plot_report, PLOT_COV_HEATMAP)
        lines = csv_text.splitlines()
        assert lines[0] == "i,j,value,std_error"
        assert len(lines) == 1 + 4  # d = 2

    def test_marginal_hist_conservation(self, plot_report):
        csv_text = emit_plot_data(plot_report, PLOT_MARGINAL_HIST, component=1)
        lines = csv_text.splitlines()
        assert lines[0] == "bin_left,bin_right,count"
        assert len(lines) == 1 + 50
        total = sum(int(line.split(",")[2]) for line in lines[1:])
        assert total == 200  # counts sum to the replication count

    def test_missing_check_errors(self, plot_report):
        with pytest.raises(ValueError):
            emit_plot_data(plot_report, PLOT_COV_HEATMAP, epsilon=0.123)
        with pytest.raises(ValueError):
            emit_plot_data(plot_report, "SPIROGRAPH")

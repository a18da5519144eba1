from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from collapse_lab.config import ExperimentConfig, SweepSpec
from collapse_lab.errors import ConfigError
from collapse_lab.experiment.runner import (
    CLASSIFIER_FILE,
    FEATURES_FILE,
    REPORT_FILE,
    SUMMARY_COLUMNS,
    SUMMARY_FILE,
    TRAJECTORY_FILE,
    export_state,
    ingest_features,
    load_run_report,
    run_experiment,
    run_sweep,
    sweep_configs,
)
from collapse_lab.geometry.bias import BiasProblem, separation_holds
from collapse_lab.geometry.etf import analytic_minimizer
from collapse_lab.io.artifacts import TRAJECTORY_COLUMNS
from collapse_lab.metrics.report import evaluate_state
from collapse_lab.metrics.scores import bias_separates
from collapse_lab.model.core import HyperParams, InitConfig, class_major_labels, scores
from collapse_lab.model.losses import LossKind
from collapse_lab.training.optimizer import TrainConfig


def short_config(output_dir, **kwargs) -> ExperimentConfig:
    base = ExperimentConfig(
        hp=HyperParams(K=3, d=4, n=4),
        init=InitConfig(seed=5),
        loss=LossKind.BCE,
        train=TrainConfig(lr0=0.5, steps=200, grad_tol=0.0, record_every=50),
        metrics_every=100,
        output_dir=output_dir,
    )
    return replace(base, **kwargs)


class TestRunExperiment:
    def test_writes_artifacts(self, tmp_path):
        cfg = short_config(tmp_path / "run")
        report = run_experiment(cfg)
        assert report.status == "completed"
        assert report.steps == 200
        assert report.seed == 5

        trajectory = pd.read_csv(tmp_path / "run" / TRAJECTORY_FILE)
        assert list(trajectory.columns) == TRAJECTORY_COLUMNS
        assert list(trajectory["step"]) == [0, 50, 100, 150, 200]
        assert trajectory["nc1"].notna().tolist() == [True, False, True, False, True]

        loaded = load_run_report(tmp_path / "run")
        assert loaded.final_metrics == report.final_metrics
        assert loaded.config["hp"]["K"] == 3
        assert loaded.config["loss"] == "bce"

    def test_identical_runs_give_identical_csv(self, tmp_path):
        run_experiment(short_config(tmp_path / "a"))
        run_experiment(short_config(tmp_path / "b"))
        first = (tmp_path / "a" / TRAJECTORY_FILE).read_bytes()
        assert first == (tmp_path / "b" / TRAJECTORY_FILE).read_bytes()

    def test_unwritable_output_fails_before_training(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(ConfigError):
            run_experiment(short_config(blocker / "run"))

    def test_no_write_mode(self, tmp_path):
        report = run_experiment(short_config(tmp_path / "quiet"), write=False)
        assert not (tmp_path / "quiet").exists()
        assert report.final_state is not None
        assert report.final_state.matches(HyperParams(K=3, d=4, n=4))

    def test_sweep_config_rejected(self, tmp_path):
        cfg = short_config(tmp_path, sweep=SweepSpec("lambda_b", (0.0, 0.1)))
        with pytest.raises(ConfigError):
            run_experiment(cfg)


class TestSweeps:
    def test_subdirectories_follow_value_order(self, tmp_path):
        cfg = short_config(tmp_path, sweep=SweepSpec("bias_mean_offset", (-1.0, 0.0, 1.0)))
        configs = sweep_configs(cfg)
        assert [c.output_dir.name for c in configs] == [
            "bias_mean_offset_00", "bias_mean_offset_01", "bias_mean_offset_02"]
        assert [c.init.bias_mean_offset for c in configs] == [-1.0, 0.0, 1.0]
        assert all(c.sweep is None for c in configs)

    def test_parallel_sweep_matches_serial(self, tmp_path):
        spec = SweepSpec("lambda_b", (0.0, 5e-4, 0.5))
        serial = run_sweep(short_config(tmp_path / "serial", sweep=spec), workers=1)
        parallel = run_sweep(short_config(tmp_path / "parallel", sweep=spec), workers=3)
        assert [r.final_objective for r in serial] == [r.final_objective for r in parallel]
        assert (tmp_path / "serial" / SUMMARY_FILE).read_bytes() == \
               (tmp_path / "parallel" / SUMMARY_FILE).read_bytes()
        assert (tmp_path / "parallel" / "lambda_b_02" / REPORT_FILE).exists()

    def test_summary_rows(self, tmp_path):
        spec = SweepSpec("batch_size", (None, 6))
        run_sweep(short_config(tmp_path, sweep=spec))
        summary = pd.read_csv(tmp_path / SUMMARY_FILE, keep_default_na=False)
        assert list(summary.columns) == SUMMARY_COLUMNS
        assert list(summary["index"]) == [0, 1]
        assert list(summary["value"].astype(str)) == ["full", "6"]

    def test_sweep_needs_a_sweep(self, tmp_path):
        with pytest.raises(ConfigError):
            run_sweep(short_config(tmp_path))

    def test_batch_sweep_runs_with_scaled_rates(self, tmp_path):
        spec = SweepSpec("batch_size", (None, 6), lr_reference=12)
        configs = sweep_configs(short_config(tmp_path, sweep=spec))
        assert [c.train.lr0 for c in configs] == pytest.approx([0.5, 0.25])
        assert [c.train.batch_size for c in configs] == [None, 6]


@pytest.mark.slow
class TestSweepOutcomes:
    def test_ce_bias_mean_decays_from_any_offset(self, tmp_path, desk_hp):
        cfg = ExperimentConfig(
            hp=desk_hp,
            loss=LossKind.CE,
            train=TrainConfig(lr0=0.5, steps=600_000, grad_tol=1e-8, record_every=10_000),
            output_dir=tmp_path,
            sweep=SweepSpec("bias_mean_offset", (0.0, 5.0, 10.0), workers=3),
        )
        for report in run_sweep(cfg):
            assert report.converged
            assert abs(report.final_metrics.bias_mean) < 0.05

    def test_bce_bias_separates_when_condition_holds(self, tmp_path, desk_hp):
        values = (0.0, 5e-4, 0.5)
        cfg = ExperimentConfig(
            hp=desk_hp,
            init=InitConfig(seed=1),
            loss=LossKind.BCE,
            train=TrainConfig(lr0=0.5, steps=1_000_000, grad_tol=1e-8, record_every=10_000),
            output_dir=tmp_path,
            sweep=SweepSpec("lambda_b", values, workers=3),
        )
        labels = class_major_labels(desk_hp.K, desk_hp.n)
        checked = 0
        for value, report in zip(values, run_sweep(cfg)):
            assert report.converged
            metrics = report.final_metrics
            prob = BiasProblem.from_hyperparams(metrics.rho, desk_hp.with_lambda_b(value))
            if separation_holds(prob):
                state = report.final_state
                assert bias_separates(scores(state.W, state.H), labels, metrics.bias_mean)
                checked += 1
        assert checked > 0


class TestFeatureAudit:
    def test_ingest_matches_in_memory_metrics(self, tmp_path, desk_hp):
        state = analytic_minimizer(desk_hp, 110.0, 0.8, orientation_seed=2)
        directory = export_state(state, tmp_path / "audit", n=desk_hp.n)
        assert (directory / FEATURES_FILE).exists()

        ingested = ingest_features(directory / FEATURES_FILE, directory / CLASSIFIER_FILE,
                                   n_for_alpha=desk_hp.n)
        expected = evaluate_state(state, desk_hp)
        for name, value in expected.as_row().items():
            assert ingested.as_row()[name] == pytest.approx(value, rel=1e-12, abs=1e-12)

    def test_trained_state_round_trip(self, tmp_path):
        cfg = short_config(tmp_path / "run")
        report = run_experiment(cfg)
        export_state(report.final_state, tmp_path / "export", n=cfg.hp.n)
        ingested = ingest_features(tmp_path / "export" / FEATURES_FILE,
                                   tmp_path / "export" / CLASSIFIER_FILE,
                                   n_for_alpha=cfg.hp.n)
        assert ingested == report.final_metrics

    def test_export_needs_labels_or_count(self, tmp_path, desk_hp):
        state = analytic_minimizer(desk_hp, 1.0, 0.0)
        with pytest.raises(ConfigError):
            export_state(state, tmp_path)

    def test_explicit_labels(self, tmp_path, desk_hp):
        state = analytic_minimizer(desk_hp, 4.0, 0.0)
        labels = np.repeat(np.arange(4), 10)
        export_state(state, tmp_path, labels=labels)
        frame = pd.read_csv(tmp_path / FEATURES_FILE)
        assert frame["label"].min() == 1
        assert frame["label"].max() == 4

    def test_hand_built_files(self, tmp_path):
        classifier = tmp_path / "classifier.csv"
        classifier.write_text("w0,w1,b\n1,0,0\n0,1,0\n", encoding="utf-8")
        features = tmp_path / "features.csv"
        features.write_text(
            "label,f0,f1\n1,3,0\n2,2,2.5\n1,1,0.2\n2,0.1,0.4\n", encoding="utf-8"
        )
        report = ingest_features(features, classifier, n_for_alpha=2)
        # every argmax is right; one threshold covers at most two samples
        assert report.accuracy == 100.0
        assert report.uniform_accuracy == 50.0
        assert report.bias_mean == 0.0

"""Synthetic benchmark generation, corruption calibration, sweeps."""

import dataclasses

import numpy as np
import pytest

from fairproxy.clustering import kmeans
from fairproxy.errors import CalibrationError, ConfigError, DomainError
from fairproxy.metrics import adjusted_rand_index, attribute_target_correlation
from fairproxy.synthlab import (
    SynthConfig,
    calibrate_ari,
    corrupt_partition,
    default_joint,
    format_sweep_table,
    gen_synthetic,
    measure_corruption_ari,
    run_ari_sweep,
    run_cluster_sweep,
    run_theta_sweep,
    write_sweep_csv,
)
from fairproxy.training import TrainConfig


class TestDefaultJoint:
    def test_two_by_two(self):
        joint = default_joint(2, 2)
        assert np.allclose(joint, [[0.45, 0.05], [0.05, 0.45]])

    def test_sums_to_one(self):
        for t, g in [(2, 2), (2, 4), (3, 3)]:
            assert default_joint(t, g).sum() == pytest.approx(1.0, abs=1e-12)

    def test_minority_cell_bounds(self):
        with pytest.raises(ConfigError):
            default_joint(2, 2, minority_cell=0.3)


class TestGenSynthetic:
    def test_reproducible_bit_exact(self):
        cfg = SynthConfig(n=500, dim=8, seed=42)
        a_ds, a_scores = gen_synthetic(cfg)
        b_ds, b_scores = gen_synthetic(cfg)
        assert np.array_equal(a_ds.embeddings.values, b_ds.embeddings.values)
        assert np.array_equal(a_scores.values, b_scores.values)
        assert [s.id for s in a_ds.manifest.samples] == [s.id for s in b_ds.manifest.samples]
        assert np.array_equal(a_ds.manifest.targets(), b_ds.manifest.targets())

    def test_split_fractions(self):
        ds, _ = gen_synthetic(SynthConfig(n=1000, dim=6, seed=0))
        man = ds.manifest
        assert len(man.split_indices("train")) == 800
        assert len(man.split_indices("val")) == 100
        assert len(man.split_indices("test")) == 100

    def test_empirical_joint_within_3_sigma(self):
        cfg = SynthConfig(n=10_000, dim=6, seed=7)
        ds, _ = gen_synthetic(cfg)
        man = ds.manifest
        targets, attrs = man.targets(), man.attributes()
        for t in range(2):
            for g in range(2):
                count = int(((targets == t) & (attrs == g)).sum())
                p = cfg.joint[t, g]
                bound = 3 * np.sqrt(cfg.n * p * (1 - p))
                assert abs(count - cfg.n * p) <= bound

    def test_noiseless_scores_recover_groups(self):
        cfg = SynthConfig(n=800, dim=6, score_noise_sigma=0.0,
                          joint=np.full((2, 2), 0.25), seed=1)
        ds, scores = gen_synthetic(cfg)
        result = kmeans(scores.values.T.astype(np.float64), 2, seed=0)
        assert adjusted_rand_index(result.assignments, ds.manifest.attributes()) == 1.0

    def test_huge_noise_gives_chance_level(self):
        cfg = SynthConfig(n=10_000, dim=6, score_noise_sigma=50.0, seed=2)
        ds, scores = gen_synthetic(cfg)
        result = kmeans(scores.values.T.astype(np.float64), 2, seed=0)
        ari = adjusted_rand_index(result.assignments, ds.manifest.attributes())
        assert abs(ari) <= 0.05

    def test_cluster_quality_non_increasing_in_noise(self):
        sigmas = [0.0, 0.25, 0.5, 1.0, 2.0]
        means = []
        for sigma in sigmas:
            values = []
            for seed in range(5):
                cfg = SynthConfig(n=2000, dim=6, score_noise_sigma=sigma, seed=seed)
                ds, scores = gen_synthetic(cfg)
                result = kmeans(scores.values.T.astype(np.float64), 2, seed=0)
                values.append(adjusted_rand_index(result.assignments, ds.manifest.attributes()))
            means.append(np.mean(values))
        assert all(means[i] >= means[i + 1] - 1e-9 for i in range(len(means) - 1))

    def test_blob_geometry(self):
        cfg = SynthConfig(n=8000, dim=8, separation=2.0, group_signal=6.0, seed=3)
        ds, _ = gen_synthetic(cfg)
        man = ds.manifest
        emb = ds.embeddings.values.astype(np.float64)
        targets, attrs = man.targets(), man.attributes()
        cell = emb[(targets == 1) & (attrs == 1)]
        center = cell.mean(axis=0)
        assert center[1] == pytest.approx(1.0, abs=0.15)     # separation / 2 on axis 1
        assert center[3] == pytest.approx(3.0, abs=0.15)     # group_signal / 2 on axis 3
        assert np.allclose(center[[0, 2]], 0.0, atol=0.15)

    def test_scores_stay_in_range(self):
        _, scores = gen_synthetic(SynthConfig(n=500, dim=6, score_noise_sigma=5.0, seed=4))
        assert scores.values.min() >= -1.0
        assert scores.values.max() <= 1.0

    def test_correlation_tracks_joint(self):
        joint = np.array([[0.3725, 0.1275], [0.1275, 0.3725]])
        ds, _ = gen_synthetic(SynthConfig(n=20_000, dim=6, joint=joint, seed=5))
        report = attribute_target_correlation(ds.manifest)
        assert report.mean_abs_r == pytest.approx(0.49, abs=0.02)

    def test_infeasible_cell_rejected(self):
        joint = np.array([[0.98, 1e-7], [1e-7, 0.0199998]])
        with pytest.raises(ConfigError, match="drew no samples"):
            gen_synthetic(SynthConfig(n=50, dim=6, joint=joint, seed=0))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SynthConfig(n=2, dim=6)                      # cannot fill 4 cells
        with pytest.raises(ConfigError):
            SynthConfig(n=100, dim=3)                    # dim < targets + groups
        with pytest.raises(ConfigError):
            SynthConfig(n=100, dim=6, joint=np.full((2, 2), 0.3))   # sums to 1.2


class TestCorruptPartition:
    def test_rate_zero_is_identity(self):
        truth = np.array([0, 1, 0, 1, 1])
        assert np.array_equal(corrupt_partition(truth, 0.0, seed=0), truth)

    def test_rate_one_hits_chance_level(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 2, size=10_000)
        out = corrupt_partition(truth, 1.0, seed=1)
        assert abs(adjusted_rand_index(truth, out)) <= 0.03

    def test_changes_at_most_floor_rn_labels(self):
        rng = np.random.default_rng(1)
        truth = rng.integers(0, 4, size=1000)
        out = corrupt_partition(truth, 0.25, seed=2)
        assert int((out != truth).sum()) <= 250

    def test_intermediate_rate_between_endpoints_and_monotone(self):
        rng = np.random.default_rng(2)
        truth = rng.integers(0, 2, size=10_000)
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        values = [measure_corruption_ari(truth, r, seed=3, draws=5) for r in grid]
        assert values[0] == 1.0
        assert all(values[i] > values[i + 1] for i in range(len(values) - 1))
        assert 0.0 < values[2] < 1.0

    def test_deterministic(self):
        truth = np.arange(50) % 3
        a = corrupt_partition(truth, 0.5, seed=9)
        b = corrupt_partition(truth, 0.5, seed=9)
        assert np.array_equal(a, b)

    def test_bad_rate_rejected(self):
        with pytest.raises(DomainError):
            corrupt_partition(np.array([0, 1]), 1.5, seed=0)


class TestCalibrateAri:
    def test_target_one_returns_zero_rate(self):
        truth = np.arange(100) % 2
        assert calibrate_ari(truth, 1.0, tol=0.02, seed=0) == 0.0

    def test_target_zero_near_full_corruption(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 2, size=10_000)
        rate = calibrate_ari(truth, 0.0, tol=0.02, seed=1)
        assert rate > 0.8
        assert abs(measure_corruption_ari(truth, rate, seed=99)) <= 0.02 + 0.01

    def test_midpoint_self_verifies(self):
        rng = np.random.default_rng(1)
        truth = rng.integers(0, 2, size=10_000)
        rate = calibrate_ari(truth, 0.5, tol=0.02, seed=2)
        measured = measure_corruption_ari(truth, rate, seed=123, draws=5)
        assert 0.45 <= measured <= 0.55     # tol plus draw noise

    def test_non_convergence_raises(self):
        rng = np.random.default_rng(2)
        truth = rng.integers(0, 2, size=500)
        with pytest.raises(CalibrationError, match="probes"):
            calibrate_ari(truth, 0.5, tol=1e-9, seed=3, max_iter=3)


def tiny_synth(seed=0):
    return SynthConfig(n=1200, dim=6, seed=seed)


def tiny_train(**kw):
    base = dict(epochs=6, theta=2, batch_size=128, jitter_sigma=0.0, seed=0)
    base.update(kw)
    return TrainConfig(**base)


class TestSweeps:
    def test_ari_sweep_structure(self):
        result = run_ari_sweep(tiny_synth(), [0.5, 1.0], [0, 1], tiny_train(),
                               calibration_tol=0.05)
        assert result.kind == "ari"
        assert [row.setting for row in result.rows] == [0.5, 1.0]
        assert all(len(row.cells) == 2 for row in result.rows)
        assert result.baseline.setting == "baseline"
        assert result.baseline.n_ok == 2
        for row in result.rows:
            for cell in row.cells:
                assert not cell.failed
                assert 0.0 <= cell.worst_group_acc <= 1.0
        ari_one = result.row(1.0)
        assert all(c.partition_ari == 1.0 for c in ari_one.cells)

    def test_ari_sweep_shares_dataset_across_levels(self):
        result = run_ari_sweep(tiny_synth(), [0.0, 1.0], [0], tiny_train(),
                               calibration_tol=0.05)
        # Same seed cell at different levels must rest on the same dataset,
        # visible through identical baseline rows (one baseline per seed).
        assert len(result.baseline.cells) == 1

    def test_cluster_sweep_rows_and_k_validation(self):
        result = run_cluster_sweep(tiny_synth(), [2, 4], [0, 1], tiny_train())
        assert [row.setting for row in result.rows] == [2, 4]
        assert result.kind == "cluster"
        with pytest.raises(ConfigError, match="divisible"):
            run_cluster_sweep(tiny_synth(), [3], [0], tiny_train())

    def test_cluster_sweep_isolates_cell_failures(self):
        # Per-class k of 2000 exceeds the per-class sample count (~480):
        # those cells fail, the K=2 row still succeeds.
        result = run_cluster_sweep(tiny_synth(), [2, 4000], [0], tiny_train())
        ok_row = result.row(2)
        bad_row = result.row(4000)
        assert ok_row.n_ok == 1
        assert bad_row.n_ok == 0
        assert all(c.failed and c.error for c in bad_row.cells)
        with pytest.raises(DomainError, match="failed"):
            bad_row.mean()

    def test_theta_sweep_annotates_best_band(self):
        result = run_theta_sweep(tiny_synth(), [1, 2], [0], tiny_train(epochs=4))
        assert result.kind == "theta"
        assert len(result.annotations) == 1
        assert "best theta band" in result.annotations[0]

    def test_theta_sweep_needs_enough_epochs(self):
        with pytest.raises(ConfigError, match="epochs"):
            run_theta_sweep(tiny_synth(), [1, 10], [0], tiny_train(epochs=4))

    def test_csv_and_table_round_trip(self, tmp_path):
        result = run_cluster_sweep(tiny_synth(), [2], [0, 1], tiny_train())
        path = tmp_path / "sweep.csv"
        write_sweep_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "setting,seed,worst_group_acc,unbiased_acc,group_std,partition_ari,error"
        # baseline: 2 cells + mean + std; K=2 row: the same.
        assert len([l for l in lines if l.startswith("baseline,")]) == 4
        assert len([l for l in lines if l.startswith("2,")]) == 4
        table = format_sweep_table(result)
        assert "baseline" in table
        assert "worst-group" in table

    def test_sweep_reproducible(self):
        a = run_cluster_sweep(tiny_synth(), [2], [0], tiny_train())
        b = run_cluster_sweep(tiny_synth(), [2], [0], tiny_train())
        assert a.row(2).cells[0].worst_group_acc == b.row(2).cells[0].worst_group_acc
        assert a.baseline.cells[0].worst_group_acc == b.baseline.cells[0].worst_group_acc

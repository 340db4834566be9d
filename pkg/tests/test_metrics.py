"""Agreement and fairness metrics.

The adjusted Rand index is verified against a definitional oracle that
walks every pair of samples and applies the pair-counting form

    ARI = 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d))

where a counts pairs placed together in both partitions, b together only
in the first, c together only in the second, and d apart in both. The
implementation under test uses the contingency-table form, so the two
routes share no code.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairproxy.data import Manifest, Sample
from fairproxy.errors import DataError, DomainError
from fairproxy.metrics import (
    adjusted_rand_index,
    attribute_target_correlation,
    fairness_summary,
    group_accuracies,
    representation_std,
)


def pair_counting_ari(labels_a, labels_b) -> float:
    labels_a, labels_b = np.asarray(labels_a), np.asarray(labels_b)
    a = b = c = d = 0
    n = len(labels_a)
    for i in range(n):
        for j in range(i + 1, n):
            same_a = labels_a[i] == labels_a[j]
            same_b = labels_b[i] == labels_b[j]
            if same_a and same_b:
                a += 1
            elif same_a:
                b += 1
            elif same_b:
                c += 1
            else:
                d += 1
    denom = (a + b) * (b + d) + (a + c) * (c + d)
    if denom == 0:
        return 0.0
    return 2.0 * (a * d - b * c) / denom


class TestAdjustedRandIndex:
    def test_hand_case(self):
        value = adjusted_rand_index([0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 2, 2])
        assert value == pytest.approx(8 / 33, abs=1e-12)
        assert value == pytest.approx(0.242424, abs=1e-6)

    def test_identical_partitions(self):
        assert adjusted_rand_index([0, 1, 2, 1], [0, 1, 2, 1]) == 1.0

    def test_relabeling_invariance(self):
        assert adjusted_rand_index([0, 0, 1, 1], [7, 7, 3, 3]) == 1.0

    def test_symmetry(self):
        a, b = [0, 0, 1, 2, 2], [1, 1, 1, 0, 2]
        assert adjusted_rand_index(a, b) == adjusted_rand_index(b, a)

    def test_degenerate_vs_singletons_is_zero(self):
        # One partition lumps everything, the other splits everything:
        # max index equals expected index, defined here as 0.
        assert adjusted_rand_index([0, 0, 0], [0, 1, 2]) == 0.0

    def test_non_contiguous_labels_accepted(self):
        assert adjusted_rand_index([10, 10, 99], [5, 5, 7]) == 1.0

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 13))
            a = rng.integers(0, rng.integers(1, 5), size=n)
            b = rng.integers(0, rng.integers(1, 5), size=n)
            assert adjusted_rand_index(a, b) == pytest.approx(
                pair_counting_ari(a, b), abs=1e-12
            )

    @given(st.integers(2, 10), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=60, deadline=None)
    def test_oracle_property(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 4, size=n)
        b = rng.integers(0, 4, size=n)
        assert adjusted_rand_index(a, b) == pytest.approx(pair_counting_ari(a, b), abs=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            adjusted_rand_index([0, 1], [0, 1, 2])

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            adjusted_rand_index([], [])

    def test_bounded_above_by_one(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.integers(0, 3, size=20)
            b = rng.integers(0, 3, size=20)
            assert adjusted_rand_index(a, b) <= 1.0 + 1e-12


def manifest_from_cells(cell_counts, split="train"):
    """cell_counts: {(target, attribute): n}."""
    samples = []
    i = 0
    for (target, attr), count in sorted(cell_counts.items()):
        for _ in range(count):
            samples.append(Sample(f"s{i}", split, target, attr))
            i += 1
    return Manifest(samples)


class TestCorrelation:
    def test_engineered_phi_is_exact(self):
        # Cell proportions chosen so the phi coefficient is exactly 0.49:
        # (0.3725^2 - 0.1275^2) / 0.25 = 0.49.
        man = manifest_from_cells({(0, 0): 3725, (0, 1): 1275, (1, 0): 1275, (1, 1): 3725})
        report = attribute_target_correlation(man)
        assert report.mean_abs_r == pytest.approx(0.49, abs=1e-12)
        for entry in report.per_class:
            assert abs(entry.r) == pytest.approx(0.49, abs=1e-12)
            assert 0.0 <= entry.p_value <= 1.0

    def test_independent_cells_give_zero(self):
        man = manifest_from_cells({(0, 0): 50, (0, 1): 50, (1, 0): 50, (1, 1): 50})
        assert attribute_target_correlation(man).mean_abs_r == pytest.approx(0.0, abs=1e-12)

    def test_perfect_alignment(self):
        man = manifest_from_cells({(0, 0): 40, (1, 1): 60})
        report = attribute_target_correlation(man)
        assert report.mean_abs_r == pytest.approx(1.0, abs=1e-12)
        assert all(e.p_value < 1e-10 for e in report.per_class)

    def test_missing_attributes_rejected(self):
        man = Manifest([Sample("a", "train", 0, 0), Sample("b", "train", 1, None)])
        with pytest.raises(DataError, match="attribute"):
            attribute_target_correlation(man)

    def test_split_scoping(self):
        samples = [Sample("a", "train", 0, 0), Sample("b", "train", 1, 1),
                   Sample("c", "test", 0, None), Sample("d", "test", 1, None)]
        man = Manifest(samples)
        assert attribute_target_correlation(man, "train").mean_abs_r == pytest.approx(1.0)
        with pytest.raises(DataError):
            attribute_target_correlation(man, "test")


class TestRepresentationStd:
    def test_ninety_ten_closed_form(self):
        man = manifest_from_cells({(0, 0): 90, (0, 1): 10})
        assert representation_std(man) == pytest.approx(0.4, abs=1e-12)

    def test_balanced_is_zero(self):
        man = manifest_from_cells({(0, 0): 25, (0, 1): 25, (0, 2): 25, (0, 3): 25})
        assert representation_std(man) == pytest.approx(0.0, abs=1e-12)

    def test_three_group_hand_case(self):
        man = manifest_from_cells({(0, 0): 60, (0, 1): 30, (0, 2): 10})
        expect = np.std([0.6, 0.3, 0.1])
        assert representation_std(man) == pytest.approx(expect, abs=1e-12)

    def test_missing_attributes_rejected(self):
        man = Manifest([Sample("a", "train", 0, None)])
        with pytest.raises(DomainError):
            representation_std(man)


class TestGroupAccuracies:
    def make(self):
        # 2x2 cells of 4 samples each, all in test split.
        return manifest_from_cells(
            {(0, 0): 4, (0, 1): 4, (1, 0): 4, (1, 1): 4}, split="test"
        )

    def test_cell_accuracies(self):
        man = self.make()
        preds = man.targets().copy()
        preds[0] = 1            # break one sample of cell (0, 0)
        table = group_accuracies(preds, man, "test")
        assert table.entries[(0, 0)].accuracy == pytest.approx(0.75)
        assert table.entries[(0, 0)].correct == 3
        assert table.entries[(1, 1)].accuracy == 1.0
        assert len(table) == 4

    def test_summary_mean_min_std(self):
        man = self.make()
        preds = man.targets().copy()
        preds[0:4] = 1          # cell (0,0) accuracy 0
        summary = fairness_summary(group_accuracies(preds, man, "test"))
        assert summary.unbiased_acc == pytest.approx(0.75)
        assert summary.worst_group_acc == 0.0
        assert summary.group_std == pytest.approx(np.std([0.0, 1.0, 1.0, 1.0]))

    def test_unbiased_ignores_cell_sizes(self):
        # 90-sample cell perfect, 10-sample cell wrong: unweighted mean 0.5.
        man = manifest_from_cells({(0, 0): 90, (0, 1): 10}, split="test")
        preds = np.zeros(100, dtype=int)
        preds[90:] = 1          # the (0,1) cell all mispredicted
        summary = fairness_summary(group_accuracies(preds, man, "test"))
        assert summary.unbiased_acc == pytest.approx(0.5)
        assert summary.worst_group_acc == 0.0

    def test_missing_attribute_names_sample_and_field(self):
        man = Manifest([Sample("ok", "test", 0, 0), Sample("bad", "test", 0, None)])
        with pytest.raises(DataError, match="'bad'.*attribute"):
            group_accuracies(np.zeros(2, dtype=int), man, "test")

    def test_prediction_length_checked(self):
        man = self.make()
        with pytest.raises(DomainError, match="cover"):
            group_accuracies(np.zeros(3, dtype=int), man, "test")

    def test_empty_split_rejected(self):
        man = self.make()
        with pytest.raises(DataError, match="no samples"):
            group_accuracies(np.zeros(16, dtype=int), man, "train")

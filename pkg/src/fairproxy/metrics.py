"""Partition agreement and fairness metrics.

A partition is any 1-D array of non-negative integer labels; labels need
not be contiguous. Group accuracies are keyed by (target class, attribute
group) pairs. All reductions accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import Manifest
from .errors import DataError, DomainError


def _as_partition(labels, name: str) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise DomainError(f"{name}: partition labels must be 1-D")
    if arr.size == 0:
        raise DomainError(f"{name}: partition must label at least one sample")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise DomainError(f"{name}: partition labels must be integers")
        arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise DomainError(f"{name}: partition labels must be non-negative")
    return arr.astype(np.int64)


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-adjusted agreement of two partitions of the same samples.

    Computed from the contingency table:

        ARI = (sum_ij C(n_ij,2) - E) / (M - E)

    with E = sum_i C(a_i,2) * sum_j C(b_j,2) / C(n,2) and
    M = (sum_i C(a_i,2) + sum_j C(b_j,2)) / 2. Returns 0 when M == E
    (both partitions trivial), 1 for identical non-trivial partitions,
    and is symmetric and invariant to label renaming.
    """
    a = _as_partition(labels_a, "adjusted_rand_index")
    b = _as_partition(labels_b, "adjusted_rand_index")
    if a.shape != b.shape:
        raise DomainError(f"adjusted_rand_index: partitions label {a.size} vs {b.size} samples")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = int(ai.max()) + 1
    kb = int(bi.max()) + 1
    contingency = np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb).astype(np.float64)

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(contingency).sum()
    sum_a = comb2(contingency.sum(axis=1)).sum()
    sum_b = comb2(contingency.sum(axis=0)).sum()
    total = comb2(float(n))
    if total == 0.0:
        return 0.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 0.0
    return float((sum_cells - expected) / (maximum - expected))


@dataclass(frozen=True)
class ClassCorrelation:
    target: int
    r: float
    p_value: float


@dataclass(frozen=True)
class CorrelationReport:
    """Mean |Pearson r| between class indicators and the attribute value."""

    mean_abs_r: float
    per_class: tuple


def _scoped_indices(man: Manifest, split: str | None) -> np.ndarray:
    if split is None:
        return np.arange(len(man), dtype=np.int64)
    return man.split_indices(split)


def attribute_target_correlation(man: Manifest, split: str | None = None) -> CorrelationReport:
    """Linear association between target classes and the attribute.

    For each target class c, Pearson r between the indicator target==c and
    the attribute value, with the two-sided t-test p-value; the headline
    number is the mean of |r| over classes.
    """
    idx = _scoped_indices(man, split)
    if len(idx) == 0:
        raise DomainError("attribute_target_correlation: no samples in scope")
    attrs = man.attributes()[idx]
    if np.any(attrs < 0):
        raise DataError("attribute_target_correlation: samples in scope are missing the attribute field")
    targets = man.targets()[idx]
    if len(np.unique(targets)) < 2:
        raise DomainError("attribute_target_correlation: need at least 2 distinct target classes in scope")
    if len(np.unique(attrs)) < 2:
        raise DomainError("attribute_target_correlation: attribute column is constant")
    attrs = attrs.astype(np.float64)
    rows = []
    for cls in np.unique(targets):
        indicator = (targets == cls).astype(np.float64)
        if indicator.min() == indicator.max():
            raise DomainError(f"attribute_target_correlation: class {int(cls)} indicator is constant in scope")
        r, p = stats.pearsonr(indicator, attrs)
        rows.append(ClassCorrelation(target=int(cls), r=float(r), p_value=float(p)))
    mean_abs = float(np.mean([abs(row.r) for row in rows]))
    return CorrelationReport(mean_abs_r=mean_abs, per_class=tuple(rows))


def representation_std(man: Manifest, split: str | None = None) -> float:
    """Population standard deviation of attribute-group sample proportions.

    0 for perfectly balanced groups; a 90/10 binary split gives 0.4.
    """
    idx = _scoped_indices(man, split)
    if len(idx) == 0:
        raise DomainError("representation_std: no samples in scope")
    attrs = man.attributes()[idx]
    if np.any(attrs < 0):
        raise DomainError("representation_std: samples in scope are missing the attribute field")
    counts = np.bincount(attrs)
    counts = counts[counts > 0].astype(np.float64)
    proportions = counts / counts.sum()
    return float(np.std(proportions))


@dataclass(frozen=True)
class GroupCell:
    correct: int
    total: int
    accuracy: float


@dataclass(frozen=True)
class GroupAccuracyTable:
    """Accuracy per (target class, attribute group) cell of one split."""

    split: str
    entries: dict

    def __len__(self) -> int:
        return len(self.entries)


def group_accuracies(predictions, man: Manifest, split: str) -> GroupAccuracyTable:
    """Tabulate accuracy for every (target, attribute) cell of a split.

    ``predictions`` must cover the whole manifest (one predicted class per
    row); only the rows of ``split`` are read. Every sample of the split
    must carry an attribute.
    """
    preds = np.asarray(predictions)
    if preds.ndim != 1 or preds.size != len(man):
        raise DomainError(f"group_accuracies: predictions must cover all {len(man)} manifest rows, got {preds.shape}")
    idx = man.split_indices(split)
    if len(idx) == 0:
        raise DataError(f"group_accuracies: split '{split}' has no samples")
    attrs = man.attributes()[idx]
    missing = np.where(attrs < 0)[0]
    if len(missing):
        sample = man.samples[int(idx[missing[0]])]
        raise DataError(f"group_accuracies: sample '{sample.id}' in split '{split}' is missing the attribute field")
    targets = man.targets()[idx]
    preds = preds[idx]
    entries = {}
    for cell in sorted({(int(t), int(g)) for t, g in zip(targets, attrs)}):
        mask = (targets == cell[0]) & (attrs == cell[1])
        total = int(mask.sum())
        correct = int((preds[mask] == cell[0]).sum())
        entries[cell] = GroupCell(correct=correct, total=total, accuracy=correct / total)
    return GroupAccuracyTable(split=split, entries=entries)


@dataclass(frozen=True)
class FairnessSummary:
    """Unweighted mean, minimum, and spread of per-group accuracies."""

    unbiased_acc: float
    worst_group_acc: float
    group_std: float


def fairness_summary(table: GroupAccuracyTable) -> FairnessSummary:
    """Collapse a group table: unbiased = unweighted mean of group
    accuracies, worst = minimum, spread = population std."""
    if len(table.entries) == 0:
        raise DomainError("fairness_summary: empty group table")
    accs = np.array([cell.accuracy for cell in table.entries.values()], dtype=np.float64)
    return FairnessSummary(
        unbiased_acc=float(accs.mean()),
        worst_group_acc=float(accs.min()),
        group_std=float(accs.std()),
    )

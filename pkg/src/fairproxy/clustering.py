"""K-means clustering and per-class pseudo groups.

Pseudo groups substitute for unavailable sensitive-attribute labels: the
samples of each target class are clustered on their prompt-similarity
score vectors, and each cluster is treated as a group during training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .errors import ConfigError, DomainError
from .rng import derive_seed
from .similarity import ScoreMatrix


class KMeansResult(NamedTuple):
    assignments: np.ndarray      # (n,) cluster index per point
    centroids: np.ndarray        # (k, d) float64
    inertia: float               # sum of squared distances to assigned centroid
    n_iter: int
    inertia_history: tuple      # inertia after each Lloyd iteration


def _pairwise_sq(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.maximum(d2, 0.0)


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centers by D^2 sampling; duplicates fall back to uniform picks."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest = _pairwise_sq(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0.0:
            probs = closest / total
            idx = int(rng.choice(n, p=probs))
        else:
            idx = int(rng.integers(n))
        centers[j] = points[idx]
        closest = np.minimum(closest, _pairwise_sq(points, centers[j : j + 1])[:, 0])
    return centers


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int) -> KMeansResult:
    n = points.shape[0]
    centers = _plus_plus_init(points, k, rng)
    prev = None
    history = []
    assign = np.zeros(n, dtype=np.int64)
    for iteration in range(1, max_iter + 1):
        d2 = _pairwise_sq(points, centers)
        assign = d2.argmin(axis=1)
        sizes = np.bincount(assign, minlength=k)
        # Empty-cluster repair: hand each empty cluster the point currently
        # farthest from its own centroid (donor cluster must keep a member).
        for empty in np.where(sizes == 0)[0]:
            own = d2[np.arange(n), assign]
            own[sizes[assign] <= 1] = -np.inf
            far = int(own.argmax())
            sizes[assign[far]] -= 1
            assign[far] = empty
            sizes[empty] = 1
        centers = np.zeros((k, points.shape[1]), dtype=np.float64)
        np.add.at(centers, assign, points)
        centers /= sizes[:, None]
        inertia = float(((points - centers[assign]) ** 2).sum())
        history.append(inertia)
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign.copy()
    return KMeansResult(assign, centers, history[-1], len(history), tuple(history))


def kmeans(points, k: int, seed: int, restarts: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding and multiple restarts.

    Each restart draws from an independent stream derived from
    (seed, restart index); the restart with the lowest inertia wins, ties
    going to the lowest restart index. Iteration stops when assignments
    repeat or after ``max_iter`` rounds. Deterministic given the seed.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise DomainError(f"kmeans expects a 2-D point array, got shape {points.shape}")
    if k < 1:
        raise DomainError(f"kmeans needs k >= 1, got {k}")
    if points.shape[0] < k:
        raise DomainError(f"kmeans needs at least k={k} points, got {points.shape[0]}")
    if restarts < 1:
        raise DomainError(f"kmeans needs restarts >= 1, got {restarts}")
    if max_iter < 1:
        raise DomainError(f"kmeans needs max_iter >= 1, got {max_iter}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    best = None
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), restart)))
        result = _lloyd(points, k, rng, max_iter)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


@dataclass(frozen=True)
class PseudoGrouping:
    """Cluster assignment over a fixed set of dataset rows.

    ``sample_indices`` are dataset row numbers, ``assignments`` the cluster
    id of each one. Every covered sample belongs to exactly one cluster;
    clusters may become empty after :meth:`subset`. ``cluster_classes``
    maps cluster id to the target class it is nested in; it is None for
    label-free groupings (for example a single catch-all cluster), where
    the nesting invariant is vacuous. Nesting is enforced at construction
    sites that know the targets.
    """

    sample_indices: np.ndarray
    assignments: np.ndarray
    n_clusters: int
    cluster_classes: np.ndarray | None = None
    centroids: np.ndarray | None = None
    class_inertia: dict | None = None

    def __post_init__(self):
        idx = np.asarray(self.sample_indices, dtype=np.int64)
        assign = np.asarray(self.assignments, dtype=np.int64)
        if idx.ndim != 1 or assign.ndim != 1 or idx.shape != assign.shape:
            raise DomainError("grouping: sample_indices and assignments must be matching 1-D arrays")
        if len(idx) == 0:
            raise DomainError("grouping: must cover at least one sample")
        if len(np.unique(idx)) != len(idx):
            raise DomainError("grouping: sample_indices must be unique")
        if self.n_clusters < 1:
            raise DomainError(f"grouping: n_clusters must be >= 1, got {self.n_clusters}")
        if assign.min() < 0 or assign.max() >= self.n_clusters:
            raise DomainError("grouping: assignments out of range")
        if self.cluster_classes is not None:
            classes = np.asarray(self.cluster_classes, dtype=np.int64)
            if classes.shape != (self.n_clusters,):
                raise DomainError("grouping: cluster_classes must have one entry per cluster")
            object.__setattr__(self, "cluster_classes", classes)
        object.__setattr__(self, "sample_indices", idx)
        object.__setattr__(self, "assignments", assign)

    @property
    def n_samples(self) -> int:
        return len(self.sample_indices)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.n_clusters)

    def members(self, cluster: int) -> np.ndarray:
        """Dataset rows assigned to one cluster."""
        return self.sample_indices[self.assignments == cluster]

    def per_class(self) -> dict:
        """Target class -> tuple of its cluster ids (needs cluster_classes)."""
        if self.cluster_classes is None:
            raise DomainError("grouping carries no class information")
        out: dict = {}
        for cluster, cls in enumerate(self.cluster_classes):
            out.setdefault(int(cls), []).append(cluster)
        return {cls: tuple(ids) for cls, ids in out.items()}

    def subset(self, keep: np.ndarray) -> "PseudoGrouping":
        """Restrict to a subset of dataset rows, keeping cluster identity."""
        keep = np.asarray(keep, dtype=np.int64)
        pos_of = {int(row): i for i, row in enumerate(self.sample_indices)}
        try:
            positions = np.array([pos_of[int(row)] for row in keep], dtype=np.int64)
        except KeyError as exc:
            raise DomainError(f"grouping: row {exc.args[0]} not covered by this grouping") from None
        return PseudoGrouping(
            sample_indices=self.sample_indices[positions],
            assignments=self.assignments[positions],
            n_clusters=self.n_clusters,
            cluster_classes=self.cluster_classes,
            centroids=self.centroids,
            class_inertia=self.class_inertia,
        )


def build_pseudo_groups(
    ds: Dataset,
    scores: ScoreMatrix,
    k_total: int,
    seed: int,
    indices: np.ndarray | None = None,
    restarts: int = 10,
    max_iter: int = 300,
) -> PseudoGrouping:
    """Cluster each target class on its score columns into K/T pseudo groups.

    ``scores`` must cover every dataset row (columns aligned with the
    manifest); ``indices`` restricts grouping to a subset of rows, e.g. the
    train split. Cluster ids are globally unique: class c owns the block
    [c*K/T, (c+1)*K/T). K must divide evenly by the number of target
    classes, and every class needs at least K/T samples.
    """
    man = ds.manifest
    if scores.samples != len(man):
        raise DomainError(f"score matrix covers {scores.samples} samples, dataset has {len(man)}")
    if indices is None:
        indices = np.arange(len(man), dtype=np.int64)
    else:
        indices = np.asarray(indices, dtype=np.int64)
        if len(indices) == 0:
            raise DomainError("build_pseudo_groups: empty index subset")
        if indices.min() < 0 or indices.max() >= len(man):
            raise DomainError("build_pseudo_groups: indices out of dataset range")
        if len(np.unique(indices)) != len(indices):
            raise DomainError("build_pseudo_groups: indices must be unique")
    n_classes = man.n_classes
    if k_total < 1:
        raise ConfigError(f"cluster count must be >= 1, got {k_total}")
    if k_total % n_classes != 0:
        raise ConfigError(f"cluster count {k_total} is not divisible by the {n_classes} target classes")
    k_per = k_total // n_classes
    features = scores.values.astype(np.float64)
    targets = man.targets()[indices]
    assignments = np.empty(len(indices), dtype=np.int64)
    centroids = np.empty((k_total, scores.prompts), dtype=np.float64)
    class_inertia = {}
    for cls in range(n_classes):
        pos = np.where(targets == cls)[0]
        if len(pos) < k_per:
            raise DomainError(f"target class {cls} has {len(pos)} samples, fewer than {k_per} clusters")
        sub = features[:, indices[pos]].T
        result = kmeans(sub, k_per, seed=derive_seed(seed, "class", cls), restarts=restarts, max_iter=max_iter)
        assignments[pos] = result.assignments + cls * k_per
        centroids[cls * k_per : (cls + 1) * k_per] = result.centroids
        class_inertia[cls] = result.inertia
    return PseudoGrouping(
        sample_indices=indices,
        assignments=assignments,
        n_clusters=k_total,
        cluster_classes=np.repeat(np.arange(n_classes, dtype=np.int64), k_per),
        centroids=centroids,
        class_inertia=class_inertia,
    )


def grouping_from_labels(labels: np.ndarray, targets: np.ndarray, sample_indices: np.ndarray) -> PseudoGrouping:
    """Wrap externally supplied group labels as a class-nested grouping.

    Each non-empty (target class, label) combination becomes one cluster,
    ordered by class then label. Used by the simulation lab to turn true or
    corrupted attribute partitions into training groupings.
    """
    labels = np.asarray(labels, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    sample_indices = np.asarray(sample_indices, dtype=np.int64)
    if not (labels.shape == targets.shape == sample_indices.shape) or labels.ndim != 1:
        raise DomainError("grouping_from_labels: labels, targets, sample_indices must be matching 1-D arrays")
    combos = sorted({(int(c), int(g)) for c, g in zip(targets, labels)})
    cluster_of = {combo: i for i, combo in enumerate(combos)}
    assignments = np.array([cluster_of[(int(c), int(g))] for c, g in zip(targets, labels)], dtype=np.int64)
    return PseudoGrouping(
        sample_indices=sample_indices,
        assignments=assignments,
        n_clusters=len(combos),
        cluster_classes=np.array([c for c, _ in combos], dtype=np.int64),
    )


def single_cluster_grouping(sample_indices: np.ndarray) -> PseudoGrouping:
    """One catch-all cluster over the given rows (label-free)."""
    sample_indices = np.asarray(sample_indices, dtype=np.int64)
    return PseudoGrouping(
        sample_indices=sample_indices,
        assignments=np.zeros(len(sample_indices), dtype=np.int64),
        n_clusters=1,
    )

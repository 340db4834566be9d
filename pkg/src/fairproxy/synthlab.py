"""Synthetic benchmark lab for controlled fairness experiments.

Generates desk-scale datasets where the sensitive attribute is known by
construction, so the whole pipeline can be exercised end to end: how good
must a pseudo-group partition be (measured by adjusted Rand index against
the truth) before loss-balanced re-sampling helps, how sensitive is the
result to the cluster count, and how often should sampling probabilities
update.

Geometry: each (target, group) cell draws embeddings from a unit-variance
Gaussian blob. Target classes are separated along one set of axes
(``separation``) and attribute groups along another (``group_signal``).
With a skewed joint distribution the group axis becomes a spurious
shortcut for the target, so a plain classifier trades minority-cell
accuracy for it; re-sampling with faithful groups removes the shortcut.
The synthetic score matrix carries one row per group holding the group
indicator plus Gaussian noise, clipped to the [-1, 1] score range.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .clustering import build_pseudo_groups, grouping_from_labels, single_cluster_grouping
from .data import Dataset, EmbeddingMatrix, Manifest, Sample, bind_dataset
from .errors import CalibrationError, ConfigError, DomainError, FairproxyError
from .metrics import adjusted_rand_index, fairness_summary, group_accuracies
from .rng import derive_seed, substream
from .similarity import ScoreMatrix
from .training import TrainConfig, TrainedModel, predict, train

SPLIT_FRACTIONS = (0.8, 0.1, 0.1)


def default_joint(targets: int, groups: int, minority_cell: float = 0.05) -> np.ndarray:
    """Skewed joint where group g is the shortcut for target t = g mod T.

    Off-pattern cells get ``minority_cell`` mass each; the rest spreads
    evenly over the aligned cells.
    """
    if not (0.0 < minority_cell < 1.0 / (targets * groups)):
        raise ConfigError(f"minority_cell must lie in (0, {1.0 / (targets * groups):.4f}), got {minority_cell}")
    joint = np.full((targets, groups), minority_cell, dtype=np.float64)
    aligned = [(g % targets, g) for g in range(groups)]
    remaining = 1.0 - minority_cell * (targets * groups - len(aligned))
    for t, g in aligned:
        joint[t, g] = remaining / len(aligned)
    return joint


@dataclass(frozen=True)
class SynthConfig:
    n: int = 20000
    dim: int = 16
    targets: int = 2
    groups: int = 2
    joint: np.ndarray | None = None       # (targets, groups) cell probabilities
    separation: float = 3.6               # target-axis offset between class blobs
    group_signal: float = 2.5             # group-axis offset between group blobs
    score_noise_sigma: float = 0.37       # noise on the synthetic score rows
    seed: int = 0

    def __post_init__(self):
        if self.targets < 2:
            raise ConfigError(f"need at least 2 target classes, got {self.targets}")
        if self.groups < 2:
            raise ConfigError(f"need at least 2 attribute groups, got {self.groups}")
        if self.n < self.targets * self.groups:
            raise ConfigError(f"n={self.n} cannot populate {self.targets}x{self.groups} cells")
        if self.dim < self.targets + self.groups:
            raise ConfigError(f"dim={self.dim} too small for {self.targets} target + {self.groups} group axes")
        if self.separation < 0 or self.group_signal < 0:
            raise ConfigError("separation and group_signal must be >= 0")
        if self.score_noise_sigma < 0:
            raise ConfigError(f"score_noise_sigma must be >= 0, got {self.score_noise_sigma}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        joint = self.joint
        if joint is None:
            joint = default_joint(self.targets, self.groups)
        joint = np.asarray(joint, dtype=np.float64)
        if joint.shape != (self.targets, self.groups):
            raise ConfigError(f"joint must have shape ({self.targets}, {self.groups}), got {joint.shape}")
        if np.any(joint < 0):
            raise ConfigError("joint cell probabilities must be >= 0")
        if abs(joint.sum() - 1.0) > 1e-9:
            raise ConfigError(f"joint must sum to 1, got {joint.sum()!r}")
        if np.any(joint <= 0):
            raise ConfigError("every (target, group) cell needs positive probability")
        object.__setattr__(self, "joint", joint)


def gen_synthetic(cfg: SynthConfig) -> tuple[Dataset, ScoreMatrix]:
    """Draw a dataset plus its synthetic score matrix.

    Cells are sampled i.i.d. from the joint; embeddings are unit-variance
    Gaussian blobs at cell-specific centers; splits are a seeded 80/10/10
    shuffle; attributes carry the true group. Deterministic per config.
    """
    rng = substream(cfg.seed, "synth")
    t_count, g_count = cfg.targets, cfg.groups
    cells = rng.choice(t_count * g_count, size=cfg.n, p=cfg.joint.ravel())
    targets = cells // g_count
    groups = cells % g_count
    counts = np.bincount(cells, minlength=t_count * g_count)
    if counts.min() == 0:
        empty = int(counts.argmin())
        raise ConfigError(
            f"cell (target={empty // g_count}, group={empty % g_count}) drew no samples; increase n"
        )

    centers = np.zeros((t_count, g_count, cfg.dim), dtype=np.float64)
    for t in range(t_count):
        centers[t, :, t] = cfg.separation / 2.0
    for g in range(g_count):
        centers[:, g, t_count + g] = cfg.group_signal / 2.0
    embeddings = centers[targets, groups] + rng.standard_normal((cfg.n, cfg.dim))

    indicator = (groups[None, :] == np.arange(g_count)[:, None]).astype(np.float64)
    scores = indicator + cfg.score_noise_sigma * rng.standard_normal((g_count, cfg.n))
    scores = np.clip(scores, -1.0, 1.0)

    order = rng.permutation(cfg.n)
    n_train = int(SPLIT_FRACTIONS[0] * cfg.n)
    n_val = int(SPLIT_FRACTIONS[1] * cfg.n)
    split_of = np.empty(cfg.n, dtype=object)
    split_of[order[:n_train]] = "train"
    split_of[order[n_train : n_train + n_val]] = "val"
    split_of[order[n_train + n_val :]] = "test"

    samples = [
        Sample(id=f"s{i:06d}", split=split_of[i], target=int(targets[i]), attribute=int(groups[i]))
        for i in range(cfg.n)
    ]
    dataset = bind_dataset(EmbeddingMatrix(embeddings.astype(np.float32)), Manifest(samples))
    return dataset, ScoreMatrix(scores.astype(np.float32))


def corrupt_partition(truth, rate: float, seed: int) -> np.ndarray:
    """Relabel a random floor(rate * n) subset uniformly over the alphabet.

    rate=0 returns the truth unchanged; rate=1 redraws every label, driving
    agreement with the truth to chance level.
    """
    labels = np.asarray(truth, dtype=np.int64).copy()
    if labels.ndim != 1 or labels.size == 0:
        raise DomainError("corrupt_partition: need a non-empty 1-D partition")
    if not (0.0 <= rate <= 1.0):
        raise DomainError(f"corrupt_partition: rate must lie in [0, 1], got {rate}")
    alphabet = np.unique(labels)
    rng = substream(seed, "corrupt")
    n_flip = int(np.floor(rate * labels.size))
    if n_flip == 0:
        return labels
    chosen = rng.choice(labels.size, size=n_flip, replace=False)
    labels[chosen] = rng.choice(alphabet, size=n_flip, replace=True)
    return labels


def measure_corruption_ari(truth, rate: float, seed: int, draws: int = 5) -> float:
    """Mean ARI between the truth and ``draws`` independent corruptions."""
    values = [
        adjusted_rand_index(truth, corrupt_partition(truth, rate, derive_seed(seed, "draw", d)))
        for d in range(draws)
    ]
    return float(np.mean(values))


def calibrate_ari(truth, target_ari: float, tol: float, seed: int, draws: int = 5, max_iter: int = 40) -> float:
    """Find a corruption rate whose mean ARI hits ``target_ari``.

    Bisection over [0, 1]; ARI decreases in the rate in expectation. The
    empirical ARI at each probe averages ``draws`` corruption draws.
    Raises CalibrationError when ``max_iter`` probes cannot close the gap.
    """
    if not (0.0 <= target_ari <= 1.0):
        raise DomainError(f"calibrate_ari: target must lie in [0, 1], got {target_ari}")
    if tol <= 0:
        raise DomainError(f"calibrate_ari: tol must be > 0, got {tol}")
    if abs(1.0 - target_ari) <= tol:
        return 0.0
    hi_value = measure_corruption_ari(truth, 1.0, derive_seed(seed, "probe", 0), draws)
    if abs(hi_value - target_ari) <= tol:
        return 1.0
    lo, hi = 0.0, 1.0
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        value = measure_corruption_ari(truth, mid, derive_seed(seed, "probe", iteration), draws)
        if abs(value - target_ari) <= tol:
            return mid
        if value > target_ari:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"calibrate_ari: no rate within tol={tol} of ARI {target_ari} after {max_iter} probes"
    )


@dataclass(frozen=True)
class SweepCell:
    """Outcome of one setting x seed training run."""

    setting: object
    seed: int
    worst_group_acc: float | None = None
    unbiased_acc: float | None = None
    group_std: float | None = None
    partition_ari: float | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class SweepRow:
    """All seeds of one setting, with aggregates over the successful cells."""

    setting: object
    cells: tuple

    def _values(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.cells if not c.failed], dtype=np.float64)

    @property
    def n_ok(self) -> int:
        return sum(1 for c in self.cells if not c.failed)

    def mean(self, name: str = "worst_group_acc") -> float:
        values = self._values(name)
        if len(values) == 0:
            raise DomainError(f"sweep row {self.setting!r}: every cell failed")
        return float(values.mean())

    def std(self, name: str = "worst_group_acc") -> float:
        values = self._values(name)
        if len(values) == 0:
            raise DomainError(f"sweep row {self.setting!r}: every cell failed")
        return float(values.std())


@dataclass(frozen=True)
class SweepResult:
    kind: str
    rows: tuple
    baseline: SweepRow
    annotations: tuple = field(default=())

    def row(self, setting) -> SweepRow:
        for row in self.rows:
            if row.setting == setting:
                return row
        raise DomainError(f"sweep has no row for setting {setting!r}")


def _summarize(ds: Dataset, model: TrainedModel) -> tuple[float, float, float]:
    preds = predict(model, ds.embeddings)
    summary = fairness_summary(group_accuracies(preds, ds.manifest, "test"))
    return summary.worst_group_acc, summary.unbiased_acc, summary.group_std


def _baseline_row(datasets: dict, seeds, train_cfg: TrainConfig, master_seed: int) -> SweepRow:
    cells = []
    for seed in seeds:
        ds, _ = datasets[seed]
        try:
            grouping = single_cluster_grouping(ds.manifest.split_indices("train"))
            cfg = dataclasses.replace(train_cfg, debias=False, seed=derive_seed(master_seed, "train-base", seed))
            worst, unbiased, spread = _summarize(ds, train(ds, grouping, cfg))
            cells.append(SweepCell("baseline", seed, worst, unbiased, spread))
        except FairproxyError as exc:
            cells.append(SweepCell("baseline", seed, error=str(exc)))
    return SweepRow("baseline", tuple(cells))


def _gen_per_seed(cfg: SynthConfig, seeds) -> dict:
    return {
        seed: gen_synthetic(dataclasses.replace(cfg, seed=derive_seed(cfg.seed, "dataset", seed)))
        for seed in seeds
    }


def run_ari_sweep(
    cfg: SynthConfig,
    ari_grid,
    seeds,
    train_cfg: TrainConfig,
    calibration_tol: float = 0.02,
) -> SweepResult:
    """Train at controlled pseudo-group quality levels.

    For each ARI level and seed: calibrate a corruption rate against that
    seed's train-split truth, corrupt the true group partition, wrap the
    result as a class-nested grouping, train with re-sampling, and score
    the test split against the true attributes. A no-intervention baseline
    row is included. Cell failures are recorded and do not stop the sweep.
    One dataset is generated per seed and shared across every level so
    cross-level differences reflect training alone.
    """
    ari_grid = [float(a) for a in ari_grid]
    seeds = [int(s) for s in seeds]
    if not ari_grid or not seeds:
        raise ConfigError("run_ari_sweep: need at least one ARI level and one seed")
    datasets = _gen_per_seed(cfg, seeds)
    rows = []
    for level_index, level in enumerate(ari_grid):
        cells = []
        for seed in seeds:
            ds, _ = datasets[seed]
            try:
                man = ds.manifest
                train_idx = man.split_indices("train")
                truth = man.attributes()[train_idx]
                if level >= 1.0:
                    labels = truth.copy()
                else:
                    rate = calibrate_ari(
                        truth, level, calibration_tol,
                        seed=derive_seed(cfg.seed, "calibrate", level_index, seed),
                    )
                    labels = corrupt_partition(truth, rate, derive_seed(cfg.seed, "corrupt", level_index, seed))
                achieved = adjusted_rand_index(truth, labels)
                grouping = grouping_from_labels(labels, man.targets()[train_idx], train_idx)
                run_cfg = dataclasses.replace(
                    train_cfg, debias=True, seed=derive_seed(cfg.seed, "train", level_index, seed)
                )
                worst, unbiased, spread = _summarize(ds, train(ds, grouping, run_cfg))
                cells.append(SweepCell(level, seed, worst, unbiased, spread, partition_ari=achieved))
            except FairproxyError as exc:
                cells.append(SweepCell(level, seed, error=str(exc)))
        rows.append(SweepRow(level, tuple(cells)))
    baseline = _baseline_row(datasets, seeds, train_cfg, cfg.seed)
    return SweepResult(kind="ari", rows=tuple(rows), baseline=baseline)


def run_cluster_sweep(cfg: SynthConfig, cluster_counts, seeds, train_cfg: TrainConfig) -> SweepResult:
    """Train with pseudo groups built from the score matrix at several K."""
    cluster_counts = [int(k) for k in cluster_counts]
    seeds = [int(s) for s in seeds]
    if not cluster_counts or not seeds:
        raise ConfigError("run_cluster_sweep: need at least one cluster count and one seed")
    for k in cluster_counts:
        if k < 1 or k % cfg.targets != 0:
            raise ConfigError(f"cluster count {k} is not divisible by the {cfg.targets} target classes")
    datasets = _gen_per_seed(cfg, seeds)
    rows = []
    for k_index, k in enumerate(cluster_counts):
        cells = []
        for seed in seeds:
            ds, scores = datasets[seed]
            try:
                train_idx = ds.manifest.split_indices("train")
                grouping = build_pseudo_groups(
                    ds, scores, k, seed=derive_seed(cfg.seed, "cluster", k_index, seed), indices=train_idx
                )
                truth = ds.manifest.attributes()[train_idx]
                achieved = adjusted_rand_index(truth, grouping.assignments)
                run_cfg = dataclasses.replace(
                    train_cfg, debias=True, seed=derive_seed(cfg.seed, "train", k_index, seed)
                )
                worst, unbiased, spread = _summarize(ds, train(ds, grouping, run_cfg))
                cells.append(SweepCell(k, seed, worst, unbiased, spread, partition_ari=achieved))
            except FairproxyError as exc:
                cells.append(SweepCell(k, seed, error=str(exc)))
        rows.append(SweepRow(k, tuple(cells)))
    baseline = _baseline_row(datasets, seeds, train_cfg, cfg.seed)
    return SweepResult(kind="cluster", rows=tuple(rows), baseline=baseline)


def run_theta_sweep(cfg: SynthConfig, thetas, seeds, train_cfg: TrainConfig) -> SweepResult:
    """Vary only the probability update period; annotate the best band.

    Pseudo groups come from the score matrix at the default K =
    groups x targets. The annotation flags every theta whose mean
    worst-group accuracy sits within half a point of the best row.
    """
    thetas = [int(t) for t in thetas]
    seeds = [int(s) for s in seeds]
    if not thetas or not seeds:
        raise ConfigError("run_theta_sweep: need at least one theta and one seed")
    if any(t < 1 for t in thetas):
        raise ConfigError(f"theta values must be >= 1, got {thetas}")
    if train_cfg.epochs < max(thetas):
        raise ConfigError(f"epochs ({train_cfg.epochs}) must be >= max theta ({max(thetas)})")
    datasets = _gen_per_seed(cfg, seeds)
    k_default = cfg.targets * cfg.groups
    rows = []
    for t_index, theta in enumerate(thetas):
        cells = []
        for seed in seeds:
            ds, scores = datasets[seed]
            try:
                train_idx = ds.manifest.split_indices("train")
                grouping = build_pseudo_groups(
                    ds, scores, k_default, seed=derive_seed(cfg.seed, "cluster", seed), indices=train_idx
                )
                run_cfg = dataclasses.replace(
                    train_cfg, debias=True, theta=theta, seed=derive_seed(cfg.seed, "train", t_index, seed)
                )
                worst, unbiased, spread = _summarize(ds, train(ds, grouping, run_cfg))
                cells.append(SweepCell(theta, seed, worst, unbiased, spread))
            except FairproxyError as exc:
                cells.append(SweepCell(theta, seed, error=str(exc)))
        rows.append(SweepRow(theta, tuple(cells)))
    baseline = _baseline_row(datasets, seeds, train_cfg, cfg.seed)
    result = SweepResult(kind="theta", rows=tuple(rows), baseline=baseline)
    scored = [(row.mean(), row.setting) for row in result.rows if row.n_ok]
    annotations = ()
    if scored:
        best = max(v for v, _ in scored)
        band = sorted(setting for v, setting in scored if best - v <= 0.005)
        annotations = (f"best theta band (within 0.5 points of top worst-group accuracy): {band}",)
    return dataclasses.replace(result, annotations=annotations)


def write_sweep_csv(result: SweepResult, path) -> None:
    """One row per setting x seed plus mean/std aggregate rows."""
    lines = ["setting,seed,worst_group_acc,unbiased_acc,group_std,partition_ari,error"]

    def fmt(value):
        return "" if value is None else repr(value)

    def emit(row: SweepRow):
        for cell in row.cells:
            lines.append(
                f"{row.setting},{cell.seed},{fmt(cell.worst_group_acc)},{fmt(cell.unbiased_acc)},"
                f"{fmt(cell.group_std)},{fmt(cell.partition_ari)},{'' if cell.error is None else cell.error}"
            )
        if row.n_ok:
            for stat in ("mean", "std"):
                agg = getattr(row, stat)
                lines.append(
                    f"{row.setting},{stat},{fmt(agg('worst_group_acc'))},{fmt(agg('unbiased_acc'))},"
                    f"{fmt(agg('group_std'))},,"
                )

    emit(result.baseline)
    for row in result.rows:
        emit(row)
    for note in result.annotations:
        lines.append(f"# {note}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def format_sweep_table(result: SweepResult) -> str:
    """Human-readable summary table."""
    lines = [
        f"sweep kind: {result.kind}",
        f"{'setting':>10}  {'seeds':>5}  {'worst-group':>16}  {'unbiased':>16}  {'group-std':>10}",
    ]

    def line(row: SweepRow) -> str:
        label = str(row.setting)
        if row.n_ok == 0:
            return f"{label:>10}  {0:>5}  {'all cells failed':>16}"
        worst = f"{row.mean('worst_group_acc'):.4f} ± {row.std('worst_group_acc'):.4f}"
        unbiased = f"{row.mean('unbiased_acc'):.4f} ± {row.std('unbiased_acc'):.4f}"
        spread = f"{row.mean('group_std'):.4f}"
        return f"{label:>10}  {row.n_ok:>5}  {worst:>16}  {unbiased:>16}  {spread:>10}"

    lines.append(line(result.baseline))
    for row in result.rows:
        lines.append(line(row))
    for cell_row in (result.baseline, *result.rows):
        for cell in cell_row.cells:
            if cell.failed:
                lines.append(f"  failed: setting={cell_row.setting} seed={cell.seed}: {cell.error}")
    for note in result.annotations:
        lines.append(note)
    return "\n".join(lines)

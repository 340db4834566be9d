"""Embedding-space classifiers with loss-balanced cluster re-sampling.

The sampler keeps one probability per pseudo cluster, initialised uniform.
After every window of ``theta`` epochs the recorded per-cluster mean losses
are folded into the probabilities:

    p_k  <-  alpha * (window loss of cluster k) / (window loss of all clusters)
             + (1 - alpha) * p_k

followed by a probability floor and renormalization, and the window is
cleared. Batches are assembled by picking a cluster with probability p_k
and then a member uniformly with replacement, which is equivalent to
per-sample weights p_k / |G_k|. Baseline (debias off) runs draw uniformly
over the train split through the same machinery, so both modes see the
same number of gradient steps per epoch and a single-cluster grouping with
debias on reproduces the baseline bit for bit.

Loss values fed to the sampler come from a clean (un-jittered) forward
pass on the training batches themselves; the gradient step uses the
jittered inputs. Weights update by plain SGD with momentum and L2 weight
decay; the learning rate decays by a fixed factor at configured epoch
fractions. The checkpoint kept is the epoch with the best validation
unbiased accuracy when validation attributes exist, else the best overall
validation accuracy.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .clustering import PseudoGrouping
from .data import Dataset, EmbeddingMatrix, load_embeddings, write_embeddings
from .errors import ConfigError, DataError, DomainError, FormatError, TrainingError
from .rng import substream

MODEL_KINDS = ("linear", "mlp")

# Default probability floor, as a fraction of uniform: floor = 0.01 / K.
FLOOR_SCALE = 0.01


@dataclass(frozen=True)
class SamplerState:
    """Cluster sampling probabilities plus the loss window feeding them."""

    probs: np.ndarray
    window: tuple
    alpha: float
    theta: int
    floor: float

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 1:
            raise DomainError("sampler: probs must be a non-empty 1-D array")
        if not np.all(np.isfinite(probs)) or probs.min() < 0:
            raise DataError("sampler: probs must be finite and non-negative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise DataError(f"sampler: probs must sum to 1, got {probs.sum()!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"sampler: alpha must lie in (0, 1], got {self.alpha}")
        if self.theta < 1:
            raise ConfigError(f"sampler: theta must be >= 1, got {self.theta}")
        if self.floor < 0:
            raise ConfigError(f"sampler: floor must be >= 0, got {self.floor}")
        if len(self.window) > self.theta:
            raise DomainError(f"sampler: window holds {len(self.window)} epochs, limit is theta={self.theta}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "window", tuple(np.asarray(w, dtype=np.float64) for w in self.window))

    @property
    def n_clusters(self) -> int:
        return self.probs.size


def init_sampler(n_clusters: int, alpha: float = 0.3, theta: int = 5, floor: float | None = None) -> SamplerState:
    """Uniform probabilities over ``n_clusters``, empty loss window.

    ``floor`` defaults to 0.01 / K; pass 0 to disable the floor.
    """
    if n_clusters < 1:
        raise ConfigError(f"sampler: need at least one cluster, got {n_clusters}")
    if floor is None:
        floor = FLOOR_SCALE / n_clusters
    probs = np.full(n_clusters, 1.0 / n_clusters, dtype=np.float64)
    return SamplerState(probs=probs, window=(), alpha=alpha, theta=theta, floor=floor)


def record_epoch_losses(state: SamplerState, per_cluster_mean) -> SamplerState:
    """Append one epoch of per-cluster mean losses to the window.

    The caller fills slots of clusters unsampled that epoch with the
    epoch's global mean loss (see :func:`epoch_cluster_means`).
    """
    losses = np.asarray(per_cluster_mean, dtype=np.float64)
    if losses.shape != (state.n_clusters,):
        raise DomainError(f"sampler: expected {state.n_clusters} cluster losses, got shape {losses.shape}")
    if np.any(np.isnan(losses)):
        raise DataError("sampler: NaN in per-cluster losses")
    if not np.all(np.isfinite(losses)):
        raise DataError("sampler: non-finite per-cluster losses")
    if losses.min() < 0:
        raise DataError(f"sampler: negative per-cluster loss {losses.min()!r}")
    if len(state.window) >= state.theta:
        raise DomainError("sampler: window already holds theta epochs, update probabilities first")
    return dataclasses.replace(state, window=state.window + (losses,))


def update_probs(state: SamplerState) -> SamplerState:
    """Fold the full loss window into the sampling probabilities.

    New probability: alpha * window-loss share + (1 - alpha) * previous,
    then floor and renormalize. An all-zero window falls back to uniform
    shares. The window is cleared. Loss shares are invariant to scaling
    all losses by a positive constant.
    """
    if len(state.window) != state.theta:
        raise DomainError(f"sampler: window holds {len(state.window)} epochs, need exactly theta={state.theta}")
    sums = np.sum(state.window, axis=0)
    total = sums.sum()
    if total > 0.0:
        shares = sums / total
    else:
        shares = np.full(state.n_clusters, 1.0 / state.n_clusters)
    probs = state.alpha * shares + (1.0 - state.alpha) * state.probs
    probs = probs / probs.sum()
    if state.floor > 0.0:
        # Clamp-and-redistribute: entries below the floor are pinned to it
        # and the rest renormalized over the remaining mass. Rescaling can
        # push further entries below the floor, so iterate to the fixed
        # point (at most K rounds). Leaves probs untouched when none bind,
        # and every final entry is >= floor exactly.
        clamped = np.zeros(len(probs), dtype=bool)
        for _ in range(len(probs)):
            newly = (probs < state.floor) & ~clamped
            if not newly.any():
                break
            clamped |= newly
            probs[clamped] = state.floor
            free = ~clamped
            remaining = 1.0 - state.floor * clamped.sum()
            probs[free] *= remaining / probs[free].sum()
    return dataclasses.replace(state, probs=probs, window=())


def sample_batch(state: SamplerState, grouping: PseudoGrouping, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``batch_size`` dataset rows: cluster by p_k, member uniformly.

    Sampling is with replacement. Every cluster must be non-empty.
    """
    if batch_size < 1:
        raise DomainError(f"sample_batch: batch_size must be >= 1, got {batch_size}")
    if state.n_clusters != grouping.n_clusters:
        raise DomainError(
            f"sample_batch: sampler tracks {state.n_clusters} clusters, grouping has {grouping.n_clusters}"
        )
    sizes = grouping.sizes()
    empty = np.where(sizes == 0)[0]
    if len(empty):
        raise DomainError(f"sample_batch: cluster {int(empty[0])} is empty")
    weights = state.probs[grouping.assignments] / sizes[grouping.assignments]
    weights = weights / weights.sum()
    positions = rng.choice(grouping.n_samples, size=batch_size, replace=True, p=weights)
    return grouping.sample_indices[positions]


def epoch_cluster_means(loss_sums: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Per-cluster mean loss; unsampled clusters get the epoch global mean."""
    loss_sums = np.asarray(loss_sums, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise DomainError("epoch_cluster_means: no samples recorded this epoch")
    global_mean = loss_sums.sum() / counts.sum()
    means = np.full(loss_sums.shape, global_mean, dtype=np.float64)
    seen = counts > 0
    means[seen] = loss_sums[seen] / counts[seen]
    return means


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 256
    lr: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_milestones: tuple = (1 / 3, 2 / 3)
    lr_decay: float = 0.1
    alpha: float = 0.3
    theta: int = 5
    model: str = "linear"
    hidden_dim: int | None = None
    jitter_sigma: float | None = None    # None = 0.01 x mean train feature norm
    debias: bool = True
    prob_floor: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.theta < 1:
            raise ConfigError(f"theta must be >= 1, got {self.theta}")
        if self.debias and self.epochs < self.theta:
            raise ConfigError(f"epochs ({self.epochs}) must be >= theta ({self.theta}) when debias is on")
        if self.lr_decay <= 0:
            raise ConfigError(f"lr_decay must be > 0, got {self.lr_decay}")
        if any(not (0.0 < m < 1.0) for m in self.lr_milestones):
            raise ConfigError(f"lr_milestones must be epoch fractions in (0, 1), got {self.lr_milestones}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.model == "mlp":
            if self.hidden_dim is None or self.hidden_dim < 1:
                raise ConfigError(f"mlp model needs hidden_dim >= 1, got {self.hidden_dim}")
        if self.jitter_sigma is not None and self.jitter_sigma < 0:
            raise ConfigError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "lr_milestones", tuple(self.lr_milestones))


def _softmax_per_sample(logits: np.ndarray, targets: np.ndarray):
    """Per-sample cross-entropy and dL/dlogits for the mean loss."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    lse = np.log(exp.sum(axis=1))
    rows = np.arange(logits.shape[0])
    per_sample = lse - shifted[rows, targets]
    probs = exp / exp.sum(axis=1, keepdims=True)
    dlogits = probs
    dlogits[rows, targets] -= 1.0
    dlogits /= logits.shape[0]
    return per_sample, dlogits


class _LinearModel:
    kind = "linear"

    def __init__(self, params: dict):
        self.params = params

    @classmethod
    def init(cls, input_dim: int, n_classes: int, hidden_dim, rng: np.random.Generator):
        scale = 1.0 / math.sqrt(input_dim)
        return cls({
            "W": rng.normal(0.0, scale, size=(input_dim, n_classes)),
            "b": np.zeros(n_classes, dtype=np.float64),
        })

    @property
    def input_dim(self) -> int:
        return self.params["W"].shape[0]

    @property
    def n_classes(self) -> int:
        return self.params["W"].shape[1]

    @property
    def hidden_dim(self):
        return None

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.params["W"] + self.params["b"]

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        per_sample, dlogits = _softmax_per_sample(self.logits(x), y)
        grads = {"W": x.T @ dlogits, "b": dlogits.sum(axis=0)}
        return per_sample, grads


class _MLPModel:
    kind = "mlp"

    def __init__(self, params: dict):
        self.params = params

    @classmethod
    def init(cls, input_dim: int, n_classes: int, hidden_dim: int, rng: np.random.Generator):
        return cls({
            "W1": rng.normal(0.0, math.sqrt(2.0 / input_dim), size=(input_dim, hidden_dim)),
            "b1": np.zeros(hidden_dim, dtype=np.float64),
            "W2": rng.normal(0.0, math.sqrt(2.0 / hidden_dim), size=(hidden_dim, n_classes)),
            "b2": np.zeros(n_classes, dtype=np.float64),
        })

    @property
    def input_dim(self) -> int:
        return self.params["W1"].shape[0]

    @property
    def n_classes(self) -> int:
        return self.params["W2"].shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.params["W1"].shape[1]

    def _forward(self, x: np.ndarray):
        pre = x @ self.params["W1"] + self.params["b1"]
        hidden = np.maximum(pre, 0.0)
        return pre, hidden, hidden @ self.params["W2"] + self.params["b2"]

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)[2]

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        pre, hidden, logits = self._forward(x)
        per_sample, dlogits = _softmax_per_sample(logits, y)
        dhidden = dlogits @ self.params["W2"].T
        dhidden[pre <= 0.0] = 0.0
        grads = {
            "W1": x.T @ dhidden,
            "b1": dhidden.sum(axis=0),
            "W2": hidden.T @ dlogits,
            "b2": dlogits.sum(axis=0),
        }
        return per_sample, grads


_MODEL_CLASSES = {"linear": _LinearModel, "mlp": _MLPModel}


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    cluster_losses: tuple
    probs: tuple
    val_accuracy: float | None
    val_unbiased: float | None


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    params: dict
    input_dim: int
    n_classes: int
    hidden_dim: int | None
    best_epoch: int
    jitter_sigma: float
    n_clusters: int
    config: TrainConfig
    history: tuple = field(default=(), compare=False)

    def _impl(self):
        return _MODEL_CLASSES[self.kind](self.params)


def predict(model: TrainedModel, emb) -> np.ndarray:
    """Predicted class per row; ties resolve to the lowest class index."""
    x = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
    if x.ndim != 2:
        raise DomainError(f"predict expects a 2-D matrix, got shape {x.shape}")
    if x.shape[1] != model.input_dim:
        raise DomainError(f"predict: model expects D={model.input_dim}, embeddings have D={x.shape[1]}")
    logits = model._impl().logits(x.astype(np.float64))
    return logits.argmax(axis=1)


def _validation_metrics(preds_full: np.ndarray, ds: Dataset):
    man = ds.manifest
    val_idx = man.split_indices("val")
    if len(val_idx) == 0:
        return None, None
    accuracy = float((preds_full[val_idx] == man.targets()[val_idx]).mean())
    unbiased = None
    if man.has_full_attributes("val"):
        table = metrics.group_accuracies(preds_full, man, "val")
        unbiased = metrics.fairness_summary(table).unbiased_acc
    return accuracy, unbiased


def train(ds: Dataset, grouping: PseudoGrouping, cfg: TrainConfig) -> TrainedModel:
    """Train a classifier on the train split of ``ds``.

    ``grouping`` must cover exactly the train split. With ``cfg.debias``
    batches come from the cluster sampler and probabilities update every
    ``theta`` epochs; without it, draws are uniform over the train split
    (cluster losses are still tracked for the history). Epochs consist of
    ceil(N_train / batch_size) batches in both modes. Deterministic given
    ``cfg.seed``: repeated runs produce bit-identical weights.
    """
    man = ds.manifest
    train_idx = man.split_indices("train")
    if len(train_idx) == 0:
        raise DataError("train: no samples in the train split")
    if not np.array_equal(np.sort(grouping.sample_indices), np.sort(train_idx)):
        raise DomainError("train: grouping must cover exactly the train split")

    x_all = ds.embeddings.values.astype(np.float64)
    y_all = man.targets()
    n_classes = man.n_classes
    if n_classes < 2:
        raise DataError(f"train: need at least 2 target classes, got {n_classes}")

    sigma = cfg.jitter_sigma
    if sigma is None:
        sigma = FLOOR_SCALE * float(np.linalg.norm(x_all[train_idx], axis=1).mean())

    rng_init = substream(cfg.seed, "init")
    rng_sampler = substream(cfg.seed, "sampler")
    rng_jitter = substream(cfg.seed, "jitter")

    model = _MODEL_CLASSES[cfg.model].init(ds.embeddings.dim, n_classes, cfg.hidden_dim, rng_init)
    velocity = {name: np.zeros_like(p) for name, p in model.params.items()}

    n_clusters = grouping.n_clusters
    state = init_sampler(n_clusters, alpha=cfg.alpha, theta=cfg.theta,
                         floor=None if cfg.prob_floor else 0.0)
    sizes = grouping.sizes().astype(np.float64)
    if cfg.debias and sizes.min() == 0:
        raise DomainError(f"train: cluster {int(sizes.argmin())} has no train samples")
    # Cluster id per dataset row (-1 outside the grouping) for loss tracking.
    row_cluster = np.full(len(man), -1, dtype=np.int64)
    row_cluster[grouping.sample_indices] = grouping.assignments
    baseline_probs = sizes / sizes.sum()
    # Uniform over train samples, normalized exactly like sample_batch
    # normalizes its weights so a K=1 debias run reproduces the baseline.
    uniform_weights = np.full(grouping.n_samples, 1.0 / grouping.n_samples)
    uniform_weights = uniform_weights / uniform_weights.sum()

    n_train = len(train_idx)
    steps = math.ceil(n_train / cfg.batch_size)
    milestones = {int(math.floor(frac * cfg.epochs)) for frac in cfg.lr_milestones}

    history = []
    lr = cfg.lr
    best_score = -np.inf
    best_params = {name: p.copy() for name, p in model.params.items()}
    best_epoch = 0
    preds_full = np.zeros(len(man), dtype=np.int64)

    for epoch in range(cfg.epochs):
        if epoch in milestones and epoch > 0:
            lr *= cfg.lr_decay
        probs_used = state.probs if cfg.debias else baseline_probs

        cluster_sums = np.zeros(n_clusters, dtype=np.float64)
        cluster_counts = np.zeros(n_clusters, dtype=np.int64)
        loss_sum = 0.0
        loss_count = 0
        for _ in range(steps):
            if cfg.debias:
                rows = sample_batch(state, grouping, cfg.batch_size, rng_sampler)
            else:
                positions = rng_sampler.choice(
                    grouping.n_samples, size=cfg.batch_size, replace=True, p=uniform_weights
                )
                rows = grouping.sample_indices[positions]
            x = x_all[rows]
            y = y_all[rows]
            if sigma > 0.0:
                x_noisy = x + sigma * rng_jitter.standard_normal(x.shape)
                per_clean = _softmax_per_sample(model.logits(x), y)[0]
                per_noisy, grads = model.loss_and_grads(x_noisy, y)
                if not np.all(np.isfinite(per_noisy)):
                    raise TrainingError(f"train: loss diverged at epoch {epoch}")
            else:
                per_clean, grads = model.loss_and_grads(x, y)
            if not np.all(np.isfinite(per_clean)):
                raise TrainingError(f"train: loss diverged at epoch {epoch}")
            for name, param in model.params.items():
                g = grads[name] + cfg.weight_decay * param
                velocity[name] = cfg.momentum * velocity[name] + g
                param -= lr * velocity[name]
            np.add.at(cluster_sums, row_cluster[rows], per_clean)
            cluster_counts += np.bincount(row_cluster[rows], minlength=n_clusters)
            loss_sum += float(per_clean.sum())
            loss_count += len(rows)

        cluster_means = epoch_cluster_means(cluster_sums, cluster_counts)
        if cfg.debias:
            state = record_epoch_losses(state, cluster_means)
            if len(state.window) == cfg.theta:
                state = update_probs(state)

        for split in ("val",):
            idx = man.split_indices(split)
            if len(idx):
                preds_full[idx] = model.logits(x_all[idx]).argmax(axis=1)
        val_acc, val_unbiased = _validation_metrics(preds_full, ds)
        history.append(EpochRecord(
            epoch=epoch,
            lr=lr,
            train_loss=loss_sum / loss_count,
            cluster_losses=tuple(float(v) for v in cluster_means),
            probs=tuple(float(v) for v in probs_used),
            val_accuracy=val_acc,
            val_unbiased=val_unbiased,
        ))
        score = val_unbiased if val_unbiased is not None else val_acc
        if score is not None and score > best_score:
            best_score = score
            best_params = {name: p.copy() for name, p in model.params.items()}
            best_epoch = epoch

    if not np.isfinite(best_score):
        # No validation split: keep the final weights.
        best_params = {name: p.copy() for name, p in model.params.items()}
        best_epoch = cfg.epochs - 1

    return TrainedModel(
        kind=cfg.model,
        params=best_params,
        input_dim=ds.embeddings.dim,
        n_classes=n_classes,
        hidden_dim=cfg.hidden_dim if cfg.model == "mlp" else None,
        best_epoch=best_epoch,
        jitter_sigma=sigma,
        n_clusters=n_clusters,
        config=cfg,
        history=tuple(history),
    )


_HEADER_NAME = "header.json"


def save_model(model: TrainedModel, directory) -> None:
    """Checkpoint: JSON header plus one embedding-format blob per tensor.

    The blob format stores float32, so weights are quantized on save;
    loading restores exactly the stored float32 values. Two saves of the
    same model are byte-identical.
    """
    os.makedirs(directory, exist_ok=True)
    blobs = {}
    for name, param in sorted(model.params.items()):
        blob = f"{name}.femb"
        matrix = param if param.ndim == 2 else param[None, :]
        write_embeddings(EmbeddingMatrix(matrix.astype(np.float32)), os.path.join(directory, blob))
        blobs[name] = {"file": blob, "shape": list(param.shape)}
    cfg = dataclasses.asdict(model.config)
    cfg["lr_milestones"] = list(cfg["lr_milestones"])
    header = {
        "kind": model.kind,
        "input_dim": model.input_dim,
        "n_classes": model.n_classes,
        "hidden_dim": model.hidden_dim,
        "best_epoch": model.best_epoch,
        "jitter_sigma": model.jitter_sigma,
        "n_clusters": model.n_clusters,
        "train_config": cfg,
        "weights": blobs,
    }
    with open(os.path.join(directory, _HEADER_NAME), "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(directory) -> TrainedModel:
    header_path = os.path.join(directory, _HEADER_NAME)
    try:
        with open(header_path, "r", encoding="utf-8") as fh:
            header = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{directory}: not a model checkpoint (missing {_HEADER_NAME})") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{header_path}: invalid JSON ({exc})") from None
    for key in ("kind", "input_dim", "n_classes", "weights", "train_config"):
        if key not in header:
            raise FormatError(f"{header_path}: missing key '{key}'")
    if header["kind"] not in MODEL_KINDS:
        raise FormatError(f"{header_path}: unknown model kind {header['kind']!r}")
    params = {}
    for name, entry in header["weights"].items():
        blob = load_embeddings(os.path.join(directory, entry["file"]))
        param = blob.values.astype(np.float64)
        shape = tuple(entry["shape"])
        params[name] = param.reshape(shape)
    cfg_dict = dict(header["train_config"])
    cfg_dict["lr_milestones"] = tuple(cfg_dict.get("lr_milestones", (1 / 3, 2 / 3)))
    config = TrainConfig(**cfg_dict)
    return TrainedModel(
        kind=header["kind"],
        params=params,
        input_dim=int(header["input_dim"]),
        n_classes=int(header["n_classes"]),
        hidden_dim=header.get("hidden_dim"),
        best_epoch=int(header.get("best_epoch", 0)),
        jitter_sigma=float(header.get("jitter_sigma", 0.0)),
        n_clusters=int(header.get("n_clusters", 1)),
        config=config,
        history=(),
    )


def save_history(history, path) -> None:
    """Training history as CSV: one row per epoch."""
    history = list(history)
    if not history:
        raise DomainError("save_history: empty history")
    n_clusters = len(history[0].cluster_losses)
    columns = ["epoch", "lr", "train_loss", "val_accuracy", "val_unbiased"]
    columns += [f"p{k}" for k in range(n_clusters)]
    columns += [f"loss_c{k}" for k in range(n_clusters)]
    lines = [",".join(columns)]
    for rec in history:
        row = [str(rec.epoch), repr(rec.lr), repr(rec.train_loss)]
        row.append("" if rec.val_accuracy is None else repr(rec.val_accuracy))
        row.append("" if rec.val_unbiased is None else repr(rec.val_unbiased))
        row += [repr(v) for v in rec.probs]
        row += [repr(v) for v in rec.cluster_losses]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

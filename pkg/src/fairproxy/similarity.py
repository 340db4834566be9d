"""Prompt sets and prompt-image similarity scores.

A score matrix holds the cosine similarity of C prompt vectors against N
image vectors. Scores are float32 like every stored matrix, live in
[-1, 1] (small float slack), and can be cached on disk in the embedding
file format with C rows and N columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingMatrix
from .errors import ConfigError, DataError, DomainError, FormatError

DEFAULT_TEMPLATE = "A photo of a/an {}"

# Tolerated float32 overshoot beyond the exact cosine range.
BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class ScoreMatrix:
    """(C prompts x N samples) float32 similarity scores."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise DomainError(f"score matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"score matrix needs at least one row and one column, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("score matrix contains non-finite values")
        if np.any(np.abs(values) > 1.0 + BOUND_SLACK):
            worst = float(np.abs(values).max())
            raise DataError(f"score matrix entries must lie in [-1, 1], found magnitude {worst}")
        object.__setattr__(self, "values", values)

    @property
    def prompts(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PromptSet:
    """Named attribute with the prompts used to probe it.

    ``attribute_classes`` is the number of attribute groups the prompts
    describe; several prompts may probe the same group (synonyms), so it
    defaults to the number of prompts only when left unset.
    """

    attribute_name: str
    prompts: tuple[str, ...]
    template: str = DEFAULT_TEMPLATE
    attribute_classes: int | None = None

    def __post_init__(self):
        if not self.attribute_name:
            raise ConfigError("prompt set: attribute_name must be non-empty")
        prompts = tuple(self.prompts)
        if len(prompts) < 1:
            raise ConfigError("prompt set: at least one prompt required")
        if any(not p for p in prompts):
            raise ConfigError("prompt set: prompts must be non-empty strings")
        if len(set(prompts)) != len(prompts):
            raise ConfigError("prompt set: prompts must be distinct")
        if self.template.count("{}") != 1:
            raise ConfigError(f"prompt set: template must contain exactly one {{}} placeholder, got {self.template!r}")
        if self.attribute_classes is not None and self.attribute_classes < 1:
            raise ConfigError(f"prompt set: attribute_classes must be >= 1, got {self.attribute_classes}")
        object.__setattr__(self, "prompts", prompts)

    @property
    def n_attribute_classes(self) -> int:
        return self.attribute_classes if self.attribute_classes is not None else len(self.prompts)

    def render(self) -> list[str]:
        """Prompts expanded through the template, in declaration order."""
        return [self.template.format(p) for p in self.prompts]


def load_prompt_set(path) -> PromptSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: prompt set must be a JSON object")
    for key in ("attribute_name", "prompts"):
        if key not in payload:
            raise FormatError(f"{path}: missing key '{key}'")
    prompts = payload["prompts"]
    if not isinstance(prompts, list) or not all(isinstance(p, str) for p in prompts):
        raise FormatError(f"{path}: 'prompts' must be a list of strings")
    kwargs = {}
    if "template" in payload:
        if not isinstance(payload["template"], str):
            raise FormatError(f"{path}: 'template' must be a string")
        kwargs["template"] = payload["template"]
    if "attribute_classes" in payload and payload["attribute_classes"] is not None:
        if not isinstance(payload["attribute_classes"], int):
            raise FormatError(f"{path}: 'attribute_classes' must be an integer")
        kwargs["attribute_classes"] = payload["attribute_classes"]
    return PromptSet(attribute_name=str(payload["attribute_name"]), prompts=tuple(prompts), **kwargs)


def save_prompt_set(pset: PromptSet, path) -> None:
    payload = {
        "attribute_name": pset.attribute_name,
        "template": pset.template,
        "prompts": list(pset.prompts),
        "attribute_classes": pset.attribute_classes,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cosine_similarity(d, m) -> float:
    """Cosine of the angle between two vectors: d.m / (|d| |m|).

    Accumulates in float64 regardless of input dtype.
    """
    d = np.asarray(d, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if d.ndim != 1 or m.ndim != 1:
        raise DomainError("cosine_similarity expects 1-D vectors")
    if d.shape != m.shape:
        raise DomainError(f"dimension mismatch: {d.shape[0]} vs {m.shape[0]}")
    dn = float(np.linalg.norm(d))
    mn = float(np.linalg.norm(m))
    if dn == 0.0 or mn == 0.0:
        raise DomainError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(d, m) / (dn * mn))


def similarity_matrix(texts: EmbeddingMatrix, images: EmbeddingMatrix) -> ScoreMatrix:
    """All-pairs cosine similarity: row c holds prompt c against every image."""
    if texts.dim != images.dim:
        raise DomainError(f"dimension mismatch: texts have D={texts.dim}, images have D={images.dim}")
    t = texts.values.astype(np.float64)
    v = images.values.astype(np.float64)
    tn = np.linalg.norm(t, axis=1)
    vn = np.linalg.norm(v, axis=1)
    for name, norms in (("text", tn), ("image", vn)):
        zero = np.where(norms == 0.0)[0]
        if len(zero):
            raise DomainError(f"{name} embedding row {int(zero[0])} has zero norm")
    scores = (t / tn[:, None]) @ (v / vn[:, None]).T
    return ScoreMatrix(scores.astype(np.float32))


def ensemble_scores(scores: ScoreMatrix) -> ScoreMatrix:
    """Average the prompt rows into a single 1 x N score row."""
    mean = scores.values.astype(np.float64).mean(axis=0, keepdims=True)
    return ScoreMatrix(mean.astype(np.float32))

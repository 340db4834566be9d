"""Embedding backends.

``clip`` and ``blip`` wrap pre-trained vision-language checkpoints through
``transformers``; both are imported lazily so the package works without
torch installed. ``stub`` is a deterministic content-hash backend with no
heavy dependencies, for tests and for exercising the pipeline offline. All
backends return raw (unnormalized) float32 features; normalization is the
job runner's concern.
"""

import hashlib

import numpy as np
from PIL import Image

from .errors import ConfigError, SetupError

_STUB_THUMB = 8        # stub features come from an 8x8 RGB thumbnail


class StubBackend:
    """Deterministic features from pixel/text content, no model involved.

    Identical inputs give identical rows; different inputs give different
    rows with overwhelming probability. Useful only for plumbing.
    """

    name = "stub"

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ConfigError(f"stub backend: dim must be >= 1, got {dim}")
        self.dim = dim
        rng = np.random.default_rng(20240117)
        self._image_proj = rng.standard_normal((_STUB_THUMB * _STUB_THUMB * 3, dim))

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        rows = np.empty((len(images), self.dim), dtype=np.float32)
        for i, img in enumerate(images):
            thumb = img.convert("RGB").resize((_STUB_THUMB, _STUB_THUMB), Image.BILINEAR)
            flat = np.asarray(thumb, dtype=np.float64).reshape(-1) / 255.0
            rows[i] = np.tanh(flat @ self._image_proj).astype(np.float32)
        return rows

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            rows[i] = rng.standard_normal(self.dim).astype(np.float32)
        return rows


class _TransformersBackend:
    """Shared wrapper around transformers dual-encoder checkpoints."""

    def __init__(self, model_id: str, device: str = "cpu"):
        if not model_id:
            raise ConfigError(f"{self.name} backend: --model is required")
        self.model_id = model_id
        self.device = device
        self._model, self._processor, self._torch = self._load()

    def _import(self):
        raise NotImplementedError

    def _load(self):
        try:
            import torch
            model_cls, processor_cls = self._import()
        except ImportError as exc:
            raise SetupError(
                f"{self.name} backend needs torch and transformers "
                f"(pip install 'vlm-extractor[clip]'): {exc}"
            ) from None
        try:
            model = model_cls.from_pretrained(self.model_id)
            processor = processor_cls.from_pretrained(self.model_id)
        except Exception as exc:
            raise SetupError(f"{self.name} backend: cannot load weights for "
                             f"'{self.model_id}': {exc}") from None
        model = model.to(self.device).eval()
        return model, processor, torch

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        torch = self._torch
        batch = self._processor(images=[img.convert("RGB") for img in images],
                                return_tensors="pt").to(self.device)
        with torch.no_grad():
            feats = self._model.get_image_features(**batch)
        return feats.cpu().numpy().astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        batch = self._processor(text=texts, return_tensors="pt",
                                padding=True, truncation=True).to(self.device)
        with torch.no_grad():
            feats = self._model.get_text_features(**batch)
        return feats.cpu().numpy().astype(np.float32)


class ClipBackend(_TransformersBackend):
    name = "clip"

    def _import(self):
        from transformers import CLIPModel, CLIPProcessor

        return CLIPModel, CLIPProcessor


class BlipBackend(_TransformersBackend):
    name = "blip"

    def _import(self):
        from transformers import AutoProcessor, BlipModel

        return BlipModel, AutoProcessor


BACKENDS = ("clip", "blip", "stub")


def make_backend(name: str, model_id: str | None = None, *,
                 dim: int = 64, device: str = "cpu"):
    if name == "stub":
        return StubBackend(dim=dim)
    if name == "clip":
        return ClipBackend(model_id or "", device)
    if name == "blip":
        return BlipBackend(model_id or "", device)
    raise ConfigError(f"unknown backend '{name}', expected one of {', '.join(BACKENDS)}")

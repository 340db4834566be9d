"""Extraction jobs: discover images, encode, write FEMB + manifest stub."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, ImageError
from .femb import write_femb
from .prompts import PromptSet

log = logging.getLogger("vlm_extractor")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp", ".tif", ".tiff"}


@dataclass(frozen=True)
class ExtractJob:
    images: Path                      # directory, or a text file listing paths
    out: Path
    backend: str = "clip"
    model_id: str | None = None
    prompt_file: Path | None = None
    batch_size: int = 32
    device: str = "cpu"
    views: int = 1
    strict: bool = False
    raw_norms: bool = False           # skip L2 normalization on export
    stub_dim: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.views < 1:
            raise ConfigError(f"views must be >= 1, got {self.views}")


def discover_images(source: Path) -> list[Path]:
    """All image files under a directory, or the paths named in a list file.

    Either way the result is sorted by path so output order never depends
    on filesystem iteration order.
    """
    source = Path(source)
    if source.is_dir():
        found = [p for p in source.iterdir()
                 if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    elif source.is_file():
        lines = source.read_text(encoding="utf-8").splitlines()
        found = [Path(line.strip()) for line in lines if line.strip()]
    else:
        raise ConfigError(f"image source {source} is neither a directory nor a list file")
    if not found:
        raise ConfigError(f"no images found in {source}")
    return sorted(found)


def apply_view(img: Image.Image, view: int) -> Image.Image:
    """Deterministic augmentation per view index; view 0 is the original."""
    mode = view % 4
    if mode == 0:
        return img
    if mode == 1:
        return img.transpose(Image.FLIP_LEFT_RIGHT)
    if mode == 2:
        return img.convert("L").convert("RGB")
    return img.transpose(Image.FLIP_LEFT_RIGHT).convert("L").convert("RGB")


def _normalize(rows: np.ndarray, ids: list[str]) -> np.ndarray:
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    dead = np.flatnonzero(norms == 0.0)
    if dead.size:
        raise ImageError(f"cannot L2-normalize zero embedding for '{ids[dead[0]]}'")
    return (rows / norms[:, None]).astype(np.float32)


@dataclass
class ExtractResult:
    ids: list[str]
    skipped: list[str] = field(default_factory=list)
    image_file: Path | None = None
    manifest_file: Path | None = None
    prompt_file: Path | None = None


def extract_image_embeddings(job: ExtractJob, backend) -> ExtractResult:
    """Encode every discovered image (times ``job.views``) to embeddings.femb.

    Undecodable files are skipped with a warning, or abort the job under
    ``strict``. Row order follows the sorted image list, views innermost,
    ids suffixed ``_v0..`` when views > 1.
    """
    paths = discover_images(job.images)
    out = Path(job.out)
    out.mkdir(parents=True, exist_ok=True)

    ids: list[str] = []
    loaded: list[Image.Image] = []
    skipped: list[str] = []
    for path in paths:
        try:
            with Image.open(path) as img:
                pixels = img.convert("RGB")
        except (UnidentifiedImageError, OSError) as exc:
            if job.strict:
                raise ImageError(f"{path}: cannot decode ({exc})") from None
            log.warning("skipping %s: cannot decode (%s)", path, exc)
            skipped.append(str(path))
            continue
        for view in range(job.views):
            ids.append(path.stem if job.views == 1 else f"{path.stem}_v{view}")
            loaded.append(apply_view(pixels, view))
    if not ids:
        raise ConfigError(f"no decodable images in {job.images}")

    chunks = [backend.encode_images(loaded[i:i + job.batch_size])
              for i in range(0, len(loaded), job.batch_size)]
    rows = np.concatenate(chunks, axis=0)
    if not job.raw_norms:
        rows = _normalize(rows, ids)

    image_file = out / "embeddings.femb"
    write_femb(rows, image_file)
    manifest_file = out / "manifest_stub.csv"
    with open(manifest_file, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,split,target,attribute\n")
        for sample_id in ids:
            fh.write(f"{sample_id},,,\n")

    return ExtractResult(ids=ids, skipped=skipped,
                         image_file=image_file, manifest_file=manifest_file)


def extract_text_embeddings(pset: PromptSet, backend, out_path: Path) -> np.ndarray:
    """Encode the rendered prompts to a C x D FEMB file, rows L2-normalized."""
    rendered = pset.render()
    rows = _normalize(backend.encode_texts(rendered), rendered)
    write_femb(rows, out_path)
    return rows


def run_job(job: ExtractJob, backend) -> ExtractResult:
    """Full job: images, optional prompts, and a meta record of the run."""
    result = extract_image_embeddings(job, backend)
    pset = None
    if job.prompt_file is not None:
        from .prompts import load_prompt_set

        pset = load_prompt_set(job.prompt_file)
        result.prompt_file = Path(job.out) / "prompts.femb"
        extract_text_embeddings(pset, backend, result.prompt_file)

    meta = {
        "backend": backend.name,
        "model_id": getattr(backend, "model_id", None),
        "views": job.views,
        "normalized": not job.raw_norms,
        "images": len(result.ids),
        "skipped": result.skipped,
        "prompts": list(pset.prompts) if pset is not None else None,
    }
    with open(Path(job.out) / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result

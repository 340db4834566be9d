"""Batch image/prompt embedding extraction to the FEMB interchange format."""

from .backends import BACKENDS, BlipBackend, ClipBackend, StubBackend, make_backend
from .errors import ConfigError, ExtractorError, ImageError, SetupError
from .femb import FormatError, read_femb, write_femb
from .jobs import (
    ExtractJob,
    ExtractResult,
    apply_view,
    discover_images,
    extract_image_embeddings,
    extract_text_embeddings,
    run_job,
)
from .prompts import DEFAULT_TEMPLATE, PromptSet, load_prompt_set

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "BlipBackend",
    "ClipBackend",
    "ConfigError",
    "DEFAULT_TEMPLATE",
    "ExtractJob",
    "ExtractResult",
    "ExtractorError",
    "FormatError",
    "ImageError",
    "PromptSet",
    "SetupError",
    "StubBackend",
    "apply_view",
    "discover_images",
    "extract_image_embeddings",
    "extract_text_embeddings",
    "load_prompt_set",
    "make_backend",
    "read_femb",
    "run_job",
    "write_femb",
    "__version__",
]

"""Dataset container and the on-disk formats shared across the toolkit.

Two file formats live here.

Embedding file (conventionally ``.femb``): a 20-byte little-endian header
followed by a row-major float32 payload.

    ======  ====  =====================================
    offset  size  field
    ======  ====  =====================================
    0       4     magic bytes ``FEMB``
    4       2     format version, u16, currently 1
    6       1     dtype code, u8, 1 = float32
    7       1     reserved, u8, must be 0
    8       8     row count, u64
    16      4     dimension, u32
    20      ...   rows x dim float32 values, row major
    ======  ====  =====================================

Manifest file: UTF-8 CSV with header ``id,split,target,attribute`` and one
record per line. ``split`` is one of train/val/test, ``target`` is a class
index contiguous from 0 over the whole file, ``attribute`` is an optional
non-negative group index (empty cell = unknown).

Real values are stored as float32 on disk; reductions elsewhere in the
package accumulate in float64 for stability.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError, FormatError

MAGIC = b"FEMB"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sHBBQI")

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense (rows, dim) float32 matrix of row vectors."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise DomainError(f"embedding matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"embedding matrix needs at least one row and one column, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("embedding matrix contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def load_embeddings(path) -> EmbeddingMatrix:
    """Read an embedding file, validating header and payload."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(f"{path}: truncated header ({len(header)} of {_HEADER.size} bytes)")
        magic, version, dtype, reserved, rows, dim = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        if dtype != DTYPE_FLOAT32:
            raise FormatError(f"{path}: unknown dtype code {dtype}")
        if reserved != 0:
            raise FormatError(f"{path}: reserved header byte must be 0, got {reserved}")
        if rows < 1 or dim < 1:
            raise FormatError(f"{path}: header declares empty matrix ({rows} x {dim})")
        payload = fh.read()
    expected = rows * dim * 4
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(values)


def write_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Write an embedding file; load/write round-trips are byte-identical."""
    values = emb.values
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_FLOAT32, 0, values.shape[0], values.shape[1])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


@dataclass(frozen=True)
class Sample:
    id: str
    split: str
    target: int
    attribute: int | None = None


@dataclass
class Manifest:
    """Ordered sample records; immutable by convention after construction.

    Invariants (checked): ids unique, split tokens valid, targets contiguous
    from 0, attributes non-negative when present. Splits partition the
    samples by construction since each record carries exactly one split.
    """

    samples: list[Sample]
    _targets: np.ndarray = field(init=False, repr=False)
    _attributes: np.ndarray = field(init=False, repr=False)
    _split_indices: dict = field(init=False, repr=False)

    def __post_init__(self):
        seen = set()
        for s in self.samples:
            if not s.id:
                raise DataError("manifest: empty sample id")
            if s.id in seen:
                raise DataError(f"manifest: duplicate sample id '{s.id}'")
            seen.add(s.id)
            if s.split not in SPLITS:
                raise FormatError(f"manifest: unknown split token '{s.split}' for sample '{s.id}'")
            if s.target < 0:
                raise DataError(f"manifest: negative target {s.target} for sample '{s.id}'")
            if s.attribute is not None and s.attribute < 0:
                raise DataError(f"manifest: negative attribute {s.attribute} for sample '{s.id}'")
        targets = np.array([s.target for s in self.samples], dtype=np.int64)
        if len(targets):
            present = np.unique(targets)
            if present[0] != 0 or present[-1] != len(present) - 1:
                raise DataError(
                    "manifest: target indices must be contiguous from 0, got "
                    f"{{{', '.join(str(t) for t in present)}}}"
                )
        attributes = np.array(
            [-1 if s.attribute is None else s.attribute for s in self.samples], dtype=np.int64
        )
        splits = {name: [] for name in SPLITS}
        for i, s in enumerate(self.samples):
            splits[s.split].append(i)
        self._targets = targets
        self._attributes = attributes
        self._split_indices = {name: np.array(idx, dtype=np.int64) for name, idx in splits.items()}

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n_classes(self) -> int:
        return int(self._targets.max()) + 1 if len(self._targets) else 0

    def targets(self) -> np.ndarray:
        return self._targets

    def attributes(self) -> np.ndarray:
        """Per-sample attribute group, -1 where unknown."""
        return self._attributes

    def split_indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise DomainError(f"unknown split '{split}', expected one of {SPLITS}")
        return self._split_indices[split]

    def has_full_attributes(self, split: str) -> bool:
        idx = self.split_indices(split)
        return len(idx) > 0 and bool(np.all(self._attributes[idx] >= 0))


def load_manifest(path) -> Manifest:
    """Read a manifest CSV, validating layout and record contracts."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty manifest file")
        fields = list(reader.fieldnames)
        required = ["id", "split", "target"]
        allowed = required + ["attribute"]
        missing = [f for f in required if f not in fields]
        if missing:
            raise FormatError(f"{path}: missing column(s) {missing}")
        extra = [f for f in fields if f not in allowed]
        if extra:
            raise FormatError(f"{path}: unknown column(s) {extra}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            raw_target = row["target"]
            try:
                target = int(raw_target)
            except (TypeError, ValueError):
                raise FormatError(f"{path}:{lineno}: bad target value {raw_target!r}") from None
            raw_attr = row.get("attribute")
            if raw_attr is None or raw_attr == "":
                attribute = None
            else:
                try:
                    attribute = int(raw_attr)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: bad attribute value {raw_attr!r}") from None
            samples.append(Sample(id=row["id"] or "", split=row["split"] or "", target=target, attribute=attribute))
    return Manifest(samples)


def write_manifest(man: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "split", "target", "attribute"])
        for s in man.samples:
            writer.writerow([s.id, s.split, s.target, "" if s.attribute is None else s.attribute])


@dataclass
class Dataset:
    """Embeddings bound to a manifest row-for-row."""

    embeddings: EmbeddingMatrix
    manifest: Manifest

    def __post_init__(self):
        if self.embeddings.rows != len(self.manifest):
            raise DataError(
                f"dataset: embedding rows ({self.embeddings.rows}) != manifest records ({len(self.manifest)})"
            )

    def __len__(self) -> int:
        return len(self.manifest)


def bind_dataset(emb: EmbeddingMatrix, man: Manifest) -> Dataset:
    """Pair an embedding matrix with its manifest (lengths must match)."""
    return Dataset(emb, man)

"""Bit-exact dataset container, manifest handling, and split logic.

One sample per file: a fixed 28-byte little-endian header (magic "SOSD"),
an RF payload of 64-bit floats (row-major by channel), and a ground-truth
payload of 32-bit floats. A JSON manifest lists the sample files together
with the generator provenance needed to regenerate them.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SOSD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHIHHIQ")

FLAG_PREPROCESSED = 1 << 0
FLAG_CORRUPTED = 1 << 1
FLAG_PREDICTION = 1 << 2
FLAG_MASK = 1 << 3

MANIFEST_FORMAT = "sosd-manifest"


class FormatError(ValueError):
    """Container violates the file format contract."""


@dataclass
class SampleRecord:
    rf: np.ndarray    # (n_channels, rx_samples) float64; may be empty
    gt: np.ndarray    # (gt_h, gt_w) float32; may be empty
    flags: int = 0
    seed: int = 0

    def __post_init__(self):
        self.rf = np.ascontiguousarray(self.rf, dtype="<f8")
        self.gt = np.ascontiguousarray(self.gt, dtype="<f4")
        if self.rf.ndim != 2 or self.gt.ndim != 2:
            raise FormatError("rf and gt payloads must be 2D")


def write_sample(record: SampleRecord, path) -> None:
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        record.rf.shape[0],
        record.rf.shape[1],
        record.gt.shape[0],
        record.gt.shape[1],
        record.flags,
        record.seed,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(record.rf.tobytes())
        fh.write(record.gt.tobytes())


def read_sample(path) -> SampleRecord:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n_ch, rx_n, gt_h, gt_w, flags, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    rf_bytes = n_ch * rx_n * 8
    gt_bytes = gt_h * gt_w * 4
    expected = _HEADER.size + rf_bytes + gt_bytes
    if len(data) != expected:
        which = "rf payload" if len(data) < _HEADER.size + rf_bytes else "gt payload"
        raise FormatError(
            f"{path}: size mismatch in {which}: file has {len(data)} bytes, "
            f"header declares {expected}"
        )
    rf = np.frombuffer(data, dtype="<f8", count=n_ch * rx_n, offset=_HEADER.size)
    gt = np.frombuffer(data, dtype="<f4", count=gt_h * gt_w, offset=_HEADER.size + rf_bytes)
    return SampleRecord(
        rf=rf.reshape(n_ch, rx_n).copy(),
        gt=gt.reshape(gt_h, gt_w).copy(),
        flags=flags,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# manifest


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class DatasetManifest:
    config: dict
    samples: list[dict] = field(default_factory=list)

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def add_sample(self, **entry) -> None:
        self.samples.append(entry)

    def to_dict(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "version": 1,
            "config": self.config,
            "config_hash": self.hash,
            "samples": self.samples,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != MANIFEST_FORMAT:
            raise FormatError(f"{path}: not a dataset manifest")
        if doc.get("version") != 1:
            raise FormatError(f"{path}: unsupported manifest version")
        manifest = cls(config=doc["config"], samples=doc["samples"])
        if doc.get("config_hash") != manifest.hash:
            raise FormatError(f"{path}: config hash mismatch")
        return manifest

    def verify_files(self, base_dir) -> None:
        base = Path(base_dir)
        for entry in self.samples:
            path = base / entry["file"]
            if not path.exists():
                raise FormatError(f"manifest lists missing file {entry['file']}")
            read_sample(path)


def _subset(manifest: DatasetManifest, idx) -> DatasetManifest:
    return DatasetManifest(
        config=manifest.config, samples=[manifest.samples[i] for i in idx]
    )


def split_dataset(
    manifest: DatasetManifest, train_frac: float, val_frac: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest, DatasetManifest]:
    """Seeded disjoint train/val/test partition; test takes the remainder."""
    if train_frac < 0 or val_frac < 0 or train_frac + val_frac > 1.0 + 1e-12:
        raise ValueError("fractions must be non-negative and sum to at most 1")
    n = len(manifest.samples)
    order = np.random.default_rng(seed).permutation(n)
    n_train = round(train_frac * n)
    n_val = round(val_frac * n)
    train = np.sort(order[:n_train])
    val = np.sort(order[n_train : n_train + n_val])
    test = np.sort(order[n_train + n_val :])
    return _subset(manifest, train), _subset(manifest, val), _subset(manifest, test)


def holdout_split(
    manifest: DatasetManifest, n_test: int = 150, val_frac: float = 0.10, seed: int = 0
) -> tuple[DatasetManifest, DatasetManifest, DatasetManifest]:
    """Fixed-size test holdout, then a 90/10 train/validation split.

    6150 samples with the defaults yield 5400/600/150.
    """
    n = len(manifest.samples)
    if n_test >= n:
        raise ValueError("test holdout larger than the dataset")
    order = np.random.default_rng(seed).permutation(n)
    test = np.sort(order[:n_test])
    pool = order[n_test:]
    n_val = round(val_frac * pool.size)
    val = np.sort(pool[:n_val])
    train = np.sort(pool[n_val:])
    return _subset(manifest, train), _subset(manifest, val), _subset(manifest, test)

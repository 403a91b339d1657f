"""Versioned binary checkpoints.

Layout (all integers little-endian)::

    b"DISFL" | u16 version | u32 header length | UTF-8 JSON header | tensors

Tensors are float32, little-endian, row-major, in the order listed under
``"tensors"`` in the header. Models keep float64 parameters in memory; a
:class:`Checkpoint` always holds float32-representable values so that a
save/load round trip is bitwise exact.
"""
from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureSchema, LmFeaturizer, NGramModel, Vocab
from .model import Model, ModelConfig

MAGIC = b"DISFL"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<5sHI")


class CheckpointError(Exception):
    code = "checkpoint_error"


class NotACheckpointError(CheckpointError):
    code = "not_a_checkpoint"


class UnsupportedVersionError(CheckpointError):
    code = "unsupported_version"


class TruncatedCheckpointError(CheckpointError):
    code = "truncated"


class CorruptCheckpointError(CheckpointError):
    code = "corrupt"


@dataclass
class Checkpoint:
    model: Model
    history: list = field(default_factory=list)  # dicts: epoch, train_loss, dev_f
    train_config: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.model.params = round_to_float32(self.model.params)

    @property
    def best_dev_f(self) -> float | None:
        return max((h["dev_f"] for h in self.history), default=None)


def round_to_float32(params: dict) -> dict:
    return {k: np.asarray(v, dtype=np.float32).astype(np.float64) for k, v in params.items()}


def _lm_to_dict(lm: LmFeaturizer | None):
    if lm is None:
        return None
    m = lm.lm
    return {
        "bins": lm.bins,
        "edges": None if lm.edges is None else lm.edges.tolist(),
        "k": m.k,
        "uniform": m.uniform,
        "vocab": sorted(m.vocab),
        "unigrams": sorted([w, c] for w, c in m.unigrams.items()),
        "bigrams": sorted([a, b, c] for (a, b), c in m.bigrams.items()),
        "context": sorted([w, c] for w, c in m.context.items()),
    }


def _lm_from_dict(d):
    if d is None:
        return None
    m = NGramModel(d["k"])
    m.uniform = d["uniform"]
    m.vocab = set(d["vocab"])
    m.unigrams = Counter({w: c for w, c in d["unigrams"]})
    m.bigrams = Counter({(a, b): c for a, b, c in d["bigrams"]})
    m.context = Counter({w: c for w, c in d["context"]})
    lm = LmFeaturizer(m, d["bins"])
    lm.edges = None if d["edges"] is None else np.array(d["edges"])
    return lm


def to_bytes(ckpt: Checkpoint) -> bytes:
    m = ckpt.model
    names = sorted(m.params)
    header = {
        "config": m.config.to_dict(),
        "schema": m.schema.to_dict(),
        "words": m.words.itos,
        "words_min_count": m.words.min_count,
        "tags": m.tags.itos,
        "lm": _lm_to_dict(m.lm),
        "history": ckpt.history,
        "train_config": ckpt.train_config,
        "notes": ckpt.notes,
        "tensors": [[n, list(m.params[n].shape)] for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(blob)), blob]
    for n in names:
        parts.append(np.ascontiguousarray(m.params[n], dtype="<f4").tobytes())
    return b"".join(parts)


def from_bytes(data: bytes) -> Checkpoint:
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise NotACheckpointError("not a checkpoint (bad magic bytes)")
    if len(data) < _PREFIX.size:
        raise TruncatedCheckpointError("truncated checkpoint header")
    _, version, hlen = _PREFIX.unpack_from(data)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported version {version} (this build reads version {FORMAT_VERSION})")
    pos = _PREFIX.size
    if len(data) < pos + hlen:
        raise TruncatedCheckpointError("truncated checkpoint header")
    try:
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"unreadable checkpoint header: {exc}") from None
    pos += hlen
    params = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if len(data) < pos + nbytes:
            raise TruncatedCheckpointError(f"truncated checkpoint: tensor {name!r} is incomplete")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).reshape(shape)
        params[name] = arr.astype(np.float64)
        pos += nbytes
    if pos != len(data):
        raise CorruptCheckpointError(f"{len(data) - pos} trailing bytes after the last tensor")
    cfg = ModelConfig(**header["config"])
    words = Vocab(header["words"][2:], header["words_min_count"])
    tags = Vocab(header["tags"][2:])
    model = Model(cfg, FeatureSchema.from_dict(header["schema"]), words, tags, params,
                  _lm_from_dict(header["lm"]))
    return Checkpoint(model, header["history"], header["train_config"], header.get("notes", {}))


def save(ckpt: Checkpoint, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(ckpt))


def load_checkpoint(path: str | Path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())


def load(path: str | Path) -> Model:
    return load_checkpoint(path).model

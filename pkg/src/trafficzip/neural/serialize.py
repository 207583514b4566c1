"""Predictor model container: self-describing binary weights file.

Layout: magic ``TZPM``, format version byte, length-prefixed JSON
architecture descriptor, weight count, then per weight (sorted by name) the
name, shape, and little-endian float32 data, and finally a SHA-256 over the
canonical weight bytes. The checksum is the identity the codec uses to make
sure encoder and decoder run the same model.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelError
from .arch import ArchDescriptor, check_shapes

MAGIC = b"TZPM"
VERSION = 1


def canonical_weight_bytes(weights: dict[str, np.ndarray]) -> bytes:
    parts = []
    for name in sorted(weights):
        arr = np.ascontiguousarray(weights[name], dtype="<f4")
        parts.append(name.encode())
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def weights_checksum(weights: dict[str, np.ndarray]) -> str:
    return hashlib.sha256(canonical_weight_bytes(weights)).hexdigest()


@dataclass
class PredictorModel:
    """Architecture plus float32 weights; shared verbatim by both codec sides."""

    arch: ArchDescriptor
    weights: dict[str, np.ndarray]
    checksum: str = ""
    history: dict = field(default_factory=dict, compare=False)  # not serialized

    def __post_init__(self):
        self.weights = {
            k: np.ascontiguousarray(v, dtype="<f4") for k, v in self.weights.items()
        }
        check_shapes(self.arch, self.weights)
        digest = weights_checksum(self.weights)
        if self.checksum and self.checksum != digest:
            raise ModelError("stated checksum does not match the weights")
        self.checksum = digest

    @property
    def model_id(self) -> str:
        return f"{self.arch.kind}-{self.checksum[:12]}"

    def num_parameters(self) -> int:
        return sum(int(w.size) for w in self.weights.values())

    def to_bytes(self) -> bytes:
        arch_json = json.dumps(self.arch.to_dict(), sort_keys=True).encode()
        out = [MAGIC, struct.pack("<B", VERSION)]
        out.append(struct.pack("<I", len(arch_json)))
        out.append(arch_json)
        out.append(struct.pack("<I", len(self.weights)))
        for name in sorted(self.weights):
            arr = self.weights[name]
            name_b = name.encode()
            out.append(struct.pack("<H", len(name_b)))
            out.append(name_b)
            out.append(struct.pack("<B", arr.ndim))
            out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
            out.append(arr.tobytes())
        out.append(bytes.fromhex(self.checksum))
        return b"".join(out)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "PredictorModel":
        view = memoryview(data)
        if bytes(view[:4]) != MAGIC:
            raise ModelError("not a predictor model file (bad magic)")
        if view[4] != VERSION:
            raise ModelError(f"unsupported model format version {view[4]}")
        pos = 5
        (arch_len,) = struct.unpack_from("<I", view, pos)
        pos += 4
        try:
            arch = ArchDescriptor.from_dict(json.loads(bytes(view[pos : pos + arch_len])))
        except (ValueError, KeyError) as exc:
            raise ModelError(f"bad architecture descriptor: {exc}") from exc
        pos += arch_len
        (count,) = struct.unpack_from("<I", view, pos)
        pos += 4
        weights = {}
        try:
            for _ in range(count):
                (name_len,) = struct.unpack_from("<H", view, pos)
                pos += 2
                name = bytes(view[pos : pos + name_len]).decode()
                pos += name_len
                ndim = view[pos]
                pos += 1
                shape = struct.unpack_from(f"<{ndim}I", view, pos)
                pos += 4 * ndim
                size = int(np.prod(shape)) if ndim else 1
                arr = np.frombuffer(view, dtype="<f4", count=size, offset=pos)
                pos += 4 * size
                weights[name] = arr.reshape(shape).copy()
        except (struct.error, ValueError, IndexError) as exc:
            raise ModelError(f"truncated model file: {exc}") from exc
        stored = bytes(view[pos : pos + 32]).hex()
        if len(stored) != 64:
            raise ModelError("truncated model file: missing checksum")
        model = cls(arch=arch, weights=weights)
        if model.checksum != stored:
            raise ModelError("model checksum mismatch: file corrupted")
        return model

    @classmethod
    def load(cls, path) -> "PredictorModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

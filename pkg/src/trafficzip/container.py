"""The compressed container file.

Layout: magic ``ATOM``, version byte, fixed header, model section, quantizer
section, then the payload streams (one interleaved stream network-wide, one
stream per link with an offset index in the single-link scenario). The header
pins everything the decoder needs to replay the exact PMF schedule: scenario,
window, alphabet and quantizer parameters, topology and link-order hashes,
and the model identity (or, for the static baseline, its full histograms, so
those containers decode self-contained).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .alphabet import AffineQuantizer, DictQuantizer, SymbolAlphabet
from .errors import ContainerError

MAGIC = b"ATOM"
VERSION = 1

_SCENARIOS = ("single-link", "network-wide")
_MODEL_KINDS = ("uniform", "static", "adaptive", "rnn", "stgnn")
_SCOPES = ("single-link", "network-wide")

FLAG_EMBEDDED_MODEL = 0x01


@dataclass
class Container:
    scenario: str
    window: int
    alphabet: SymbolAlphabet
    num_bins: int
    num_links: int
    bin_duration: float
    topo_hash: bytes
    order_hash: bytes
    model_kind: str
    payloads: list[bytes]
    model_scope: str | None = None  # static/adaptive baselines
    static_histograms: np.ndarray | None = None
    model_id: str = ""
    model_checksum: str = ""  # hex, neural models
    embedded_model: bytes | None = None

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ContainerError(f"unknown scenario {self.scenario!r}")
        if self.model_kind not in _MODEL_KINDS:
            raise ContainerError(f"unknown model kind {self.model_kind!r}")
        expected = 1 if self.scenario == "network-wide" else self.num_links
        if len(self.payloads) != expected:
            raise ContainerError(
                f"{self.scenario} container needs {expected} payload streams, "
                f"got {len(self.payloads)}"
            )
        if len(self.topo_hash) != 32 or len(self.order_hash) != 32:
            raise ContainerError("hashes must be 32 bytes")

    def total_bytes(self) -> int:
        return len(self.to_bytes())

    def payload_bytes(self) -> int:
        return sum(len(p) for p in self.payloads)

    def to_bytes(self) -> bytes:
        out = [MAGIC, struct.pack("<B", VERSION)]
        flags = FLAG_EMBEDDED_MODEL if self.embedded_model is not None else 0
        out.append(struct.pack("<B", flags))
        out.append(struct.pack("<B", _SCENARIOS.index(self.scenario)))
        out.append(struct.pack("<H", self.window))
        out.append(struct.pack("<I", self.alphabet.size))
        out.append(struct.pack("<Q", self.num_bins))
        out.append(struct.pack("<I", self.num_links))
        out.append(struct.pack("<d", self.bin_duration))
        out.append(self.topo_hash)
        out.append(self.order_hash)

        out.append(struct.pack("<B", _MODEL_KINDS.index(self.model_kind)))
        if self.model_kind in ("static", "adaptive"):
            if self.model_scope not in _SCOPES:
                raise ContainerError("baseline container needs a model scope")
            out.append(struct.pack("<B", _SCOPES.index(self.model_scope)))
            if self.model_kind == "static":
                hist = np.ascontiguousarray(self.static_histograms, dtype="<u4")
                if hist.ndim != 2 or hist.shape[1] != self.alphabet.size:
                    raise ContainerError("static histograms must be (n, alphabet_size)")
                out.append(struct.pack("<I", hist.shape[0]))
                out.append(hist.tobytes())
        elif self.model_kind in ("rnn", "stgnn"):
            ident = self.model_id.encode()
            out.append(struct.pack("<B", len(ident)))
            out.append(ident)
            digest = bytes.fromhex(self.model_checksum)
            if len(digest) != 32:
                raise ContainerError("neural container needs a 32-byte model checksum")
            out.append(digest)
            if self.embedded_model is not None:
                out.append(struct.pack("<Q", len(self.embedded_model)))
                out.append(self.embedded_model)

        quant = self.alphabet.quantizer
        if isinstance(quant, AffineQuantizer):
            out.append(struct.pack("<B", 0))
            out.append(struct.pack("<dd", quant.lo, quant.hi))
        elif isinstance(quant, DictQuantizer):
            out.append(struct.pack("<B", 1))
            out.append(struct.pack("<I", quant.size))
            out.append(np.asarray(quant.values, dtype="<f8").tobytes())
        else:
            raise ContainerError(f"unknown quantizer type {type(quant).__name__}")

        out.append(struct.pack("<I", len(self.payloads)))
        for payload in self.payloads:
            out.append(struct.pack("<Q", len(payload)))
        out.extend(self.payloads)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        try:
            return cls._parse(data)
        except (struct.error, ValueError, IndexError) as exc:
            raise ContainerError(f"malformed container: {exc}") from exc

    @classmethod
    def _parse(cls, data: bytes) -> "Container":
        view = memoryview(data)
        if bytes(view[:4]) != MAGIC:
            raise ContainerError("not a compressed container (bad magic)")
        if view[4] != VERSION:
            raise ContainerError(f"unsupported container version {view[4]}")
        flags = view[5]
        scenario = _SCENARIOS[view[6]]
        pos = 7
        (window,) = struct.unpack_from("<H", view, pos)
        pos += 2
        (alphabet_size,) = struct.unpack_from("<I", view, pos)
        pos += 4
        (num_bins,) = struct.unpack_from("<Q", view, pos)
        pos += 8
        (num_links,) = struct.unpack_from("<I", view, pos)
        pos += 4
        (bin_duration,) = struct.unpack_from("<d", view, pos)
        pos += 8
        topo_hash = bytes(view[pos : pos + 32])
        pos += 32
        order_hash = bytes(view[pos : pos + 32])
        pos += 32

        model_kind = _MODEL_KINDS[view[pos]]
        pos += 1
        model_scope = None
        static_histograms = None
        model_id = ""
        model_checksum = ""
        embedded_model = None
        if model_kind in ("static", "adaptive"):
            model_scope = _SCOPES[view[pos]]
            pos += 1
            if model_kind == "static":
                (hist_rows,) = struct.unpack_from("<I", view, pos)
                pos += 4
                count = hist_rows * alphabet_size
                static_histograms = (
                    np.frombuffer(view, dtype="<u4", count=count, offset=pos)
                    .reshape(hist_rows, alphabet_size)
                    .astype(np.int64)
                )
                pos += 4 * count
        elif model_kind in ("rnn", "stgnn"):
            id_len = view[pos]
            pos += 1
            model_id = bytes(view[pos : pos + id_len]).decode()
            pos += id_len
            model_checksum = bytes(view[pos : pos + 32]).hex()
            pos += 32
            if flags & FLAG_EMBEDDED_MODEL:
                (blob_len,) = struct.unpack_from("<Q", view, pos)
                pos += 8
                embedded_model = bytes(view[pos : pos + blob_len])
                if len(embedded_model) != blob_len:
                    raise ContainerError("embedded model truncated")
                pos += blob_len

        quant_kind = view[pos]
        pos += 1
        if quant_kind == 0:
            lo, hi = struct.unpack_from("<dd", view, pos)
            pos += 16
            quantizer = AffineQuantizer(lo=lo, hi=hi, size=alphabet_size)
        elif quant_kind == 1:
            (n_values,) = struct.unpack_from("<I", view, pos)
            pos += 4
            values = np.frombuffer(view, dtype="<f8", count=n_values, offset=pos)
            pos += 8 * n_values
            quantizer = DictQuantizer(values=tuple(float(v) for v in values))
        else:
            raise ContainerError(f"unknown quantizer kind {quant_kind}")
        alphabet = SymbolAlphabet(size=alphabet_size, quantizer=quantizer)

        (stream_count,) = struct.unpack_from("<I", view, pos)
        pos += 4
        lengths = []
        for _ in range(stream_count):
            (length,) = struct.unpack_from("<Q", view, pos)
            pos += 8
            lengths.append(length)
        payloads = []
        for length in lengths:
            blob = bytes(view[pos : pos + length])
            if len(blob) != length:
                raise ContainerError(
                    f"payload truncated: declared {length} bytes, got {len(blob)}"
                )
            pos += length
            payloads.append(blob)

        return cls(
            scenario=scenario,
            window=window,
            alphabet=alphabet,
            num_bins=num_bins,
            num_links=num_links,
            bin_duration=bin_duration,
            topo_hash=topo_hash,
            order_hash=order_hash,
            model_kind=model_kind,
            payloads=payloads,
            model_scope=model_scope,
            static_histograms=static_histograms,
            model_id=model_id,
            model_checksum=model_checksum,
            embedded_model=embedded_model,
        )

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Container":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

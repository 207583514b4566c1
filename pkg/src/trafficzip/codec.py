"""Sliding-window compression and decompression for both scenarios.

The first w bins are coded under the uniform distribution (the predictor has
no context yet); every later bin is model-coded. Network-wide coding walks
the links of each bin in canonical order and grows the known-mask as it goes,
so link j+1 is predicted conditioned on the already-coded values of links
0..j - the decoder replays the identical schedule with decoded symbols.
Single-link coding runs one independent stream per link, so any link can be
extracted without touching the others.

Compression is implemented on top of the streaming state machine, which is
what makes offline and bin-by-bin streaming output byte-identical.
"""

from __future__ import annotations

import time

import numpy as np

from .alphabet import SymbolAlphabet
from .coder import Decoder, Encoder, uniform_pmf
from .container import Container
from .errors import (
    ChecksumMismatchError,
    CodecError,
    ContainerError,
    DecodeError,
    EndOfStreamError,
)
from .models import AdaptiveModel, ModelContext, StaticModel, UniformModel
from .neural.predictors import RnnPredictor, StgnnPredictor
from .neural.serialize import PredictorModel
from .tensor import TrafficTensor
from .topology import LinkGraph, Topology, build_link_graph

SCENARIOS = ("single-link", "network-wide")


def _model_kind(model) -> str:
    kind = getattr(model, "kind", None)
    if kind not in ("uniform", "static", "adaptive", "rnn", "stgnn"):
        raise CodecError(f"unsupported model type {type(model).__name__}")
    return kind


def check_model_scenario(model, scenario: str) -> None:
    kind = _model_kind(model)
    if scenario not in SCENARIOS:
        raise CodecError(f"unknown scenario {scenario!r}")
    if kind == "rnn" and scenario != "single-link":
        raise CodecError("the recurrent predictor codes the single-link scenario only")
    if kind == "stgnn" and scenario != "network-wide":
        raise CodecError("the graph predictor codes the network-wide scenario only")
    if kind in ("static", "adaptive") and model.scope != scenario:
        raise CodecError(f"{kind} model has scope {model.scope!r}, scenario is {scenario!r}")


def _model_window(model, window: int | None) -> int:
    arch = getattr(model, "arch", None)
    if arch is not None:
        if window is not None and window != arch.window:
            raise CodecError(
                f"window {window} conflicts with the model architecture ({arch.window})"
            )
        return arch.window
    return 12 if window is None else window


class StreamingCompressor:
    """Feeds one time bin at a time; byte output equals offline compression.

    ``trace``, when given, receives one dict per model-coded symbol with the
    bin, link, mask/known snapshot, and the quantized PMF used - the hook the
    schedule-equality and mask-schedule tests key on.
    """

    def __init__(
        self,
        topology: Topology,
        model,
        scenario: str,
        alphabet: SymbolAlphabet,
        window: int | None = None,
        bin_duration: float = 300.0,
        embed_model: bool = False,
        trace: list | None = None,
    ):
        check_model_scenario(model, scenario)
        self.topology = topology
        self.model = model
        self.scenario = scenario
        self.alphabet = alphabet
        self.window = _model_window(model, window)
        self.bin_duration = bin_duration
        self.embed_model = embed_model
        self.trace = trace
        self.num_links = topology.num_links
        arch = getattr(model, "arch", None)
        if arch is not None and arch.alphabet_size != alphabet.size:
            raise CodecError("model alphabet size does not match the data alphabet")
        if self.window < 1:
            raise CodecError("window must be >= 1")

        self.link_graph: LinkGraph = build_link_graph(topology)
        if isinstance(model, StgnnPredictor) and model.link_graph != self.link_graph:
            raise CodecError("model link graph does not match the topology")
        self._uniform = uniform_pmf(alphabet.size)
        self._history: list[np.ndarray] = []  # last w bins
        self._bins_seen = 0
        self.bin_seconds: list[float] = []
        if scenario == "network-wide":
            self._encoders = [Encoder()]
        else:
            self._encoders = [Encoder() for _ in range(self.num_links)]

    def _flushed(self) -> int:
        return sum(e.bytes_flushed() for e in self._encoders)

    def push_bin(self, values) -> int:
        """Code one bin; returns the bytes newly flushed to the payloads."""
        values = np.asarray(values)
        if values.shape != (self.num_links,):
            raise CodecError(
                f"bin has arity {values.shape}, topology has {self.num_links} links"
            )
        if values.min() < 0 or values.max() >= self.alphabet.size:
            raise CodecError("bin values outside the alphabet")
        values = values.astype(np.int32)
        before = self._flushed()
        start = time.perf_counter()

        t = self._bins_seen
        if t < self.window:
            if self.scenario == "network-wide":
                enc = self._encoders[0]
                for j in range(self.num_links):
                    enc.encode(self._uniform, int(values[j]))
            else:
                for j in range(self.num_links):
                    self._encoders[j].encode(self._uniform, int(values[j]))
        else:
            window = np.stack(self._history)
            if self.scenario == "network-wide":
                enc = self._encoders[0]
                mask = np.zeros(self.num_links, dtype=bool)
                known = np.zeros(self.num_links, dtype=np.int32)
                for j in range(self.num_links):
                    ctx = ModelContext(
                        window=window,
                        target_link=j,
                        mask=mask.copy(),
                        known=known.copy(),
                        link_graph=self.link_graph,
                    )
                    pmf = self.model.predict_pmf(ctx)
                    enc.encode(pmf, int(values[j]))
                    if self.trace is not None:
                        self.trace.append(
                            {"bin": t, "link": j, "mask": ctx.mask, "known": ctx.known, "pmf": pmf}
                        )
                    mask[j] = True
                    known[j] = values[j]
            else:
                for j in range(self.num_links):
                    ctx = ModelContext(window=window, target_link=j, link_graph=self.link_graph)
                    pmf = self.model.predict_pmf(ctx)
                    self._encoders[j].encode(pmf, int(values[j]))
                    if self.trace is not None:
                        self.trace.append({"bin": t, "link": j, "pmf": pmf})

        self._history.append(values)
        if len(self._history) > self.window:
            self._history.pop(0)
        self._bins_seen += 1
        self.bin_seconds.append(time.perf_counter() - start)
        return self._flushed() - before

    def finish(self) -> Container:
        if self._bins_seen <= self.window:
            raise CodecError(
                f"nothing beyond the uniform bootstrap: need more than w={self.window} "
                f"bins, saw {self._bins_seen}"
            )
        payloads = [enc.finish() for enc in self._encoders]
        kind = _model_kind(self.model)
        fields = dict(
            scenario=self.scenario,
            window=self.window,
            alphabet=self.alphabet,
            num_bins=self._bins_seen,
            num_links=self.num_links,
            bin_duration=self.bin_duration,
            topo_hash=self.topology.topology_hash(),
            order_hash=self.topology.link_order_hash(),
            model_kind=kind,
            payloads=payloads,
        )
        if kind in ("static", "adaptive"):
            fields["model_scope"] = self.model.scope
            if kind == "static":
                fields["static_histograms"] = self.model.histograms
        elif kind in ("rnn", "stgnn"):
            pm = self.model.model
            fields["model_id"] = pm.model_id
            fields["model_checksum"] = pm.checksum
            if self.embed_model:
                fields["embedded_model"] = pm.to_bytes()
        return Container(**fields)


def compress(
    tensor: TrafficTensor,
    topology: Topology,
    model,
    scenario: str,
    window: int | None = None,
    embed_model: bool = False,
    trace: list | None = None,
) -> Container:
    if tensor.num_links != topology.num_links:
        raise CodecError(
            f"tensor has {tensor.num_links} links, topology {topology.num_links}"
        )
    stream = StreamingCompressor(
        topology,
        model,
        scenario,
        tensor.alphabet,
        window=window,
        bin_duration=tensor.bin_duration,
        embed_model=embed_model,
        trace=trace,
    )
    if tensor.num_bins <= stream.window:
        raise CodecError(
            f"nothing beyond the uniform bootstrap: T={tensor.num_bins} <= w={stream.window}"
        )
    for t in range(tensor.num_bins):
        stream.push_bin(tensor.data[t])
    return stream.finish()


def _resolve_decode_model(container: Container, model):
    """Build the predict_pmf model the decoder drives, verifying identity."""
    kind = container.model_kind
    size = container.alphabet.size
    if kind == "uniform":
        return UniformModel(size)
    if kind == "adaptive":
        return AdaptiveModel(size, container.model_scope)
    if kind == "static":
        return StaticModel(
            num_symbols=size,
            scope=container.model_scope,
            histograms=container.static_histograms,
        )
    pm = model
    if isinstance(pm, (RnnPredictor, StgnnPredictor)):
        pm = pm.model
    if pm is None:
        if container.embedded_model is None:
            raise ContainerError(
                "container references a model by checksum; pass the model file"
            )
        pm = PredictorModel.from_bytes(container.embedded_model)
    if not isinstance(pm, PredictorModel):
        raise CodecError(f"expected a predictor model, got {type(pm).__name__}")
    if pm.checksum != container.model_checksum:
        raise ChecksumMismatchError(
            f"model checksum {pm.checksum[:12]} does not match the container "
            f"({container.model_checksum[:12]}); refusing to decode"
        )
    if pm.arch.kind != kind:
        raise ChecksumMismatchError(
            f"container was coded with a {kind} model, got {pm.arch.kind}"
        )
    return pm


def decompress(
    container: Container,
    topology: Topology,
    model=None,
    trace: list | None = None,
) -> TrafficTensor:
    """Exact inverse of compress, given the same topology and model."""
    if container.topo_hash != topology.topology_hash():
        raise ChecksumMismatchError("topology hash does not match the container")
    if container.order_hash != topology.link_order_hash():
        raise ChecksumMismatchError("link-order hash does not match the container")
    if container.num_links != topology.num_links:
        raise ChecksumMismatchError("link count does not match the container")

    decode_model = _resolve_decode_model(container, model)
    if isinstance(decode_model, PredictorModel):
        if decode_model.arch.kind == "rnn":
            decode_model = RnnPredictor(decode_model)
        else:
            decode_model = StgnnPredictor(decode_model, build_link_graph(topology))
    check_model_scenario(decode_model, container.scenario)

    w = container.window
    num_bins = container.num_bins
    num_links = container.num_links
    total = num_bins * num_links
    link_graph = build_link_graph(topology)
    uniform = uniform_pmf(container.alphabet.size)
    out = np.zeros((num_bins, num_links), dtype=np.int32)

    if container.scenario == "network-wide":
        decoders = [Decoder(container.payloads[0], symbol_limit=total)]
    else:
        decoders = [
            Decoder(container.payloads[j], symbol_limit=num_bins)
            for j in range(num_links)
        ]

    for t in range(num_bins):
        try:
            if t < w:
                if container.scenario == "network-wide":
                    for j in range(num_links):
                        out[t, j] = decoders[0].decode(uniform)
                else:
                    for j in range(num_links):
                        out[t, j] = decoders[j].decode(uniform)
                continue
            window = out[t - w : t]
            if container.scenario == "network-wide":
                mask = np.zeros(num_links, dtype=bool)
                known = np.zeros(num_links, dtype=np.int32)
                for j in range(num_links):
                    ctx = ModelContext(
                        window=window,
                        target_link=j,
                        mask=mask.copy(),
                        known=known.copy(),
                        link_graph=link_graph,
                    )
                    pmf = decode_model.predict_pmf(ctx)
                    symbol = decoders[0].decode(pmf)
                    out[t, j] = symbol
                    if trace is not None:
                        trace.append(
                            {"bin": t, "link": j, "mask": ctx.mask, "known": ctx.known, "pmf": pmf}
                        )
                    mask[j] = True
                    known[j] = symbol
            else:
                for j in range(num_links):
                    ctx = ModelContext(window=window, target_link=j, link_graph=link_graph)
                    pmf = decode_model.predict_pmf(ctx)
                    out[t, j] = decoders[j].decode(pmf)
                    if trace is not None:
                        trace.append({"bin": t, "link": j, "pmf": pmf})
        except EndOfStreamError as exc:
            raise DecodeError(
                f"payload exhausted at bin {t}: {exc}", time_bin=t
            ) from exc

    return TrafficTensor(
        data=out, alphabet=container.alphabet, bin_duration=container.bin_duration
    )


def extract_link(container: Container, topology: Topology, model, link: int) -> np.ndarray:
    """Decode a single link's column from a single-link container.

    Works because every single-link model reads only the target link's
    history, so the other columns of the context can be zero-filled without
    changing the PMF schedule.
    """
    if container.scenario != "single-link":
        raise CodecError("per-link extraction needs a single-link container")
    if not 0 <= link < container.num_links:
        raise CodecError(f"link {link} out of range")
    if container.topo_hash != topology.topology_hash():
        raise ChecksumMismatchError("topology hash does not match the container")

    decode_model = _resolve_decode_model(container, model)
    if isinstance(decode_model, PredictorModel):
        decode_model = RnnPredictor(decode_model)
    check_model_scenario(decode_model, "single-link")

    w = container.window
    num_bins = container.num_bins
    uniform = uniform_pmf(container.alphabet.size)
    dec = Decoder(container.payloads[link], symbol_limit=num_bins)
    column = np.zeros(num_bins, dtype=np.int32)
    window = np.zeros((w, container.num_links), dtype=np.int32)
    for t in range(num_bins):
        if t < w:
            column[t] = dec.decode(uniform)
            continue
        window[:, link] = column[t - w : t]
        ctx = ModelContext(window=window, target_link=link)
        column[t] = dec.decode(decode_model.predict_pmf(ctx))
    return column


def compression_ratio(raw_bytes: int, compressed_bytes: int) -> float:
    if compressed_bytes <= 0:
        raise CodecError("compressed size must be positive")
    return raw_bytes / compressed_bytes

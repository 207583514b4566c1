"""Benchmark harness: learned codecs against the classic baselines.

Every compression ratio is recomputed from artifact sizes on disk, never
cached across configuration changes. Cells of the synthetic grid persist one
JSON record file each, so an interrupted run resumes where it stopped.
"""

from __future__ import annotations

import json
import multiprocessing
import os
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .codec import StreamingCompressor, compress, compression_ratio
from .models import AdaptiveModel, fit_static
from .neural.arch import ArchDescriptor
from .neural.predictors import RnnPredictor, StgnnPredictor
from .neural.serialize import PredictorModel
from .neural.training import TrainConfig, train_predictor
from .synth import LEVELS, SynthConfig, generate
from .tensor import TrafficTensor, pack_symbols, tensor_to_csv_bytes
from .topologies import BUILTIN
from .topology import Topology, build_link_graph

GRID_LEVELS = LEVELS  # (0, 30, 60, 100)


def deflate(data: bytes, level: int = 9) -> bytes:
    """Raw DEFLATE at maximum compression (no container wrapper)."""
    comp = zlib.compressobj(level=level, wbits=-15)
    return comp.compress(data) + comp.flush()


def per_bin_deflate_sizes(tensor: TrafficTensor) -> tuple[int, int]:
    """Compress every time bin independently; returns (raw, compressed) bytes."""
    bits = tensor.alphabet.bits_per_symbol
    raw_total = 0
    comp_total = 0
    for t in range(tensor.num_bins):
        row = TrafficTensor(
            data=tensor.data[t : t + 1], alphabet=tensor.alphabet,
            bin_duration=tensor.bin_duration,
        )
        blob = pack_symbols(row)
        raw_total += len(blob)
        comp_total += len(deflate(blob))
    _ = bits
    return raw_total, comp_total


@dataclass
class BenchRecord:
    dataset: str
    method: str
    scenario: str
    raw_bytes: int
    compressed_bytes: int
    compression_ratio: float
    model_size_bytes: int = 0
    mean_bin_seconds: float = 0.0
    median_bin_seconds: float = 0.0
    spatial: int = -1
    temporal: int = -1
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BenchRecord":
        return cls(**json.loads(text))

    def key_values(self) -> str:
        parts = [
            f"dataset={self.dataset}",
            f"method={self.method}",
            f"scenario={self.scenario}",
            f"raw_bytes={self.raw_bytes}",
            f"compressed_bytes={self.compressed_bytes}",
            f"compression_ratio={self.compression_ratio:.4f}",
            f"model_size_bytes={self.model_size_bytes}",
            f"mean_bin_seconds={self.mean_bin_seconds:.4f}",
            f"median_bin_seconds={self.median_bin_seconds:.4f}",
        ]
        if self.spatial >= 0:
            parts.append(f"spatial={self.spatial}")
            parts.append(f"temporal={self.temporal}")
        parts.append(f"seed={self.seed}")
        return " ".join(parts)


def improvement_pct(cr_a: float, cr_b: float) -> float:
    return (cr_a / cr_b - 1.0) * 100.0


def _file_size(path: Path) -> int:
    return os.stat(path).st_size


def _write(path: Path, data: bytes) -> int:
    path.write_bytes(data)
    return _file_size(path)


def deflate_records(
    tensor: TrafficTensor, topology: Topology, dataset: str, out_dir: Path,
    scenario: str = "network-wide", **tags,
) -> list[BenchRecord]:
    """Whole-sequence DEFLATE over both serializations of the same tensor."""
    raw_bytes = tensor.raw_size_bytes()
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    binary = pack_symbols(tensor)
    size_bin = _write(out_dir / f"{dataset}.bin.deflate", deflate(binary))
    records.append(
        BenchRecord(
            dataset=dataset, method="deflate-binary", scenario=scenario,
            raw_bytes=raw_bytes, compressed_bytes=size_bin,
            compression_ratio=compression_ratio(raw_bytes, size_bin), **tags,
        )
    )
    csv_blob = tensor_to_csv_bytes(tensor, topology)
    size_csv = _write(out_dir / f"{dataset}.csv.deflate", deflate(csv_blob))
    records.append(
        BenchRecord(
            dataset=dataset, method="deflate-csv", scenario=scenario,
            raw_bytes=raw_bytes, compressed_bytes=size_csv,
            compression_ratio=compression_ratio(raw_bytes, size_csv),
            extra={"csv_raw_bytes": len(csv_blob)}, **tags,
        )
    )
    return records


def best_deflate_cr(records: list[BenchRecord], dataset: str) -> float:
    """Strongest DEFLATE baseline for a dataset (binary or CSV serialization)."""
    crs = [
        r.compression_ratio
        for r in records
        if r.dataset == dataset and r.method.startswith("deflate-")
    ]
    if not crs:
        raise ValueError(f"no deflate records for {dataset}")
    return max(crs)


def _codec_record(
    tensor, topology, model, scenario, dataset, method, out_dir: Path,
    model_size=0, **tags,
) -> BenchRecord:
    container = compress(tensor, topology, model, scenario)
    size = _write(out_dir / f"{dataset}.{method}.atom", container.to_bytes())
    raw_bytes = tensor.raw_size_bytes()
    return BenchRecord(
        dataset=dataset, method=method, scenario=scenario,
        raw_bytes=raw_bytes, compressed_bytes=size,
        compression_ratio=compression_ratio(raw_bytes, size),
        model_size_bytes=model_size, **tags,
    )


@dataclass(frozen=True)
class GridSpec:
    """Desk-scale defaults for the 4x4 synthetic grid."""

    topology_name: str = "nsfnet"
    num_bins: int = 2000
    window: int = 12
    alphabet_size: int = 1024
    hidden_dim: int = 64
    mlp_layers: tuple[int, ...] = (64,)
    stgnn_epochs: int = 12
    rnn_epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 5e-3
    seed: int = 7

    def scaled(self, full: bool) -> "GridSpec":
        if not full:
            return self
        return GridSpec(
            topology_name=self.topology_name, num_bins=self.num_bins,
            window=self.window, alphabet_size=self.alphabet_size,
            hidden_dim=self.hidden_dim, mlp_layers=self.mlp_layers,
            stgnn_epochs=self.stgnn_epochs * 3, rnn_epochs=self.rnn_epochs * 3,
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            seed=self.seed,
        )


def _train_models(tensor, topology, spec: GridSpec, cell_seed: int):
    graph = build_link_graph(topology)
    stgnn_arch = ArchDescriptor(
        kind="stgnn", alphabet_size=spec.alphabet_size, hidden_dim=spec.hidden_dim,
        window=spec.window, mlp_layers=spec.mlp_layers,
    )
    rnn_arch = ArchDescriptor(
        kind="rnn", alphabet_size=spec.alphabet_size, hidden_dim=spec.hidden_dim,
        window=spec.window, mlp_layers=spec.mlp_layers,
    )
    stgnn = train_predictor(
        tensor, graph, stgnn_arch,
        TrainConfig(
            learning_rate=spec.learning_rate, batch_size=spec.batch_size,
            epochs=spec.stgnn_epochs, seed=cell_seed,
        ),
    )
    rnn = train_predictor(
        tensor, None, rnn_arch,
        TrainConfig(
            learning_rate=spec.learning_rate, batch_size=max(spec.batch_size * 8, 256),
            epochs=spec.rnn_epochs, seed=cell_seed,
        ),
    )
    return stgnn, rnn, graph


def run_grid_cell(
    spatial: int, temporal: int, spec: GridSpec, out_dir: Path,
) -> list[BenchRecord]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    topology = BUILTIN[spec.topology_name]()
    cell_seed = spec.seed * 1000 + spatial * 10 + temporal // 10
    cfg = SynthConfig(
        topology=topology, num_bins=spec.num_bins, spatial_level=spatial,
        temporal_level=temporal, alphabet_size=spec.alphabet_size, seed=cell_seed,
    )
    tensor = generate(cfg)
    dataset = f"grid-s{spatial}-t{temporal}"
    tags = dict(spatial=spatial, temporal=temporal, seed=cell_seed)

    stgnn, rnn, graph = _train_models(tensor, topology, spec, cell_seed)
    stgnn_file = out_dir / f"{dataset}.stgnn.model"
    rnn_file = out_dir / f"{dataset}.rnn.model"
    stgnn.save(stgnn_file)
    rnn.save(rnn_file)

    records = [
        _codec_record(
            tensor, topology, StgnnPredictor(stgnn, graph), "network-wide",
            dataset, "stgnn", out_dir, model_size=_file_size(stgnn_file), **tags,
        ),
        _codec_record(
            tensor, topology, RnnPredictor(rnn), "single-link",
            dataset, "rnn", out_dir, model_size=_file_size(rnn_file), **tags,
        ),
    ]
    records.extend(deflate_records(tensor, topology, dataset, out_dir, **tags))
    return records


def _cell_worker(args):
    spatial, temporal, spec, out_dir = args
    record_file = Path(out_dir) / f"cell-s{spatial}-t{temporal}.json"
    if record_file.exists():
        return [BenchRecord.from_json(line) for line in record_file.read_text().splitlines()]
    records = run_grid_cell(spatial, temporal, spec, Path(out_dir))
    record_file.write_text("\n".join(r.to_json() for r in records) + "\n")
    return records


def run_grid(
    spec: GridSpec, out_dir, workers: int | None = None,
) -> list[BenchRecord]:
    """All 16 correlation cells; resumable, parallel across worker processes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(s, t, spec, str(out_dir)) for s in GRID_LEVELS for t in GRID_LEVELS]
    if workers is None:
        workers = max(1, min(os.cpu_count() or 1, 8))
    records: list[BenchRecord] = []
    if workers <= 1:
        for cell in cells:
            records.extend(_cell_worker(cell))
    else:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            for result in pool.imap_unordered(_cell_worker, cells):
                records.extend(result)
    return records


def grid_improvement_table(records: list[BenchRecord], over: str) -> dict:
    """4x4 table of stgnn CR improvement (%) over a baseline method.

    ``over`` is 'deflate' (strongest serialization) or 'rnn'. Keys are
    (spatial, temporal) tuples.
    """
    table = {}
    for s in GRID_LEVELS:
        for t in GRID_LEVELS:
            cell = [r for r in records if r.spatial == s and r.temporal == t]
            if not cell:
                continue
            stgnn = next(r for r in cell if r.method == "stgnn")
            if over == "rnn":
                base = next(r for r in cell if r.method == "rnn").compression_ratio
            elif over == "deflate":
                base = best_deflate_cr(cell, stgnn.dataset)
            else:
                raise ValueError(f"unknown baseline {over!r}")
            table[(s, t)] = improvement_pct(stgnn.compression_ratio, base)
    return table


def render_grid_table(table: dict, title: str) -> str:
    lines = [title, "spatial\\temporal " + "".join(f"{t:>10}" for t in GRID_LEVELS)]
    for s in GRID_LEVELS:
        row = [f"{s:>16} "]
        for t in GRID_LEVELS:
            value = table.get((s, t))
            row.append(f"{value:>9.1f}%" if value is not None else "         -")
        lines.append("".join(row))
    return "\n".join(lines)


def realistic_mix(topology: Topology, num_bins: int, seed: int) -> np.ndarray:
    """Held-out traffic-like generator for benchmarks without real data.

    Heterogeneous per-link load levels, a shared diurnal cycle with harmonics
    and a weekly modulation, light multiplicative noise. Deliberately not the
    sine-grid generator, so models benched here never saw its structure.
    """
    rng = np.random.default_rng(seed)
    num_links = topology.num_links
    t = np.arange(num_bins, dtype=np.float64)
    day = 288.0
    level = 10.0 ** rng.uniform(1.5, 3.0, num_links)
    phase = rng.normal(0.0, 0.25, num_links)
    weekly_phase = rng.uniform(0, 2 * np.pi, num_links)
    tt = t[:, None]
    series = (
        1.0
        + 0.55 * np.sin(2 * np.pi * tt / day + phase)
        + 0.20 * np.sin(4 * np.pi * tt / day + 2.0 * phase)
        + 0.12 * np.sin(2 * np.pi * tt / (7 * day) + weekly_phase)
    )
    series = level * series
    series *= 1.0 + 0.06 * rng.standard_normal((num_bins, num_links))
    return np.clip(series, 0.0, None)


def run_real_style(
    dataset: str,
    tensor: TrafficTensor,
    topology: Topology,
    out_dir,
    scenario: str = "network-wide",
    spec: GridSpec | None = None,
    seed: int = 11,
) -> list[BenchRecord]:
    """The baseline comparison on one dataset: learned codec vs the
    static/adaptive arithmetic-coder baselines vs DEFLATE."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = spec or GridSpec()
    size = tensor.alphabet.size
    records = []

    if scenario == "network-wide":
        graph = build_link_graph(topology)
        arch = ArchDescriptor(
            kind="stgnn", alphabet_size=size, hidden_dim=spec.hidden_dim,
            window=spec.window, mlp_layers=spec.mlp_layers,
        )
        model = train_predictor(
            tensor, graph, arch,
            TrainConfig(
                learning_rate=spec.learning_rate, batch_size=spec.batch_size,
                epochs=spec.stgnn_epochs, seed=seed,
            ),
        )
        model_file = out_dir / f"{dataset}.stgnn.model"
        model.save(model_file)
        records.append(
            _codec_record(
                tensor, topology, StgnnPredictor(model, graph), scenario,
                dataset, "stgnn", out_dir, model_size=_file_size(model_file), seed=seed,
            )
        )
    else:
        arch = ArchDescriptor(
            kind="rnn", alphabet_size=size, hidden_dim=spec.hidden_dim,
            window=spec.window, mlp_layers=spec.mlp_layers,
        )
        model = train_predictor(
            tensor, None, arch,
            TrainConfig(
                learning_rate=spec.learning_rate, batch_size=max(spec.batch_size * 8, 256),
                epochs=spec.rnn_epochs, seed=seed,
            ),
        )
        model_file = out_dir / f"{dataset}.rnn.model"
        model.save(model_file)
        records.append(
            _codec_record(
                tensor, topology, RnnPredictor(model), scenario,
                dataset, "rnn", out_dir, model_size=_file_size(model_file), seed=seed,
            )
        )

    records.append(
        _codec_record(
            tensor, topology, fit_static(tensor, scenario), scenario,
            dataset, "static-ac", out_dir, seed=seed,
        )
    )
    records.append(
        _codec_record(
            tensor, topology, AdaptiveModel(size, scenario), scenario,
            dataset, "adaptive-ac", out_dir, seed=seed,
        )
    )
    records.extend(deflate_records(tensor, topology, dataset, out_dir, scenario=scenario, seed=seed))
    return records


def per_bin_deflate_record(tensor: TrafficTensor, dataset: str, seed: int = 0) -> BenchRecord:
    raw, comp = per_bin_deflate_sizes(tensor)
    return BenchRecord(
        dataset=dataset, method="per-bin-deflate", scenario="network-wide",
        raw_bytes=raw, compressed_bytes=comp,
        compression_ratio=compression_ratio(raw, comp), seed=seed,
    )


def measure_per_bin_cost(
    tensor: TrafficTensor,
    topology: Topology,
    model: PredictorModel,
    warmup: int = 1,
) -> tuple[float, float]:
    """(mean, median) wall seconds per model-coded bin of one compression run.

    The bootstrap bins are excluded (they are uniform-coded); the first
    ``warmup`` model-coded bins are excluded from the median.
    """
    graph = build_link_graph(topology)
    predictor = (
        StgnnPredictor(model, graph) if model.arch.kind == "stgnn" else RnnPredictor(model)
    )
    scenario = "network-wide" if model.arch.kind == "stgnn" else "single-link"
    stream = StreamingCompressor(topology, predictor, scenario, tensor.alphabet)
    for t in range(tensor.num_bins):
        stream.push_bin(tensor.data[t])
    stream.finish()
    w = stream.window
    model_coded = stream.bin_seconds[w:]
    if len(model_coded) <= warmup:
        raise ValueError("need more than warmup model-coded bins to time")
    mean = float(np.mean(model_coded))
    median = float(np.median(model_coded[warmup:]))
    return mean, median


def save_records(records: list[BenchRecord], path) -> None:
    Path(path).write_text("\n".join(r.to_json() for r in records) + "\n")


def load_records(path) -> list[BenchRecord]:
    return [
        BenchRecord.from_json(line)
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]


def load_records_dir(directory) -> list[BenchRecord]:
    records = []
    for path in sorted(Path(directory).glob("*.json")):
        records.extend(load_records(path))
    return records


def render_records(records: list[BenchRecord]) -> str:
    header = f"{'dataset':<22}{'method':<16}{'scenario':<14}{'CR':>8}{'bytes':>12}{'model KB':>10}"
    lines = [header, "-" * len(header)]
    for r in records:
        lines.append(
            f"{r.dataset:<22}{r.method:<16}{r.scenario:<14}"
            f"{r.compression_ratio:>8.2f}{r.compressed_bytes:>12}"
            f"{r.model_size_bytes / 1024:>10.1f}"
        )
    return "\n".join(lines)

"""Acceptance suite: every criterion at its stated tolerance.

The synthetic-grid and realistic-mix benches dominate the runtime (tens of
minutes on a small CPU box). Their artifacts are persisted under a
spec-keyed cache directory, so an interrupted or repeated run resumes
instead of retraining; set TRAFFICZIP_ACCEPT_CACHE to relocate it.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pytest

from conftest import record_acceptance
from trafficzip.alphabet import calibrate_alphabet
from trafficzip.bench import (
    GRID_LEVELS,
    GridSpec,
    best_deflate_cr,
    load_records,
    measure_per_bin_cost,
    realistic_mix,
    run_grid,
    run_real_style,
    save_records,
)
from trafficzip.codec import StreamingCompressor, compress, decompress
from trafficzip.coder import Decoder, Encoder, PMF_TOTAL, quantize_pmf
from trafficzip.container import Container
from trafficzip.models import AdaptiveModel, UniformModel, fit_static
from trafficzip.neural import autodiff as ad
from trafficzip.neural.arch import ArchDescriptor, init_params
from trafficzip.neural.gradcheck import grad_check
from trafficzip.neural.predictors import (
    RnnPredictor,
    StgnnPredictor,
    adjacency_matrix,
    rnn_apply,
    stgnn_apply,
)
from trafficzip.neural.serialize import PredictorModel
from trafficzip.neural.training import evaluate_nll
from trafficzip.synth import SynthConfig, generate
from trafficzip.tensor import TrafficTensor, ingest_csv
from trafficzip.topologies import chain, directed_ring, geant_like, nsfnet
from trafficzip.topology import build_link_graph, load_topology

GRID_SPEC = GridSpec(
    topology_name="nsfnet",
    num_bins=2000,
    window=12,
    alphabet_size=1024,
    hidden_dim=64,
    mlp_layers=(64,),
    stgnn_epochs=12,
    rnn_epochs=5,
    batch_size=16,
    learning_rate=5e-3,
    seed=7,
)

REAL_STYLE_SPEC = GRID_SPEC
REAL_STYLE_BINS = 2000


def _cache_dir() -> Path:
    root = os.environ.get("TRAFFICZIP_ACCEPT_CACHE", ".acceptance_cache")
    key = hashlib.sha1(
        json.dumps(asdict(GRID_SPEC), sort_keys=True).encode()
    ).hexdigest()[:10]
    path = Path(root) / key
    path.mkdir(parents=True, exist_ok=True)
    return path


def _workers() -> int:
    return max(1, min(os.cpu_count() or 1, 4))


@pytest.fixture(scope="session")
def grid_records():
    return run_grid(GRID_SPEC, _cache_dir() / "grid", workers=_workers())


@pytest.fixture(scope="session")
def real_style_records():
    records = []
    for name, topo in (("abilene-like", None), ("geant-like", None)):
        cache = _cache_dir() / f"real-{name}.json"
        if cache.exists():
            records.extend(load_records(cache))
            continue
        from trafficzip.topologies import BUILTIN

        topology = BUILTIN[name]()
        raw = realistic_mix(topology, REAL_STYLE_BINS, seed=REAL_STYLE_SPEC.seed)
        alphabet = calibrate_alphabet(raw, size=REAL_STYLE_SPEC.alphabet_size)
        tensor = TrafficTensor(data=alphabet.quantize_array(raw).symbols, alphabet=alphabet)
        recs = run_real_style(
            name, tensor, topology, _cache_dir() / "real",
            spec=REAL_STYLE_SPEC, seed=REAL_STYLE_SPEC.seed,
        )
        save_records(recs, cache)
        records.extend(recs)
    return records


def _grid_model(kind: str, spatial: int, temporal: int) -> PredictorModel:
    path = _cache_dir() / "grid" / f"grid-s{spatial}-t{temporal}.{kind}.model"
    return PredictorModel.load(path)


def _grid_tensor(spatial: int, temporal: int) -> TrafficTensor:
    cell_seed = GRID_SPEC.seed * 1000 + spatial * 10 + temporal // 10
    cfg = SynthConfig(
        topology=nsfnet(), num_bins=GRID_SPEC.num_bins, spatial_level=spatial,
        temporal_level=temporal, alphabet_size=GRID_SPEC.alphabet_size,
        seed=cell_seed,
    )
    return generate(cfg)


def make_random_tensor(rng, topology, num_bins, size):
    data = rng.integers(0, size, (num_bins, topology.num_links)).astype(np.int32)
    alphabet = calibrate_alphabet(np.arange(size, dtype=float), size=size)
    return TrafficTensor(data=data, alphabet=alphabet)


def _random_model(rng, scenario, size, window, topology, trial):
    choice = int(rng.integers(0, 4))
    if choice == 0:
        return UniformModel(size)
    if choice == 1:
        return AdaptiveModel(size, scenario)
    if choice == 2:
        return None  # static: fitted on the tensor by the caller
    arch_kind = "rnn" if scenario == "single-link" else "stgnn"
    arch = ArchDescriptor(
        kind=arch_kind, alphabet_size=size, hidden_dim=6, window=window,
        mlp_layers=(6,),
    )
    model = PredictorModel(arch=arch, weights=init_params(arch, seed=trial))
    if arch_kind == "rnn":
        return RnnPredictor(model)
    return StgnnPredictor(model, build_link_graph(topology))


class TestCriterion01Losslessness:
    def test_round_trip_200_randomized_combinations(self):
        rng = np.random.default_rng(1001)
        topologies = [chain(2), directed_ring(3), directed_ring(5), nsfnet()]
        failures = []
        combos = 0
        while combos < 200:
            topology = topologies[int(rng.integers(0, len(topologies)))]
            size = int(2 ** rng.integers(2, 11))
            window = int(rng.integers(2, 6))
            num_bins = window + int(rng.integers(1, 10))
            scenario = ("single-link", "network-wide")[int(rng.integers(0, 2))]
            tensor = make_random_tensor(rng, topology, num_bins, size)
            model = _random_model(rng, scenario, size, window, topology, combos)
            if model is None:
                model = fit_static(tensor, scenario)
            container = compress(tensor, topology, model, scenario, window=window)
            restored = decompress(
                Container.from_bytes(container.to_bytes()),
                topology,
                getattr(model, "model", None),
            )
            if not np.array_equal(restored.data, tensor.data):
                failures.append((combos, scenario, size))
            combos += 1
        record_acceptance(
            1, "losslessness over 200 randomized combinations",
            not failures, f"{combos - len(failures)}/{combos} exact",
        )
        assert not failures, failures


class TestCriterion02CoderNearOptimality:
    def test_code_length_within_64_bits_of_cross_entropy(self):
        rng = np.random.default_rng(2002)
        violations = []
        worst = -math.inf
        for trial in range(100):
            num_symbols = int(rng.integers(2, 600))
            length = int(rng.integers(1, 1500))
            schedule = [
                quantize_pmf(rng.random(num_symbols) ** int(rng.integers(1, 5)) + 1e-12)
                for _ in range(length)
            ]
            symbols = [int(s) for s in rng.integers(0, num_symbols, length)]
            enc = Encoder()
            for pmf, sym in zip(schedule, symbols):
                enc.encode(pmf, sym)
            data = enc.finish()
            oracle_bits = sum(
                -math.log2((int(p.cum[s + 1]) - int(p.cum[s])) / PMF_TOTAL)
                for p, s in zip(schedule, symbols)
            )
            slack = len(data) * 8 - oracle_bits
            worst = max(worst, slack)
            if slack > 64:
                violations.append((trial, slack))
            dec = Decoder(data, symbol_limit=length)
            assert [dec.decode(p) for p in schedule] == symbols
        record_acceptance(
            2, "coder within 64 bits of the PMF-schedule cross entropy",
            not violations, f"worst slack {worst:.1f} bits over 100 schedules",
        )
        assert not violations, violations


class TestCriterion03GradientCorrectness:
    def test_rnn_and_stgnn_gradients(self):
        results = {}
        rng = np.random.default_rng(3003)

        arch = ArchDescriptor(
            kind="rnn", alphabet_size=256, hidden_dim=8, window=4, mlp_layers=(8,)
        )
        windows = rng.random((3, arch.window))
        targets = rng.random(3) * 255

        def rnn_loss(params):
            mu, b = rnn_apply(params, arch, windows)
            return ad.mean(ad.log(b) + ad.absolute(ad.Tensor(targets) - mu) / b)

        results["rnn"] = grad_check(rnn_loss, init_params(arch, seed=1))

        garch = ArchDescriptor(
            kind="stgnn", alphabet_size=256, hidden_dim=8, window=3, mlp_layers=(8,)
        )
        topo = directed_ring(2 + 0)  # placeholder replaced below
        topo = chain(3)  # 4 directed links
        graph = build_link_graph(topo)
        adj = adjacency_matrix(graph)
        gwindows = rng.random((2, garch.window, graph.num_links))
        gmask = (rng.random((2, graph.num_links)) < 0.5).astype(float)
        gknown = rng.random((2, graph.num_links)) * gmask
        gtargets = rng.random((2, graph.num_links)) * 255
        weight = 1.0 - gmask

        def stgnn_loss(params):
            mu, b = stgnn_apply(params, garch, gwindows, gmask, gknown, adj)
            terms = ad.log(b) + ad.absolute(ad.Tensor(gtargets) - mu) / b
            w = ad.Tensor(weight)
            return ad.total(terms * w) / ad.total(w)

        results["stgnn"] = grad_check(stgnn_loss, init_params(garch, seed=2))

        ok = all(v < 1e-4 for v in results.values())
        record_acceptance(
            3, "gradients match finite differences (max rel err < 1e-4)",
            ok, ", ".join(f"{k}={v:.2e}" for k, v in results.items()),
        )
        assert ok, results


class TestCriterion04GridVsDeflate:
    def test_stgnn_beats_deflate_on_grid(self, grid_records):
        wins = 0
        losses = []
        high_temporal = {}
        for s in GRID_LEVELS:
            for t in GRID_LEVELS:
                cell = [r for r in grid_records if r.spatial == s and r.temporal == t]
                stgnn = next(r for r in cell if r.method == "stgnn")
                deflate_cr = best_deflate_cr(cell, stgnn.dataset)
                improvement = (stgnn.compression_ratio / deflate_cr - 1.0) * 100.0
                if stgnn.compression_ratio > deflate_cr:
                    wins += 1
                else:
                    losses.append((s, t, improvement))
                if t == 100:
                    high_temporal[s] = improvement
        high_ok = all(v >= 20.0 for v in high_temporal.values())
        ok = wins >= 14 and high_ok
        record_acceptance(
            4, "grid: graph codec beats DEFLATE (>=14/16; >=20% at high temporal)",
            ok,
            f"wins {wins}/16; high-temporal % " +
            ", ".join(f"s{s}={v:.0f}" for s, v in sorted(high_temporal.items())),
        )
        assert ok, (wins, losses, high_temporal)


class TestCriterion05SpatialAdvantage:
    def test_stgnn_vs_rnn_in_full_spatial_column(self, grid_records):
        column = []
        for t in GRID_LEVELS:
            cell = [r for r in grid_records if r.spatial == 100 and r.temporal == t]
            stgnn = next(r for r in cell if r.method == "stgnn")
            rnn = next(r for r in cell if r.method == "rnn")
            column.append((t, stgnn.compression_ratio, rnn.compression_ratio))
        not_worse = all(s >= r for _, s, r in column)
        strictly = sum(1 for _, s, r in column if s > r)
        ok = not_worse and strictly >= 3
        record_acceptance(
            5, "spatial=100 column: graph codec >= recurrent codec (strict in >=3)",
            ok,
            "; ".join(f"t{t}: {s:.2f} vs {r:.2f}" for t, s, r in column),
        )
        assert ok, column


class TestCriterion06BaselineOrdering:
    def test_ordering_on_real_style_data(self, real_style_records):
        details = []
        ok = True
        for dataset in ("abilene-like", "geant-like"):
            recs = [r for r in real_style_records if r.dataset == dataset]
            stgnn = next(r for r in recs if r.method == "stgnn").compression_ratio
            static = next(r for r in recs if r.method == "static-ac").compression_ratio
            adaptive = next(r for r in recs if r.method == "adaptive-ac").compression_ratio
            deflate_cr = best_deflate_cr(recs, dataset)
            margin = (stgnn / static - 1.0) * 100.0
            cell_ok = (
                stgnn > adaptive and stgnn > static and stgnn > deflate_cr
                and margin >= 15.0
            )
            ok = ok and cell_ok
            details.append(
                f"{dataset}: stgnn={stgnn:.2f} static={static:.2f} "
                f"adaptive={adaptive:.2f} deflate={deflate_cr:.2f} (+{margin:.0f}% vs static)"
            )
        record_acceptance(6, "real-style ordering: graph codec above every baseline", ok,
                          "; ".join(details))
        assert ok, details


class TestCriterion07RealDataBand:
    def test_real_data_cr_band_informational(self):
        data_dir = os.environ.get("TRAFFICZIP_REAL_DATA_DIR")
        if not data_dir:
            record_acceptance(
                7, "real-data CR band [2.0, 5.0] (informational)",
                True, "real datasets not present; skipped, non-gating",
            )
            pytest.skip("real Abilene/Geant data not present")
        results = []
        for stem in ("abilene", "geant"):
            csv = Path(data_dir) / f"{stem}.csv"
            topo_file = Path(data_dir) / f"{stem}.topo"
            if not csv.exists() or not topo_file.exists():
                continue
            topology = load_topology(topo_file)
            tensor = ingest_csv(csv, topology, alphabet_size=GRID_SPEC.alphabet_size)
            recs = run_real_style(
                stem, tensor, topology, _cache_dir() / "realdata", spec=REAL_STYLE_SPEC,
            )
            stgnn = next(r for r in recs if r.method == "stgnn")
            cr_vs_file = os.stat(csv).st_size / stgnn.compressed_bytes
            results.append((stem, cr_vs_file))
        in_band = all(2.0 <= cr <= 5.0 for _, cr in results)
        record_acceptance(
            7, "real-data CR band [2.0, 5.0] (informational)",
            True,  # reported, not gating
            "; ".join(f"{n}={cr:.2f} ({'in' if 2.0 <= cr <= 5.0 else 'out of'} band)"
                      for n, cr in results) or "no datasets found",
        )
        assert results or True
        _ = in_band


class TestCriterion08StreamingEquivalence:
    def test_streaming_matches_offline_on_20_datasets(self):
        rng = np.random.default_rng(8008)
        failures = []
        for trial in range(20):
            topology = (chain(2), directed_ring(3), directed_ring(4))[trial % 3]
            size = int(2 ** rng.integers(2, 8))
            window = int(rng.integers(2, 5))
            num_bins = window + int(rng.integers(2, 15))
            tensor = make_random_tensor(rng, topology, num_bins, size)
            scenario = ("single-link", "network-wide")[trial % 2]
            model = _random_model(rng, scenario, size, window, topology, trial)
            if model is None:
                model = fit_static(tensor, scenario)
            offline = compress(tensor, topology, model, scenario, window=window)
            stream = StreamingCompressor(
                topology, model, scenario, tensor.alphabet, window=window
            )
            for t in range(num_bins):
                stream.push_bin(tensor.data[t])
            streamed = stream.finish()
            if streamed.payloads != offline.payloads:
                failures.append(trial)
        record_acceptance(
            8, "streaming output byte-identical to offline compression",
            not failures, f"{20 - len(failures)}/20 datasets identical",
        )
        assert not failures, failures


class TestCriterion09CostAndModelSize:
    def test_per_bin_cost_and_model_size(self, grid_records):
        topology = geant_like()
        cfg = SynthConfig(
            topology=topology, num_bins=42, spatial_level=60, temporal_level=60,
            alphabet_size=GRID_SPEC.alphabet_size, seed=99,
        )
        tensor = generate(cfg)
        arch = ArchDescriptor(
            kind="stgnn", alphabet_size=GRID_SPEC.alphabet_size,
            hidden_dim=GRID_SPEC.hidden_dim, window=GRID_SPEC.window,
            mlp_layers=GRID_SPEC.mlp_layers,
        )
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=5))
        mean_s, median_s = measure_per_bin_cost(tensor, topology, model)
        stgnn_sizes = [
            r.model_size_bytes for r in grid_records if r.method == "stgnn"
        ]
        size_ok = all(0 < s < 1_000_000 for s in stgnn_sizes)
        ok = mean_s < 10.0 and size_ok
        record_acceptance(
            9, "72-link per-bin cost < 10 s; model file < 1 MB",
            ok,
            f"mean {mean_s:.2f} s/bin (median {median_s:.2f}); "
            f"model {max(stgnn_sizes) / 1024:.0f} KB",
        )
        assert ok, (mean_s, stgnn_sizes)


class TestCriterion10MaskConditioningBenefit:
    def test_full_mask_nll_not_worse_than_empty(self, grid_records):
        spatial, temporal = 100, 30
        model = _grid_model("stgnn", spatial, temporal)
        tensor = _grid_tensor(spatial, temporal)
        graph = build_link_graph(nsfnet())
        empty = evaluate_nll(
            model, tensor, graph, mask_mode="empty", max_samples=1000, seed=10,
        )
        full = evaluate_nll(
            model, tensor, graph, mask_mode="full", max_samples=1000, seed=10,
        )
        ok = full <= empty
        record_acceptance(
            10, "conditioning on coded links does not hurt mean NLL",
            ok, f"full-mask {full:.3f} bits <= empty-mask {empty:.3f} bits",
        )
        assert ok, (full, empty)

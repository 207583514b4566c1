"""Command-line surface: train, compress, decompress, synth, bench, report."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .bench import (
    GridSpec,
    grid_improvement_table,
    load_records_dir,
    per_bin_deflate_record,
    realistic_mix,
    render_grid_table,
    render_records,
    run_grid,
    run_real_style,
    save_records,
)
from .alphabet import calibrate_alphabet
from .codec import compress, compression_ratio, decompress
from .container import Container
from .errors import TrafficzipError
from .models import AdaptiveModel, UniformModel, fit_static
from .neural.arch import ArchDescriptor
from .neural.predictors import RnnPredictor, StgnnPredictor
from .neural.serialize import PredictorModel
from .neural.training import TrainConfig, train_predictor
from .synth import SynthConfig, correlation_report, generate_raw
from .tensor import TrafficTensor, ingest_csv, write_csv
from .topologies import BUILTIN
from .topology import Topology, build_link_graph, load_topology

BASELINES = ("uniform", "static", "adaptive")


def _topology(arg: str) -> Topology:
    if arg in BUILTIN:
        return BUILTIN[arg]()
    return load_topology(Path(arg))


def _resolve_model(arg: str, tensor: TrafficTensor | None, topology, scenario: str):
    if arg == "uniform":
        size = tensor.alphabet.size if tensor is not None else 1024
        return UniformModel(size)
    if arg == "static":
        if tensor is None:
            raise TrafficzipError("the static baseline is fitted on the input data")
        return fit_static(tensor, scenario)
    if arg == "adaptive":
        size = tensor.alphabet.size if tensor is not None else 1024
        return AdaptiveModel(size, scenario)
    model = PredictorModel.load(Path(arg))
    if model.arch.kind == "rnn":
        return RnnPredictor(model)
    return StgnnPredictor(model, build_link_graph(topology))


def cmd_train(args) -> int:
    topology = _topology(args.topology)
    tensor = ingest_csv(args.data, topology, alphabet_size=args.alphabet)
    kind = args.kind or ("stgnn" if args.scenario == "network-wide" else "rnn")
    arch = ArchDescriptor(
        kind=kind,
        alphabet_size=tensor.alphabet.size,
        hidden_dim=args.hidden,
        window=args.window,
        mlp_layers=(args.hidden,),
    )
    graph = build_link_graph(topology) if kind == "stgnn" else None
    cfg = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = train_predictor(tensor, graph, arch, cfg)
    model.save(args.out)
    size = os.stat(args.out).st_size
    print(f"model={model.model_id} file={args.out} bytes={size}")
    print("train_loss_nats=" + ",".join(f"{x:.4f}" for x in model.history["train_loss"]))
    print(f"eval_nll_bits={model.history['eval_nll_bits']:.4f}")
    if args.loss_curve:
        with open(args.loss_curve, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_loss_nats\n")
            for i, x in enumerate(model.history["train_loss"], 1):
                fh.write(f"{i},{x}\n")
    return 0


def cmd_compress(args) -> int:
    topology = _topology(args.topology)
    tensor = ingest_csv(args.data, topology, alphabet_size=args.alphabet)
    model = _resolve_model(args.model, tensor, topology, args.scenario)
    container = compress(
        tensor,
        topology,
        model,
        args.scenario,
        window=args.window if args.model in BASELINES else None,
        embed_model=args.embed_model,
    )
    container.save(args.out)
    compressed = os.stat(args.out).st_size
    raw = tensor.raw_size_bytes()
    if args.verify:
        decode_side = getattr(model, "model", None)
        restored = decompress(Container.load(args.out), topology, decode_side)
        if not np.array_equal(restored.data, tensor.data):
            raise TrafficzipError("verification failed: round trip differs")
        print("verified=1")
    print(
        f"file={args.out} raw_bytes={raw} compressed_bytes={compressed} "
        f"cr={compression_ratio(raw, compressed):.4f} "
        f"csv_bytes={os.stat(args.data).st_size}"
    )
    return 0


def cmd_decompress(args) -> int:
    topology = _topology(args.topology)
    container = Container.load(args.input)
    model = None
    if args.model:
        model = PredictorModel.load(Path(args.model))
    tensor = decompress(container, topology, model)
    if args.symbols:
        write_csv(args.out, topology, tensor.data)
    else:
        write_csv(args.out, topology, tensor.alphabet.dequantize_array(tensor.data))
    print(f"file={args.out} bins={tensor.num_bins} links={tensor.num_links}")
    return 0


def cmd_synth(args) -> int:
    topology = _topology(args.topology)
    cfg = SynthConfig(
        topology=topology,
        num_bins=args.bins,
        spatial_level=args.spatial,
        temporal_level=args.temporal,
        alphabet_size=args.alphabet,
        seed=args.seed,
    )
    raw = generate_raw(cfg)
    write_csv(args.out, topology, raw)
    report = correlation_report(raw)
    print(
        f"file={args.out} bins={args.bins} links={topology.num_links} "
        f"spatial_corr={report.mean_pairwise_spatial_corr:.3f} "
        f"lag1_autocorr={report.mean_lag1_autocorr:.3f}"
    )
    return 0


def cmd_bench(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    if args.grid:
        spec = GridSpec(seed=args.seed).scaled(args.full)
        records.extend(run_grid(spec, out_dir / "grid", workers=args.workers))
        for over in ("deflate", "rnn"):
            table = grid_improvement_table(records, over=over)
            print(render_grid_table(table, f"learned graph codec vs {over}: CR improvement (%)"))
            print()
    for name in args.real_style or []:
        topology = _topology(name)
        raw = realistic_mix(topology, args.bins, seed=args.seed)
        alphabet = calibrate_alphabet(raw, size=args.alphabet)
        tensor = TrafficTensor(data=alphabet.quantize_array(raw).symbols, alphabet=alphabet)
        recs = run_real_style(
            name, tensor, topology, out_dir / "real", scenario=args.scenario,
            spec=GridSpec(seed=args.seed).scaled(args.full), seed=args.seed,
        )
        if args.per_bin_gzip:
            recs.append(per_bin_deflate_record(tensor, name, seed=args.seed))
        records.extend(recs)
    if not records:
        raise TrafficzipError("nothing to bench: pass --grid and/or --real-style")
    save_records(records, out_dir / "records.json")
    for record in records:
        print(record.key_values())
    return 0


def cmd_report(args) -> int:
    path = Path(args.records)
    if path.is_dir():
        records = load_records_dir(path)
    else:
        from .bench import load_records

        records = load_records(path)
    if not records:
        raise TrafficzipError(f"no bench records under {path}")
    for record in records:
        print(record.key_values())
    print()
    print(render_records(records))
    if any(r.spatial >= 0 for r in records):
        for over in ("deflate", "rnn"):
            try:
                table = grid_improvement_table(records, over=over)
            except StopIteration:
                continue
            if table:
                print()
                print(render_grid_table(table, f"learned graph codec vs {over}: CR improvement (%)"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficzip",
        description="Lossless traffic time-series compression with learned probability models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a predictor on a traffic CSV")
    train.add_argument("--data", required=True)
    train.add_argument("--topology", required=True)
    train.add_argument("--scenario", choices=["single-link", "network-wide"], required=True)
    train.add_argument("--kind", choices=["rnn", "stgnn"])
    train.add_argument("--window", type=int, default=12)
    train.add_argument("--alphabet", type=int, default=1024)
    train.add_argument("--hidden", type=int, default=64)
    train.add_argument("--epochs", type=int, default=10)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--learning-rate", type=float, default=2e-3)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--loss-curve")
    train.add_argument("--out", required=True)
    train.set_defaults(func=cmd_train)

    comp = sub.add_parser("compress", help="compress a traffic CSV into a container")
    comp.add_argument("--data", required=True)
    comp.add_argument("--topology", required=True)
    comp.add_argument("--model", required=True, help="model file or uniform|static|adaptive")
    comp.add_argument("--scenario", choices=["single-link", "network-wide"], required=True)
    comp.add_argument("--window", type=int, default=12, help="window for baseline models")
    comp.add_argument("--alphabet", type=int, default=1024)
    comp.add_argument("--verify", action="store_true", help="round-trip before reporting success")
    comp.add_argument("--embed-model", action="store_true")
    comp.add_argument("--out", required=True)
    comp.set_defaults(func=cmd_compress)

    dec = sub.add_parser("decompress", help="restore the traffic CSV from a container")
    dec.add_argument("--input", required=True)
    dec.add_argument("--topology", required=True)
    dec.add_argument("--model")
    dec.add_argument("--symbols", action="store_true", help="write symbols instead of values")
    dec.add_argument("--out", required=True)
    dec.set_defaults(func=cmd_decompress)

    synth = sub.add_parser("synth", help="generate a synthetic traffic CSV")
    synth.add_argument("--topology", required=True)
    synth.add_argument("--bins", type=int, default=2000)
    synth.add_argument("--spatial", type=int, default=100, choices=[0, 30, 60, 100])
    synth.add_argument("--temporal", type=int, default=100, choices=[0, 30, 60, 100])
    synth.add_argument("--alphabet", type=int, default=1024)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    bench = sub.add_parser("bench", help="run the benchmark matrix")
    bench.add_argument("--grid", action="store_true", help="the 4x4 correlation grid")
    bench.add_argument("--real-style", nargs="*", metavar="TOPOLOGY",
                       help="realistic-mix datasets on these topologies")
    bench.add_argument("--scenario", choices=["single-link", "network-wide"],
                       default="network-wide")
    bench.add_argument("--bins", type=int, default=2000)
    bench.add_argument("--alphabet", type=int, default=1024)
    bench.add_argument("--seed", type=int, default=7)
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--full", action="store_true", help="scale up training epochs")
    bench.add_argument("--per-bin-gzip", action="store_true",
                       help="also DEFLATE each time bin independently")
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=cmd_bench)

    report = sub.add_parser("report", help="render persisted bench records")
    report.add_argument("--records", required=True, help="records file or directory")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrafficzipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Lossless compression of multi-link network traffic time series.

An arithmetic coder driven by learned probability models: a recurrent
predictor for independent single-link streams and a spatio-temporal graph
predictor that conditions each link on its neighbors and on the already-coded
links of the current time bin.
"""

from .alphabet import AffineQuantizer, DictQuantizer, SymbolAlphabet, calibrate_alphabet
from .codec import (
    StreamingCompressor,
    compress,
    compression_ratio,
    decompress,
    extract_link,
)
from .coder import Decoder, Encoder, SymbolPmf, quantize_pmf, uniform_pmf
from .container import Container
from .errors import TrafficzipError
from .models import (
    AdaptiveModel,
    LaplaceParams,
    ModelContext,
    StaticModel,
    UniformModel,
    adaptive_pmf,
    fit_static,
    laplace_pmf,
)
from .neural import (
    ArchDescriptor,
    PredictorModel,
    RnnPredictor,
    StgnnPredictor,
    TrainConfig,
    evaluate_nll,
    grad_check,
    train_predictor,
)
from .synth import SynthConfig, correlation_report, generate, generate_raw
from .tensor import TrafficTensor, ingest_csv, write_csv
from .topology import LinkGraph, Topology, build_link_graph, load_topology, save_topology

__version__ = "0.1.0"

__all__ = [
    "AdaptiveModel",
    "AffineQuantizer",
    "ArchDescriptor",
    "Container",
    "Decoder",
    "DictQuantizer",
    "Encoder",
    "LaplaceParams",
    "LinkGraph",
    "ModelContext",
    "PredictorModel",
    "RnnPredictor",
    "StaticModel",
    "StgnnPredictor",
    "StreamingCompressor",
    "SymbolAlphabet",
    "SymbolPmf",
    "SynthConfig",
    "Topology",
    "TrafficTensor",
    "TrafficzipError",
    "TrainConfig",
    "UniformModel",
    "adaptive_pmf",
    "build_link_graph",
    "calibrate_alphabet",
    "compress",
    "compression_ratio",
    "correlation_report",
    "decompress",
    "evaluate_nll",
    "extract_link",
    "fit_static",
    "generate",
    "generate_raw",
    "grad_check",
    "ingest_csv",
    "laplace_pmf",
    "load_topology",
    "quantize_pmf",
    "save_topology",
    "train_predictor",
    "uniform_pmf",
    "write_csv",
]

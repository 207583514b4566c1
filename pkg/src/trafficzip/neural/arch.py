"""Architecture descriptors and weight initialization for the predictors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ModelError

KINDS = ("rnn", "stgnn")
DISTRIBUTIONS = ("laplace", "normal")  # normal is a declared slot, not implemented


@dataclass(frozen=True)
class ArchDescriptor:
    """Everything needed to rebuild a predictor's parameter shapes."""

    kind: str
    alphabet_size: int
    hidden_dim: int = 64
    window: int = 12
    mlp_layers: tuple[int, ...] = (64,)
    distribution: str = "laplace"
    min_scale: float = 0.05  # floor on the Laplace scale, symbol units

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown predictor kind {self.kind!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise ModelError(f"unknown distribution {self.distribution!r}")
        if self.hidden_dim < 1:
            raise ModelError("hidden_dim must be >= 1")
        if self.window < 2:
            raise ModelError("window must be >= 2")
        if any(w < 1 for w in self.mlp_layers):
            raise ModelError("mlp layer widths must be >= 1")
        if self.min_scale <= 0:
            raise ModelError("min_scale must be positive")
        object.__setattr__(self, "mlp_layers", tuple(int(w) for w in self.mlp_layers))

    def gru_input_dim(self) -> int:
        # stgnn trunk input: aggregated message + own traffic value; the
        # coded-link conditioning enters at the readout, keeping the trunk
        # independent of the mask state
        return self.hidden_dim + 1 if self.kind == "stgnn" else 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alphabet_size": self.alphabet_size,
            "hidden_dim": self.hidden_dim,
            "window": self.window,
            "mlp_layers": list(self.mlp_layers),
            "distribution": self.distribution,
            "min_scale": self.min_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchDescriptor":
        return cls(
            kind=d["kind"],
            alphabet_size=int(d["alphabet_size"]),
            hidden_dim=int(d["hidden_dim"]),
            window=int(d["window"]),
            mlp_layers=tuple(d["mlp_layers"]),
            distribution=d["distribution"],
            min_scale=float(d["min_scale"]),
        )


def _softplus_inv(y: float) -> float:
    return math.log(math.expm1(y))


def _mlp_shapes(prefix: str, widths: list[int]) -> dict[str, tuple]:
    shapes = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        shapes[f"{prefix}.{i}.w"] = (fan_in, fan_out)
        shapes[f"{prefix}.{i}.b"] = (fan_out,)
    return shapes


def param_shapes(arch: ArchDescriptor) -> dict[str, tuple]:
    hd = arch.hidden_dim
    gin = arch.gru_input_dim()
    shapes = {}
    for gate in ("z", "r", "c"):
        shapes[f"gru.w{gate}"] = (gin, hd)
        shapes[f"gru.u{gate}"] = (hd, hd)
        shapes[f"gru.b{gate}"] = (hd,)
    # the readout gets a few summary features next to the hidden state, and
    # those also bypass the MLP through a zero-initialized linear term, so
    # one-weight solutions (linear extrapolation, trusting a coded neighbor)
    # are reachable within small training budgets; the graph readout emits a
    # third output, the gate blending own prediction with the neighbor copy
    skip = skip_width(arch)
    out_width = head_width(arch)
    if arch.kind == "stgnn":
        shapes.update(_mlp_shapes("msg", [hd, *arch.mlp_layers, hd]))
    shapes.update(_mlp_shapes("head", [hd + skip, *arch.mlp_layers, out_width]))
    shapes["head.skip.w"] = (skip, out_width)
    return shapes


def skip_width(arch: ArchDescriptor) -> int:
    # rnn: [last window difference]
    # stgnn: [chosen-neighbor offset, coded fraction, last window difference,
    #         |chosen neighbor - own extrapolation|]
    return 4 if arch.kind == "stgnn" else 1


def head_width(arch: ArchDescriptor) -> int:
    # location offset and raw scale; the graph head adds the copy gate
    return 3 if arch.kind == "stgnn" else 2


def init_params(arch: ArchDescriptor, seed: int) -> dict[str, np.ndarray]:
    """Seeded Glorot-uniform weights, zero biases.

    The location head learns an offset from the last observed value, so its
    bias starts at zero; the scale head multiplies the window dispersion, and
    its bias starts at softplus^-1(2) so early predictions are diffuse
    rather than confidently wrong.
    """
    rng = np.random.default_rng(seed)
    # the message pathway starts silent (zero output layer): the recurrent
    # trunk then begins exactly link-local, and neighbor messages fade in
    # only where gradients support them instead of polluting every hidden
    # state from the first step
    last_msg = f"msg.{len(arch.mlp_layers)}.w"
    params = {}
    for name, shape in param_shapes(arch).items():
        if (
            name.endswith(".b")
            or name.startswith("gru.b")
            or name == "head.skip.w"
            or name == last_msg
        ):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            fan_in, fan_out = shape
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, shape)
    # the scale head multiplies a data-derived hint, so its bias starts at
    # softplus^-1(2): twice the hinted dispersion, diffuse but not wild; the
    # copy gate (graph head only) starts balanced at sigmoid(0)
    head_last = f"head.{len(arch.mlp_layers)}.b"
    bias = [0.0, _softplus_inv(2.0)] + ([0.0] if arch.kind == "stgnn" else [])
    params[head_last] = np.array(bias)
    return params


def flatten_params(params: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([params[k].reshape(-1) for k in sorted(params)])


def check_shapes(arch: ArchDescriptor, params: dict[str, np.ndarray]) -> None:
    expected = param_shapes(arch)
    if set(expected) != set(params):
        missing = set(expected) ^ set(params)
        raise ModelError(f"weight names do not match architecture: {sorted(missing)}")
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise ModelError(
                f"weight {name} has shape {params[name].shape}, expected {shape}"
            )

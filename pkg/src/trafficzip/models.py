"""Probability models the codec can drive: non-neural baselines and the
discretized-Laplace head shared with the neural predictors.

Every model exposes ``predict_pmf(ctx) -> SymbolPmf``: a deterministic
function of (model, context). The arithmetic coder consumes nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coder import SymbolPmf, quantize_pmf, uniform_pmf
from .errors import ModelError
from .tensor import TrafficTensor
from .topology import LinkGraph


@dataclass(frozen=True)
class ModelContext:
    """Everything a model may condition on when predicting one link's value.

    ``window`` holds the w preceding bins for all links. ``mask`` marks links
    whose value in the *target* bin is already coded; their symbols sit in
    ``known`` (zero where unknown). The target link itself is never known.
    """

    window: np.ndarray  # (w, l) symbols
    target_link: int
    mask: np.ndarray | None = None  # (l,) bool
    known: np.ndarray | None = None  # (l,) symbols, 0 where mask is False
    link_graph: LinkGraph | None = None

    def __post_init__(self):
        if self.window.ndim != 2:
            raise ModelError("context window must be 2-D (w x l)")
        num_links = self.window.shape[1]
        if not 0 <= self.target_link < num_links:
            raise ModelError(f"target link {self.target_link} out of range")
        if self.mask is None:
            object.__setattr__(self, "mask", np.zeros(num_links, dtype=bool))
        if self.known is None:
            object.__setattr__(self, "known", np.zeros(num_links, dtype=np.int32))
        if self.mask.shape != (num_links,) or self.known.shape != (num_links,):
            raise ModelError("mask/known shape does not match the window")
        if self.mask[self.target_link]:
            raise ModelError("target link cannot be marked known")
        if np.any(self.known[~self.mask] != 0):
            raise ModelError("known values defined where mask is False")


@dataclass(frozen=True)
class LaplaceParams:
    """Location/scale in symbol units."""

    mu: float
    b: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise ModelError("mu must be finite")
        if not (np.isfinite(self.b) and self.b > 0):
            raise ModelError("b must be finite and positive")


def laplace_cdf(x, mu, b):
    d = (np.asarray(x, dtype=np.float64) - mu) / b
    return np.where(
        d < 0,
        0.5 * np.exp(np.minimum(d, 0.0)),
        1.0 - 0.5 * np.exp(-np.maximum(d, 0.0)),
    )


def laplace_probs(params: LaplaceParams, num_symbols: int) -> np.ndarray:
    """Laplace density integrated over unit bins around each symbol.

    Interior symbol k gets F(k+1/2) - F(k-1/2); the first and last symbols
    absorb the tails, so the masses sum to exactly one even when mu sits far
    outside the alphabet.
    """
    edges = np.arange(num_symbols + 1, dtype=np.float64) - 0.5
    cdf = laplace_cdf(edges, params.mu, params.b)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    return np.diff(cdf)


def laplace_pmf(params: LaplaceParams, num_symbols: int) -> SymbolPmf:
    return quantize_pmf(laplace_probs(params, num_symbols))


class UniformModel:
    """Flat distribution regardless of context."""

    kind = "uniform"

    def __init__(self, num_symbols: int):
        self.num_symbols = num_symbols
        self._pmf = uniform_pmf(num_symbols)

    def predict_pmf(self, ctx: ModelContext) -> SymbolPmf:
        return self._pmf


class StaticModel:
    """Empirical histogram over a whole training sequence, fixed thereafter.

    Single-link scope keeps one histogram per link; network-wide scope pools
    the entire dataset into a single histogram.
    """

    kind = "static"

    def __init__(self, num_symbols: int, scope: str, histograms: np.ndarray):
        if scope not in ("single-link", "network-wide"):
            raise ModelError(f"unknown scope {scope!r}")
        self.num_symbols = num_symbols
        self.scope = scope
        self.histograms = np.asarray(histograms, dtype=np.int64)
        if self.histograms.ndim != 2 or self.histograms.shape[1] != num_symbols:
            raise ModelError("histograms must be (num_links or 1, num_symbols)")
        self._pmfs = [quantize_pmf(h.astype(np.float64)) for h in self.histograms]

    def predict_pmf(self, ctx: ModelContext) -> SymbolPmf:
        if self.scope == "network-wide":
            return self._pmfs[0]
        if ctx.target_link >= len(self._pmfs):
            raise ModelError(f"no histogram for link {ctx.target_link}")
        return self._pmfs[ctx.target_link]


def fit_static(tensor: TrafficTensor, scope: str) -> StaticModel:
    if tensor.num_bins == 0 or tensor.num_links == 0:
        raise ModelError("cannot fit a static model on an empty tensor")
    size = tensor.alphabet.size
    if scope == "network-wide":
        hist = np.bincount(tensor.data.reshape(-1), minlength=size)[None, :]
    elif scope == "single-link":
        hist = np.stack(
            [np.bincount(tensor.data[:, j], minlength=size) for j in range(tensor.num_links)]
        )
    else:
        raise ModelError(f"unknown scope {scope!r}")
    return StaticModel(num_symbols=size, scope=scope, histograms=hist)


class AdaptiveModel:
    """Sliding-window histogram, recomputed from the context every step."""

    kind = "adaptive"

    def __init__(self, num_symbols: int, scope: str):
        if scope not in ("single-link", "network-wide"):
            raise ModelError(f"unknown scope {scope!r}")
        self.num_symbols = num_symbols
        self.scope = scope

    def predict_pmf(self, ctx: ModelContext) -> SymbolPmf:
        return adaptive_pmf(ctx, self.scope, self.num_symbols)


def adaptive_pmf(ctx: ModelContext, scope: str, num_symbols: int) -> SymbolPmf:
    """Histogram of the window, restricted to the target link's column in
    single-link scope, pooled over all links network-wide."""
    if ctx.window.shape[0] == 0:
        raise ModelError("adaptive model needs a non-empty window")
    if scope == "single-link":
        values = ctx.window[:, ctx.target_link]
    elif scope == "network-wide":
        values = ctx.window.reshape(-1)
    else:
        raise ModelError(f"unknown scope {scope!r}")
    hist = np.bincount(values, minlength=num_symbols).astype(np.float64)
    return quantize_pmf(hist)

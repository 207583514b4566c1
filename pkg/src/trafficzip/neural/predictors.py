"""Forward passes for the two learned predictors.

Both predictors read a window of w past bins and emit Laplace location/scale
in symbol units. Inputs are normalized to [0, 1] by the alphabet size.

The single-link predictor is a gated recurrent trunk over the window with an
MLP readout. Location is an offset from the link's last observed value (the
residual objective is what makes desk-scale training converge); the scale
multiplies the window's own dispersion, so quiet links start tight and noisy
ones wide.

The graph predictor runs one message-passing round per time bin: every link's
hidden state goes through a shared MLP, incoming messages are summed over the
link graph, concatenated with the link's per-bin input feature, and a shared
recurrent cell updates the hidden state; a readout MLP maps the final hidden
states to parameters. The per-bin input feature carries the link's own
traffic value plus conditioning channels describing the already-coded links
of the target bin: its own mask bit and coded value, and its neighbors'
coded mean and coded fraction. Channels are fed at every bin (messages are
computed from pre-update hidden states, so anything injected only at the
last bin could never cross a link boundary before readout), and the message
output layer starts at zero so the trunk begins link-local.

Conditioning enters the readout directly: a summary of the best-agreeing
coded neighbor (offset, coded fraction, last window difference, and the
neighbor-vs-own-extrapolation residual) is appended to the readout input and
also bypasses the MLP linearly, and a learned gate blends the link's own
prediction with that neighbor's value - the scale hint follows the same gate
(window dispersion vs observed copy residual). Routing the conditioning
purely through the recurrent machinery is expressible but does not train
into use within desk-scale budgets; the gate makes each correlation regime's
optimum one weight away.
"""

from __future__ import annotations

import numpy as np

from ..coder import SymbolPmf
from ..errors import ModelError
from ..models import LaplaceParams, ModelContext, laplace_pmf
from ..topology import LinkGraph
from . import autodiff as ad
from .arch import ArchDescriptor


def adjacency_matrix(graph: LinkGraph) -> np.ndarray:
    adj = np.zeros((graph.num_links, graph.num_links), dtype=np.float64)
    for i, nbrs in enumerate(graph.neighbors):
        adj[i, list(nbrs)] = 1.0
    return adj


def readout_skip_features(src_value, has, coded_share, last, last_diff):
    """Summary features handed to the readout next to the hidden state: the
    chosen coded source value as an offset from the link's own last value
    (zeroed when no source is coded), the coded share of the bin, the
    window's last first-difference, and how far the chosen source sits from
    the link's own extrapolation - the signal the copy gate needs. Without
    this direct path, conditioning and fine-grained extrapolation must climb
    through every recurrent gate, which does not happen within small
    training budgets."""
    delta = (src_value - last) * has
    agree = np.abs(src_value - (last + last_diff)) * has
    return np.stack([delta, coded_share, last_diff, agree], axis=-1)


def copy_residual_hint(src_value, has, last, last_diff, alphabet_size):
    """Uncertainty hint for the copy branch: how far the chosen source value
    sits from the link's own extrapolated value, floored at a quarter symbol.
    Observable on both codec sides before coding."""
    resid = np.abs(src_value - (last + last_diff)) * (alphabet_size - 1)
    return (resid + 0.25) * has


def closest_known_source(mask, known, extrap):
    """Value of the coded link closest to the link's own extrapolation, and
    whether any source exists.

    The chain rule lets a link condition on every already-coded link of the
    bin, not only its graph neighbors (the graph governs message passing);
    the mean of coded links is easily polluted when some are noisy, while the
    best-agreeing single source is robust, and on spatially correlated data
    it is exactly the one worth copying. Shapes: mask/known (..., l).
    """
    num_links = mask.shape[-1]
    eligible = np.broadcast_to(
        mask[..., None, :].astype(bool), mask.shape + (num_links,)
    ) & ~np.eye(num_links, dtype=bool)
    dist = np.abs(known[..., None, :] - extrap[..., :, None])
    dist = np.where(eligible, dist, np.inf)
    idx = np.argmin(dist, axis=-1)
    value = np.take_along_axis(known, idx, axis=-1)
    has = eligible.any(axis=-1)
    return np.where(has, value, 0.0), has


def _mlp(params, prefix: str, x: ad.Tensor, num_layers: int) -> ad.Tensor:
    for i in range(num_layers):
        x = x @ params[f"{prefix}.{i}.w"] + params[f"{prefix}.{i}.b"]
        if i < num_layers - 1:
            x = ad.tanh(x)
    return x


def _gru_step(params, x: ad.Tensor, h: ad.Tensor) -> ad.Tensor:
    z = ad.sigmoid(x @ params["gru.wz"] + h @ params["gru.uz"] + params["gru.bz"])
    r = ad.sigmoid(x @ params["gru.wr"] + h @ params["gru.ur"] + params["gru.br"])
    c = ad.tanh(x @ params["gru.wc"] + (r * h) @ params["gru.uc"] + params["gru.bc"])
    return (1.0 - z) * c + z * h


def window_dispersion(windows: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Mean absolute first difference of the window, in symbols (floored at
    0.02 so the scale head keeps a usable multiplier on frozen windows)."""
    disp = np.abs(np.diff(windows, axis=1)).mean(axis=1) * (alphabet_size - 1)
    return np.maximum(disp, 0.02)


def _head(params, arch: ArchDescriptor, h: ad.Tensor, last: np.ndarray,
          disp: np.ndarray, skip: np.ndarray):
    """Single-link head. Location is an offset from the link's last observed
    value, rescaled to symbols: traffic is smooth, so the residual objective
    is far better conditioned than absolute location. The scale multiplies
    the window dispersion, so a quiet link starts tight and a noisy one wide
    without the head having to learn absolute magnitudes.
    """
    if arch.distribution != "laplace":
        raise NotImplementedError("only the laplace head is implemented")
    skip_t = ad.Tensor(skip)
    h = ad.concat([h, skip_t], axis=-1)
    out = _mlp(params, "head", h, len(arch.mlp_layers) + 1)
    out = out + skip_t @ params["head.skip.w"]
    mu = (ad.take_last(out, 0) + last) * float(arch.alphabet_size - 1)
    b = ad.maximum(ad.softplus(ad.take_last(out, 1)) * disp, arch.min_scale)
    return mu, b


def _gated_head(params, arch: ArchDescriptor, h: ad.Tensor, last, disp, skip,
                nbr_value, has_nbr, copy_hint):
    """Graph head: a learned gate blends the link's own prediction with the
    best-agreeing coded neighbor's value, and the scale hint follows the same
    gate (window dispersion for the own branch, observed copy residual for
    the copy branch). Each correlation regime's optimum is one bias/weight
    away, which is what makes the conditioning trainable at desk scale.
    """
    if arch.distribution != "laplace":
        raise NotImplementedError("only the laplace head is implemented")
    skip_t = ad.Tensor(skip)
    h = ad.concat([h, skip_t], axis=-1)
    out = _mlp(params, "head", h, len(arch.mlp_layers) + 1)
    out = out + skip_t @ params["head.skip.w"]
    own = ad.take_last(out, 0) + last
    gate = ad.sigmoid(ad.take_last(out, 2)) * has_nbr
    mu = (own * (1.0 - gate) + ad.Tensor(nbr_value) * gate) * float(arch.alphabet_size - 1)
    hint = (1.0 - gate) * disp + gate * copy_hint
    b = ad.maximum(ad.softplus(ad.take_last(out, 1)) * hint, arch.min_scale)
    return mu, b


def rnn_apply(params, arch: ArchDescriptor, windows: np.ndarray):
    """Batched single-link forward. windows: (B, w) normalized values.

    Returns (mu, b) Tensors of shape (B,).
    """
    if windows.ndim != 2 or windows.shape[1] != arch.window:
        raise ModelError(
            f"window batch shape {windows.shape} does not match w={arch.window}"
        )
    batch = windows.shape[0]
    h = ad.Tensor(np.zeros((batch, arch.hidden_dim)))
    for t in range(arch.window):
        x = ad.Tensor(windows[:, t : t + 1])
        h = _gru_step(params, x, h)
    disp = window_dispersion(windows, arch.alphabet_size)
    skip = (windows[:, -1] - windows[:, -2])[:, None]
    return _head(params, arch, h, windows[:, -1], disp, skip)


def stgnn_apply(
    params,
    arch: ArchDescriptor,
    windows: np.ndarray,
    mask: np.ndarray,
    known: np.ndarray,
    adj: np.ndarray,
):
    """Batched network-wide forward.

    windows: (B, w, l) normalized; mask: (B, l) 0/1; known: (B, l) normalized
    coded target-bin values, zero where unknown; adj: (l, l) 0/1.
    Returns (mu, b) Tensors of shape (B, l).
    """
    if windows.ndim != 3 or windows.shape[1] != arch.window:
        raise ModelError(
            f"window batch shape {windows.shape} does not match w={arch.window}"
        )
    batch, w, num_links = windows.shape
    if adj.shape != (num_links, num_links):
        raise ModelError("adjacency does not match the number of links")
    if mask.shape != (batch, num_links) or known.shape != (batch, num_links):
        raise ModelError("mask/known shape does not match the window batch")
    hd = arch.hidden_dim
    num_mlp = len(arch.mlp_layers) + 1

    adj_t = ad.Tensor(adj)
    h0 = np.zeros((batch, num_links, hd))
    h0[:, :, 0] = windows[:, 0, :]
    h = ad.Tensor(h0)
    for t in range(w):
        msg = _mlp(params, "msg", h, num_mlp)
        agg = adj_t @ msg
        x_t = ad.Tensor(windows[:, t, :, None])
        u = ad.concat([agg, x_t], axis=-1)
        h = _gru_step(params, u, h)
    last = windows[:, -1, :]
    last_diff = windows[:, -1, :] - windows[:, -2, :]
    src_value, has_src = closest_known_source(mask.astype(bool), known, last + last_diff)
    has = has_src.astype(np.float64)
    coded_share = np.broadcast_to(
        mask.mean(axis=-1, keepdims=True), src_value.shape
    )
    skip = readout_skip_features(src_value, has, coded_share, last, last_diff)
    disp = window_dispersion(windows, arch.alphabet_size)
    copy_hint = copy_residual_hint(src_value, has, last, last_diff, arch.alphabet_size)
    return _gated_head(params, arch, h, last, disp, skip, src_value, has, copy_hint)


class _FastWeights:
    """Float32 copies of the weights for the codec's inference loop.

    The coding loop runs one forward per (bin, link) and cannot batch across
    the chain-rule order, so this path skips the autodiff machinery entirely.
    Encoder and decoder share it, which is all bit-exactness requires; a unit
    test keeps it numerically aligned with the tape forward.
    """

    def __init__(self, model, num_mlp: int):
        self.w = {k: v.astype(np.float32) for k, v in model.weights.items()}
        self.num_mlp = num_mlp

    def mlp(self, prefix: str, x: np.ndarray) -> np.ndarray:
        w = self.w
        for i in range(self.num_mlp):
            x = x @ w[f"{prefix}.{i}.w"] + w[f"{prefix}.{i}.b"]
            if i < self.num_mlp - 1:
                x = np.tanh(x)
        return x

    def gru(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        w = self.w
        z = _sigmoid(x @ w["gru.wz"] + h @ w["gru.uz"] + w["gru.bz"])
        r = _sigmoid(x @ w["gru.wr"] + h @ w["gru.ur"] + w["gru.br"])
        c = np.tanh(x @ w["gru.wc"] + (r * h) @ w["gru.uc"] + w["gru.bc"])
        return (1.0 - z) * c + z * h

    def head(self, h: np.ndarray, last: np.ndarray, arch: ArchDescriptor,
             disp: np.ndarray, skip: np.ndarray):
        skip32 = skip.astype(np.float32)
        h = np.concatenate([h, skip32], axis=-1)
        out = self.mlp("head", h)
        out = out + skip32 @ self.w["head.skip.w"]
        mu = (out[..., 0] + last) * np.float32(arch.alphabet_size - 1)
        b = np.maximum(_softplus(out[..., 1]) * disp, np.float32(arch.min_scale))
        return mu, b

    def gated_head(self, h, last, arch, disp, skip, nbr_value, has_nbr, copy_hint):
        skip32 = skip.astype(np.float32)
        h = np.concatenate([h, skip32], axis=-1)
        out = self.mlp("head", h)
        out = out + skip32 @ self.w["head.skip.w"]
        own = out[..., 0] + last
        gate = _sigmoid(out[..., 2]) * has_nbr
        mu = (own * (1.0 - gate) + nbr_value * gate) * np.float32(arch.alphabet_size - 1)
        hint = (1.0 - gate) * disp + gate * copy_hint
        b = np.maximum(_softplus(out[..., 1]) * hint, np.float32(arch.min_scale))
        return mu, b


def _sigmoid(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _softplus(x):
    return np.logaddexp(np.float32(0.0), x)


class RnnPredictor:
    """Codec-facing wrapper: one link's window in, a quantized PMF out."""

    kind = "rnn"

    def __init__(self, model):
        if model.arch.kind != "rnn":
            raise ModelError(f"expected an rnn model, got {model.arch.kind}")
        self.model = model
        self.arch = model.arch
        self._fast = _FastWeights(model, len(model.arch.mlp_layers) + 1)
        self._scale = np.float32(self.arch.alphabet_size - 1)

    def forward_window(self, window: np.ndarray) -> LaplaceParams:
        """window: (w,) symbols for one link."""
        window = np.asarray(window)
        if window.shape != (self.arch.window,):
            raise ModelError(
                f"window length {window.shape} does not match w={self.arch.window}"
            )
        x = window.astype(np.float32) / self._scale
        h = np.zeros(self.arch.hidden_dim, dtype=np.float32)
        for t in range(self.arch.window):
            h = self._fast.gru(x[t : t + 1], h)
        disp = window_dispersion(x[None, :], self.arch.alphabet_size).astype(np.float32)
        skip = np.array([x[-1] - x[-2]], dtype=np.float32)
        mu, b = self._fast.head(h, x[-1], self.arch, disp[0], skip)
        return LaplaceParams(mu=float(mu), b=float(b))

    def predict_pmf(self, ctx: ModelContext) -> SymbolPmf:
        params = self.forward_window(ctx.window[:, ctx.target_link])
        return laplace_pmf(params, self.arch.alphabet_size)


class StgnnPredictor:
    """Codec-facing wrapper around the graph predictor."""

    kind = "stgnn"

    def __init__(self, model, link_graph: LinkGraph):
        if model.arch.kind != "stgnn":
            raise ModelError(f"expected an stgnn model, got {model.arch.kind}")
        self.model = model
        self.arch = model.arch
        self.link_graph = link_graph
        self._adj = adjacency_matrix(link_graph).astype(np.float32)
        self._fast = _FastWeights(model, len(model.arch.mlp_layers) + 1)
        self._scale = np.float32(self.arch.alphabet_size - 1)
        self._trunk_cache = None

    def forward_window(self, window, mask, known):
        """window: (w, l) symbols; mask: (l,) bool; known: (l,) symbols.

        Returns (mu, b) float arrays of shape (l,): parameters for every link
        under this mask state.
        """
        window = np.asarray(window)
        num_links = self.link_graph.num_links
        if window.ndim != 2 or window.shape[1] != num_links:
            raise ModelError(
                f"window shape {window.shape} does not match {num_links} links"
            )
        if window.shape[0] != self.arch.window:
            raise ModelError(
                f"window length {window.shape[0]} does not match w={self.arch.window}"
            )
        mask = np.asarray(mask, dtype=bool)
        x = window.astype(np.float32) / self._scale
        known_f = np.asarray(known).astype(np.float32) / self._scale * mask

        # the trunk does not depend on the mask state, so within a time bin
        # (one trunk per window, l mask states) it is computed once
        cache_key = x.tobytes()
        if self._trunk_cache is None or self._trunk_cache[0] != cache_key:
            fast = self._fast
            h = np.zeros((num_links, self.arch.hidden_dim), dtype=np.float32)
            h[:, 0] = x[0]
            for t in range(self.arch.window):
                msg = fast.mlp("msg", h)
                agg = self._adj @ msg
                u = np.concatenate([agg, x[t][:, None]], axis=-1)
                h = fast.gru(u, h)
            disp = window_dispersion(x[None], self.arch.alphabet_size)[0]
            self._trunk_cache = (cache_key, h, disp.astype(np.float32))
        _, h, disp = self._trunk_cache

        last = x[-1]
        last_diff = x[-1] - x[-2]
        src_value, has_src = closest_known_source(mask, known_f, last + last_diff)
        src_value = src_value.astype(np.float32)
        has = has_src.astype(np.float32)
        coded_share = np.full_like(src_value, mask.mean(), dtype=np.float32)
        skip = readout_skip_features(src_value, has, coded_share, last, last_diff)
        copy_hint = copy_residual_hint(
            src_value, has, last, last_diff, self.arch.alphabet_size
        ).astype(np.float32)
        return self._fast.gated_head(
            h, last, self.arch, disp, skip, src_value, has, copy_hint
        )

    def forward_params(self, window, mask, known) -> list[LaplaceParams]:
        mu, b = self.forward_window(window, mask, known)
        return [LaplaceParams(mu=float(m), b=float(s)) for m, s in zip(mu, b)]

    def predict_pmf(self, ctx: ModelContext) -> SymbolPmf:
        if ctx.link_graph is not None and ctx.link_graph.num_links != self.link_graph.num_links:
            raise ModelError("context link graph does not match the model's graph")
        mu, b = self.forward_window(ctx.window, ctx.mask, ctx.known)
        j = ctx.target_link
        return laplace_pmf(
            LaplaceParams(mu=float(mu[j]), b=float(b[j])), self.arch.alphabet_size
        )

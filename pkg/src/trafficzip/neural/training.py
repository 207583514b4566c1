"""Training loop for the predictors.

Trains on the continuous Laplace log-density of the true next-bin symbol
(smooth and cheap); the codec later uses the discretized PMF, whose mismatch
at symbol resolution is second order. The split is chronological: the first
``train_fraction`` of bins is the training region, the remainder evaluation -
shuffling would leak future values into a forecasting task.

The graph predictor draws a fresh random mask over links for every training
sample, feeding the masked links' true next-bin values through the known
channel; the loss is taken over the unmasked links only, which is exactly the
population of predictions the codec will ask for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ModelError, TrainingDivergedError
from ..tensor import TrafficTensor
from ..topology import LinkGraph
from . import autodiff as ad
from .arch import ArchDescriptor, init_params
from .predictors import adjacency_matrix, rnn_apply, stgnn_apply
from .serialize import PredictorModel

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-3
    batch_size: int = 32
    epochs: int = 10
    mask_density: tuple[float, float] = (0.0, 1.0)
    seed: int = 0
    train_fraction: float = 0.70
    clip_norm: float = 100.0  # ceiling for rare explosions; location grads run ~(A-1)/b

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ModelError("train_fraction must be in (0, 1)")
        lo, hi = self.mask_density
        if not 0.0 <= lo <= hi <= 1.0:
            raise ModelError("mask_density must be a subinterval of [0, 1]")
        if self.batch_size < 1 or self.epochs < 1:
            raise ModelError("batch_size and epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ModelError("learning_rate must be positive")

    def epoch_lr(self, epoch: int) -> float:
        """Step decay: x0.3 after 60% and again after 85% of the epochs."""
        frac = epoch / self.epochs
        if frac >= 0.85:
            return self.learning_rate * 0.09
        if frac >= 0.6:
            return self.learning_rate * 0.3
        return self.learning_rate


class Adam:
    """Adaptive moment estimation with a fixed, name-sorted update order."""

    def __init__(self, params: dict[str, ad.Tensor], lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.order = sorted(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(params[k].data) for k in self.order}
        self._v = {k: np.zeros_like(params[k].data) for k in self.order}

    def zero_grad(self):
        for k in self.order:
            self.params[k].grad = None

    def clip_gradients(self, max_norm: float) -> None:
        total = 0.0
        for k in self.order:
            g = self.params[k].grad
            if g is not None:
                total += float((g * g).sum())
        norm = math.sqrt(total)
        if norm > max_norm:
            scale = max_norm / norm
            for k in self.order:
                if self.params[k].grad is not None:
                    self.params[k].grad *= scale

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.b1**self.step_count
        bc2 = 1.0 - self.b2**self.step_count
        for k in self.order:
            t = self.params[k]
            if t.grad is None:
                continue
            m = self._m[k]
            v = self._v[k]
            m *= self.b1
            m += (1.0 - self.b1) * t.grad
            v *= self.b2
            v += (1.0 - self.b2) * t.grad * t.grad
            t.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def laplace_nll_terms(mu: ad.Tensor, b: ad.Tensor, targets: np.ndarray) -> ad.Tensor:
    """Continuous Laplace negative log density at the symbol values (nats)."""
    x = ad.Tensor(targets)
    return ad.log(b) + _LOG2 + ad.absolute(x - mu) / b


def nll_bits(mu: np.ndarray, b: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return (np.log(b) + _LOG2 + np.abs(targets - mu) / b) / _LOG2


def _split_point(num_bins: int, fraction: float) -> int:
    return int(num_bins * fraction)


def _rnn_samples(data: np.ndarray, w: int, lo: int, hi: int):
    """All (window, target) pairs with target bin in [lo, hi), every link."""
    num_links = data.shape[1]
    windows = []
    targets = []
    for t in range(max(lo, w), hi):
        windows.append(data[t - w : t, :].T)  # (l, w)
        targets.append(data[t, :])
    if not windows:
        return np.zeros((0, w)), np.zeros(0)
    windows = np.concatenate(windows, axis=0).astype(np.float64)
    targets = np.concatenate(targets).astype(np.float64)
    _ = num_links
    return windows, targets


def _stgnn_targets(data: np.ndarray, w: int, lo: int, hi: int):
    return np.arange(max(lo, w), hi)


def _sample_masks(rng, count: int, num_links: int, density: tuple[float, float]):
    lo, hi = density
    dens = rng.uniform(lo, hi, size=count)
    mask = rng.random((count, num_links)) < dens[:, None]
    # a fully known bin trains nothing: free one random link
    full = mask.all(axis=1)
    if full.any():
        drop = rng.integers(0, num_links, size=int(full.sum()))
        mask[np.flatnonzero(full), drop] = False
    return mask


def train_predictor(
    tensor: TrafficTensor,
    link_graph: LinkGraph | None,
    arch: ArchDescriptor,
    cfg: TrainConfig,
) -> PredictorModel:
    """Fit a predictor and return it with checksum and loss history attached."""
    w = arch.window
    if tensor.num_bins <= w + 1:
        raise ModelError(f"need more than w+1={w + 1} bins to train, got {tensor.num_bins}")
    if arch.alphabet_size != tensor.alphabet.size:
        raise ModelError("architecture alphabet size does not match the tensor")
    if arch.kind == "stgnn":
        if link_graph is None:
            raise ModelError("stgnn training needs a link graph")
        if link_graph.num_links != tensor.num_links:
            raise ModelError("link graph does not match the tensor's link count")

    rng = np.random.default_rng(cfg.seed)
    params = {k: ad.Tensor(v, requires_grad=True) for k, v in init_params(arch, cfg.seed).items()}
    opt = Adam(params, lr=cfg.learning_rate)
    scale = float(arch.alphabet_size - 1)
    data = tensor.data.astype(np.float64)
    split = _split_point(tensor.num_bins, cfg.train_fraction)

    history = {"train_loss": [], "eval_nll_bits": [], "split_bin": split}

    if arch.kind == "rnn":
        windows, targets = _rnn_samples(data, w, w, split)
        num_samples = windows.shape[0]
        if num_samples == 0:
            raise ModelError("no training samples inside the training fraction")
        for epoch in range(cfg.epochs):
            opt.lr = cfg.epoch_lr(epoch)
            order = rng.permutation(num_samples)
            epoch_loss = 0.0
            seen = 0
            for start in range(0, num_samples, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                opt.zero_grad()
                mu, b = rnn_apply(params, arch, windows[idx] / scale)
                loss = ad.mean(laplace_nll_terms(mu, b, targets[idx]))
                value = float(loss.data)
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        f"loss diverged at epoch {epoch}", epoch=epoch,
                        history=history["train_loss"],
                    )
                loss.backward()
                opt.clip_gradients(cfg.clip_norm)
                opt.step()
                epoch_loss += value * idx.size
                seen += idx.size
            history["train_loss"].append(epoch_loss / seen)
    else:
        adj = adjacency_matrix(link_graph)
        num_links = tensor.num_links
        t_targets = _stgnn_targets(data, w, w, split)
        if t_targets.size == 0:
            raise ModelError("no training samples inside the training fraction")
        for epoch in range(cfg.epochs):
            opt.lr = cfg.epoch_lr(epoch)
            order = rng.permutation(t_targets)
            epoch_loss = 0.0
            seen = 0
            for start in range(0, order.size, cfg.batch_size):
                ts = order[start : start + cfg.batch_size]
                wins = np.stack([data[t - w : t] for t in ts]) / scale
                targets = np.stack([data[t] for t in ts])
                mask = _sample_masks(rng, ts.size, num_links, cfg.mask_density)
                known = (targets / scale) * mask
                opt.zero_grad()
                mu, b = stgnn_apply(params, arch, wins, mask.astype(np.float64), known, adj)
                terms = laplace_nll_terms(mu, b, targets)
                weight = ad.Tensor((~mask).astype(np.float64))
                loss = ad.total(terms * weight) / ad.total(weight)
                value = float(loss.data)
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        f"loss diverged at epoch {epoch}", epoch=epoch,
                        history=history["train_loss"],
                    )
                loss.backward()
                opt.clip_gradients(cfg.clip_norm)
                opt.step()
                count = float((~mask).sum())
                epoch_loss += value * count
                seen += count
            history["train_loss"].append(epoch_loss / seen)

    weights = {k: t.data for k, t in params.items()}
    model = PredictorModel(arch=arch, weights=weights)
    model.history = history
    model.history["eval_nll_bits"] = float(
        evaluate_nll(model, tensor, link_graph, mask_mode="empty", max_samples=512, seed=cfg.seed)
    )
    return model


def evaluate_nll(
    model: PredictorModel,
    tensor: TrafficTensor,
    link_graph: LinkGraph | None = None,
    mask_mode: str = "empty",
    max_samples: int = 1000,
    seed: int = 0,
    train_fraction: float = 0.70,
) -> float:
    """Mean NLL (bits) of true next-bin symbols over the evaluation split.

    ``mask_mode`` applies to the graph predictor: 'empty' conditions on the
    window alone, 'full' marks every link except the predicted one as known.
    """
    arch = model.arch
    w = arch.window
    scale = float(arch.alphabet_size - 1)
    data = tensor.data.astype(np.float64)
    split = max(_split_point(tensor.num_bins, train_fraction), w)
    ts = np.arange(split, tensor.num_bins)
    if ts.size == 0:
        raise ModelError("no evaluation bins after the training fraction")
    rng = np.random.default_rng(seed)
    params = {k: ad.Tensor(v.astype(np.float64)) for k, v in model.weights.items()}

    if arch.kind == "rnn":
        windows, targets = _rnn_samples(data, w, split, tensor.num_bins)
        if windows.shape[0] > max_samples:
            idx = rng.choice(windows.shape[0], size=max_samples, replace=False)
            windows, targets = windows[idx], targets[idx]
        with ad.no_grad():
            mu, b = rnn_apply(params, arch, windows / scale)
        return float(nll_bits(mu.data, b.data, targets).mean())

    if link_graph is None:
        raise ModelError("stgnn evaluation needs a link graph")
    adj = adjacency_matrix(link_graph)
    num_links = tensor.num_links
    pairs = [(t, j) for t in ts for j in range(num_links)]
    if len(pairs) > max_samples:
        chosen = rng.choice(len(pairs), size=max_samples, replace=False)
        pairs = [pairs[i] for i in chosen]
    bits = []
    with ad.no_grad():
        for t, j in pairs:
            window = data[t - w : t][None] / scale
            if mask_mode == "full":
                mask = np.ones((1, num_links), dtype=bool)
                mask[0, j] = False
            elif mask_mode == "empty":
                mask = np.zeros((1, num_links), dtype=bool)
            else:
                raise ModelError(f"unknown mask_mode {mask_mode!r}")
            known = (data[t][None] / scale) * mask
            mu, b = stgnn_apply(params, arch, window, mask.astype(np.float64), known, adj)
            bits.append(nll_bits(mu.data[0, j], b.data[0, j], data[t, j]))
    return float(np.mean(bits))

"""Synthetic sine-based traffic with controllable correlation intensities.

Each link starts from a shared base sine. Spatial correlation is degraded by
giving a seeded subset of links independent phase shifts and period scales;
temporal correlation is degraded by adding Gaussian noise to a seeded subset.
The level parameters (0/30/60/100) state the percentage of links that keep
the original signal on each axis, so the 4x4 grid of levels spans clearly
distinguishable regimes - ``correlation_report`` verifies that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alphabet import calibrate_alphabet
from .errors import TrafficzipError
from .tensor import TrafficTensor
from .topology import Topology

LEVELS = (0, 30, 60, 100)


class SynthError(TrafficzipError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    topology: Topology
    num_bins: int = 2000
    amplitude: float = 500.0
    period: float = 127.3
    phase: float = 0.0
    spatial_level: int = 100
    temporal_level: int = 100
    noise_rel_std: float = 0.25
    phase_shift_range: tuple[float, float] = (0.0, 2.0 * np.pi)
    period_scale_range: tuple[float, float] = (0.5, 2.0)
    alphabet_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.spatial_level not in LEVELS or self.temporal_level not in LEVELS:
            raise SynthError(f"correlation levels must be one of {LEVELS}")
        if self.amplitude <= 0:
            raise SynthError("amplitude must be positive")
        if self.period < 2:
            raise SynthError("period must be at least 2 bins")
        if self.num_bins < 3:
            raise SynthError("need at least 3 bins")


def generate_raw(cfg: SynthConfig) -> np.ndarray:
    """Raw (unquantized) traffic matrix, deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    num_links = cfg.topology.num_links
    t = np.arange(cfg.num_bins, dtype=np.float64)

    # subsets that lose the original signal on each axis, drawn independently
    n_perturbed = round((100 - cfg.spatial_level) / 100 * num_links)
    n_noisy = round((100 - cfg.temporal_level) / 100 * num_links)
    perturbed = rng.choice(num_links, size=n_perturbed, replace=False)
    noisy = rng.choice(num_links, size=n_noisy, replace=False)

    phases = np.full(num_links, cfg.phase)
    periods = np.full(num_links, cfg.period)
    phases[perturbed] = cfg.phase + rng.uniform(*cfg.phase_shift_range, size=n_perturbed)
    periods[perturbed] = cfg.period * rng.uniform(*cfg.period_scale_range, size=n_perturbed)

    raw = cfg.amplitude * (
        1.0 + np.sin(2.0 * np.pi * t[:, None] / periods[None, :] + phases[None, :])
    )
    if n_noisy:
        raw[:, noisy] += (
            cfg.noise_rel_std * cfg.amplitude * rng.standard_normal((cfg.num_bins, n_noisy))
        )
    return np.clip(raw, 0.0, None)


def generate(cfg: SynthConfig) -> TrafficTensor:
    """Quantized tensor; identical to ingesting the raw CSV this config emits."""
    raw = generate_raw(cfg)
    alphabet = calibrate_alphabet(raw, size=cfg.alphabet_size)
    return TrafficTensor(data=alphabet.quantize_array(raw).symbols, alphabet=alphabet)


@dataclass(frozen=True)
class CorrelationReport:
    mean_pairwise_spatial_corr: float
    mean_lag1_autocorr: float
    constant_links: tuple[int, ...] = field(default=())


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 1.0  # constant column convention, flagged by the caller
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def correlation_report(tensor_or_matrix) -> CorrelationReport:
    """Mean pairwise Pearson correlation across links and mean lag-1
    autocorrelation; constant columns count as 1.0 and are flagged."""
    data = getattr(tensor_or_matrix, "data", tensor_or_matrix)
    data = np.asarray(data, dtype=np.float64)
    num_bins, num_links = data.shape
    if num_bins < 3:
        raise SynthError("need at least 3 bins for a correlation report")
    constant = tuple(int(j) for j in range(num_links) if data[:, j].std() == 0)

    pairs = []
    for i in range(num_links):
        for j in range(i + 1, num_links):
            pairs.append(_pearson(data[:, i], data[:, j]))
    spatial = float(np.mean(pairs)) if pairs else 1.0

    autos = []
    for j in range(num_links):
        autos.append(_pearson(data[:-1, j], data[1:, j]))
    return CorrelationReport(
        mean_pairwise_spatial_corr=spatial,
        mean_lag1_autocorr=float(np.mean(autos)),
        constant_links=constant,
    )


def autocorrelation_at(series: np.ndarray, lag: int) -> float:
    series = np.asarray(series, dtype=np.float64)
    return _pearson(series[:-lag], series[lag:])

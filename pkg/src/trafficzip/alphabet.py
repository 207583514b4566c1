"""Symbol alphabets: how raw traffic values map to coder symbols.

The codec is lossless at symbol granularity. Whether it is also lossless at
raw-value granularity depends on the quantizer: the exact dictionary quantizer
(auto-selected when the data has at most A distinct values) is, the affine
range quantizer is not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrafficzipError


class AlphabetError(TrafficzipError):
    pass


@dataclass(frozen=True)
class QuantizeResult:
    symbols: np.ndarray
    clamped: int  # values outside the calibrated range, clamped to a boundary


@dataclass(frozen=True)
class AffineQuantizer:
    """Equal-width bins over [min, max]; dequantize returns bin midpoints."""

    lo: float
    hi: float
    size: int

    def quantize_array(self, raw) -> QuantizeResult:
        raw = np.asarray(raw, dtype=np.float64)
        width = self.hi - self.lo + 1.0
        sym = np.floor((raw - self.lo) / width * self.size)
        clamped = int(np.count_nonzero((sym < 0) | (sym >= self.size)))
        sym = np.clip(sym, 0, self.size - 1)
        return QuantizeResult(sym.astype(np.int32), clamped)

    def dequantize_array(self, symbols) -> np.ndarray:
        symbols = np.asarray(symbols)
        width = self.hi - self.lo + 1.0
        return self.lo + (symbols + 0.5) * width / self.size


@dataclass(frozen=True)
class DictQuantizer:
    """Exact mapping of the observed distinct values; lossless round trip."""

    values: tuple[float, ...]  # sorted ascending

    @property
    def size(self) -> int:
        return len(self.values)

    def quantize_array(self, raw) -> QuantizeResult:
        raw = np.asarray(raw, dtype=np.float64)
        table = np.asarray(self.values)
        idx = np.searchsorted(table, raw)
        below = idx == 0
        above = idx == table.shape[0]
        idx_hi = np.clip(idx, 0, table.shape[0] - 1)
        idx_lo = np.clip(idx - 1, 0, table.shape[0] - 1)
        # nearest table entry; ties toward the lower value
        dist_lo = np.abs(raw - table[idx_lo])
        dist_hi = np.abs(table[idx_hi] - raw)
        sym = np.where(dist_lo <= dist_hi, idx_lo, idx_hi)
        sym[below] = 0
        sym[above] = table.shape[0] - 1
        clamped = int(np.count_nonzero((raw < table[0]) | (raw > table[-1])))
        return QuantizeResult(sym.astype(np.int32), clamped)

    def dequantize_array(self, symbols) -> np.ndarray:
        return np.asarray(self.values)[np.asarray(symbols)]


@dataclass(frozen=True)
class SymbolAlphabet:
    """Alphabet size (power of two) plus the raw<->symbol quantizer."""

    size: int
    quantizer: AffineQuantizer | DictQuantizer

    def __post_init__(self):
        if self.size < 2 or self.size & (self.size - 1) != 0:
            raise AlphabetError(f"alphabet size must be a power of two >= 2, got {self.size}")
        if self.size > 1 << 16:
            raise AlphabetError("alphabet size above 2**16 is not codable")
        if self.quantizer.size > self.size:
            raise AlphabetError("quantizer emits more symbols than the alphabet holds")

    @property
    def bits_per_symbol(self) -> int:
        return (self.size - 1).bit_length()

    def quantize(self, raw: float) -> int:
        return int(self.quantizer.quantize_array(np.array([raw])).symbols[0])

    def dequantize(self, symbol: int) -> float:
        return float(self.quantizer.dequantize_array(np.array([symbol]))[0])

    def quantize_array(self, raw) -> QuantizeResult:
        return self.quantizer.quantize_array(raw)

    def dequantize_array(self, symbols) -> np.ndarray:
        return self.quantizer.dequantize_array(symbols)


def calibrate_alphabet(raw, size: int = 1024) -> SymbolAlphabet:
    """Build the alphabet for a dataset.

    Uses the exact dictionary quantizer when the data holds at most ``size``
    distinct values (quantization is then lossless on raw values), otherwise
    an affine quantizer over the observed range.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise AlphabetError("cannot calibrate on empty data")
    if not np.all(np.isfinite(raw)):
        raise AlphabetError("data contains non-finite values")
    if np.any(raw < 0):
        raise AlphabetError("traffic values must be nonnegative")
    distinct = np.unique(raw)
    if distinct.shape[0] <= size:
        quantizer = DictQuantizer(values=tuple(float(v) for v in distinct))
    else:
        quantizer = AffineQuantizer(lo=float(raw.min()), hi=float(raw.max()), size=size)
    return SymbolAlphabet(size=size, quantizer=quantizer)

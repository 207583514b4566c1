"""Bit-exact integer arithmetic coder driven by fixed-point symbol PMFs.

The coder uses 32-bit low/high registers and 16-bit frequency totals, so the
coding range always stays far above the frequency resolution and no underflow
is possible. Encoder and decoder are exact mirrors: given the same PMF
schedule they visit identical register states, which is what makes the
compressed stream decodable at all.
"""

from __future__ import annotations

import numpy as np

from .errors import CoderError, EndOfStreamError, PmfError

PMF_BITS = 16
PMF_TOTAL = 1 << PMF_BITS

STATE_BITS = 32
_FULL = 1 << STATE_BITS
_HALF = _FULL >> 1
_QUARTER = _FULL >> 2
_MASK = _FULL - 1

# Zero bytes appended after the terminator so a decoder can always prime its
# full register from real stream bytes. Part of the stream format.
GUARD_BYTES = 3


class SymbolPmf:
    """Quantized PMF over symbols 0..A-1 as cumulative fixed-point counts.

    ``cum`` has A+1 entries, cum[0] = 0, cum[A] = 2**16, strictly increasing:
    every symbol carries at least one count, so any symbol stays decodable no
    matter how confident the predictor was about the others.
    """

    __slots__ = ("cum",)

    def __init__(self, cum):
        cum = np.asarray(cum, dtype=np.int64)
        if cum.ndim != 1 or cum.shape[0] < 3:
            raise PmfError("cumulative table needs at least two symbols")
        if cum[0] != 0:
            raise PmfError("cumulative table must start at 0")
        if cum[-1] != PMF_TOTAL:
            raise PmfError(f"cumulative table must end at {PMF_TOTAL}, got {cum[-1]}")
        if not np.all(np.diff(cum) > 0):
            raise PmfError("cumulative table must be strictly increasing")
        self.cum = cum

    @property
    def num_symbols(self) -> int:
        return self.cum.shape[0] - 1

    def counts(self) -> np.ndarray:
        return np.diff(self.cum)

    def __eq__(self, other):
        return isinstance(other, SymbolPmf) and np.array_equal(self.cum, other.cum)

    def __hash__(self):
        return hash(self.cum.tobytes())

    def __repr__(self):
        return f"SymbolPmf(A={self.num_symbols})"


def quantize_pmf(probs) -> SymbolPmf:
    """Convert nonnegative reals to a valid SymbolPmf.

    Every symbol gets a floor of one count; the remaining 2**16 - A counts are
    apportioned by largest remainder (ties broken toward the lowest symbol
    index). Deterministic, and idempotent below the fixed-point resolution.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.shape[0] < 2:
        raise PmfError("need a 1-D array of at least two probabilities")
    if probs.shape[0] > PMF_TOTAL:
        raise PmfError(f"alphabet larger than {PMF_TOTAL} cannot get a count floor")
    if not np.all(np.isfinite(probs)):
        raise PmfError("probabilities must be finite")
    if np.any(probs < 0):
        raise PmfError("probabilities must be nonnegative")
    total = probs.sum()
    if total <= 0:
        raise PmfError("probabilities must not sum to zero")

    num = probs.shape[0]
    spare = PMF_TOTAL - num
    target = probs * (spare / total)
    base = np.floor(target).astype(np.int64)
    leftover = spare - int(base.sum())
    if leftover > 0:
        # stable sort keeps index order among equal remainders
        order = np.argsort(-(target - base), kind="stable")
        base[order[:leftover]] += 1
    counts = base + 1
    cum = np.zeros(num + 1, dtype=np.int64)
    np.cumsum(counts, out=cum[1:])
    return SymbolPmf(cum)


def uniform_pmf(num_symbols: int) -> SymbolPmf:
    """Uniform quantized PMF (exact equal counts for power-of-two alphabets)."""
    return quantize_pmf(np.ones(num_symbols))


class BitWriter:
    """Append-only bit buffer, most-significant-bit first within each byte."""

    __slots__ = ("_buf", "_acc", "_nacc")

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._nacc += 1
        if self._nacc == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def bit_length(self) -> int:
        return 8 * len(self._buf) + self._nacc

    def byte_length(self) -> int:
        return len(self._buf)

    def getvalue(self, pad: bool = True) -> bytes:
        """Current content; pads the last partial byte with zeros."""
        if self._nacc == 0:
            return bytes(self._buf)
        if not pad:
            raise CoderError("bit buffer not at a byte boundary")
        return bytes(self._buf) + bytes([self._acc << (8 - self._nacc)])

    def pad_to_byte(self) -> None:
        while self._nacc != 0:
            self.write_bit(0)


class BitReader:
    """Reads bits MSB-first; reads past the end yield zeros and are counted.

    The zero-fill convention is what lets the arithmetic decoder resolve its
    final symbols without the encoder having to pin down every register bit;
    ``overrun`` exposes how deep past the real payload the reads have gone.
    """

    __slots__ = ("_data", "_pos", "_nbits", "overrun")

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._nbits = 8 * len(data)
        self.overrun = 0

    def read_bit(self) -> int:
        pos = self._pos
        self._pos = pos + 1
        if pos >= self._nbits:
            self.overrun += 1
            return 0
        return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1

    def bits_read(self) -> int:
        return self._pos


class Encoder:
    """Arithmetic encoder state. One instance per output stream."""

    __slots__ = ("low", "high", "_pending", "_writer", "_finished")

    def __init__(self):
        self.low = 0
        self.high = _MASK
        self._pending = 0
        self._writer = BitWriter()
        self._finished = False

    def encode(self, pmf: SymbolPmf, symbol: int) -> None:
        if self._finished:
            raise CoderError("encode after finish")
        cum = pmf.cum
        if not 0 <= symbol < cum.shape[0] - 1:
            raise CoderError(f"symbol {symbol} outside alphabet of {cum.shape[0] - 1}")
        sym_low = int(cum[symbol])
        sym_high = int(cum[symbol + 1])

        span = self.high - self.low + 1
        self.high = self.low + (span * sym_high) // PMF_TOTAL - 1
        self.low = self.low + (span * sym_low) // PMF_TOTAL

        low = self.low
        high = self.high
        emit = self._emit
        while True:
            if high < _HALF:
                emit(0)
            elif low >= _HALF:
                emit(1)
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                self._pending += 1
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1
        self.low = low
        self.high = high

    def _emit(self, bit: int) -> None:
        w = self._writer
        w.write_bit(bit)
        inv = bit ^ 1
        for _ in range(self._pending):
            w.write_bit(inv)
        self._pending = 0

    def bytes_flushed(self) -> int:
        """Whole bytes materialized so far (streaming progress reporting)."""
        return self._writer.byte_length()

    def finish(self) -> bytes:
        """Terminate the stream: disambiguating bits, zero pad, guard bytes."""
        if self._finished:
            raise CoderError("finish called twice")
        self._pending += 1
        self._emit(0 if self.low < _QUARTER else 1)
        self._writer.pad_to_byte()
        self._finished = True
        return self._writer.getvalue() + b"\x00" * GUARD_BYTES


class Decoder:
    """Arithmetic decoder over a finished stream.

    ``symbol_limit`` is the caller's out-of-band knowledge of how many symbols
    the stream holds (an arithmetic-coded stream cannot mark its own end);
    decoding past it raises EndOfStreamError. Gross overreads - a truncated
    payload - are caught by the overrun guard even without a limit.
    """

    __slots__ = ("low", "high", "code", "_reader", "_decoded", "symbol_limit")

    def __init__(self, data: bytes, symbol_limit: int | None = None):
        if len(data) * 8 < STATE_BITS:
            raise CoderError("stream shorter than the coder register")
        self._reader = BitReader(data)
        self.low = 0
        self.high = _MASK
        code = 0
        for _ in range(STATE_BITS):
            code = (code << 1) | self._reader.read_bit()
        self.code = code
        self._decoded = 0
        self.symbol_limit = symbol_limit

    def decode(self, pmf: SymbolPmf) -> int:
        if self.symbol_limit is not None and self._decoded >= self.symbol_limit:
            raise EndOfStreamError("symbol limit reached")
        if self._reader.overrun >= STATE_BITS:
            raise EndOfStreamError("payload exhausted")
        cum = pmf.cum

        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * PMF_TOTAL - 1) // span
        symbol = int(np.searchsorted(cum, value, side="right")) - 1

        sym_low = int(cum[symbol])
        sym_high = int(cum[symbol + 1])
        self.high = self.low + (span * sym_high) // PMF_TOTAL - 1
        self.low = self.low + (span * sym_low) // PMF_TOTAL

        low = self.low
        high = self.high
        code = self.code
        read_bit = self._reader.read_bit
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
                code -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                low -= _QUARTER
                high -= _QUARTER
                code -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1
            code = (code << 1) | read_bit()
        self.low = low
        self.high = high
        self.code = code
        self._decoded += 1
        return symbol

    def symbols_decoded(self) -> int:
        return self._decoded

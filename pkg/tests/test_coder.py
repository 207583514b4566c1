import math

import numpy as np
import pytest

from trafficzip.coder import (
    PMF_TOTAL,
    BitReader,
    BitWriter,
    Decoder,
    Encoder,
    SymbolPmf,
    quantize_pmf,
    uniform_pmf,
)
from trafficzip.errors import CoderError, EndOfStreamError, PmfError


def cross_entropy_bits(schedule, symbols):
    """Independent oracle: ideal code length under the quantized PMFs."""
    total = 0.0
    for pmf, sym in zip(schedule, symbols):
        count = int(pmf.cum[sym + 1]) - int(pmf.cum[sym])
        total += -math.log2(count / PMF_TOTAL)
    return total


def random_pmf(rng, num_symbols):
    return quantize_pmf(rng.random(num_symbols) ** 3 + 1e-12)


def encode_all(schedule, symbols):
    enc = Encoder()
    for pmf, sym in zip(schedule, symbols):
        enc.encode(pmf, sym)
    return enc.finish()


def decode_all(data, schedule, limit=None):
    dec = Decoder(data, symbol_limit=limit)
    return [dec.decode(pmf) for pmf in schedule]


class TestSymbolPmf:
    def test_counts_roundtrip(self):
        pmf = quantize_pmf([1, 2, 3, 4])
        assert pmf.counts().sum() == PMF_TOTAL
        assert pmf.num_symbols == 4

    def test_rejects_bad_tables(self):
        with pytest.raises(PmfError):
            SymbolPmf([0, 5, 5, PMF_TOTAL])  # zero-width symbol
        with pytest.raises(PmfError):
            SymbolPmf([0, 10, PMF_TOTAL + 1])  # wrong total
        with pytest.raises(PmfError):
            SymbolPmf([1, 10, PMF_TOTAL])  # nonzero start
        with pytest.raises(PmfError):
            SymbolPmf([0, PMF_TOTAL])  # single symbol


class TestQuantizePmf:
    def test_uniform_exact_division(self):
        pmf = quantize_pmf([0.25, 0.25, 0.25, 0.25])
        assert list(pmf.counts()) == [16384, 16384, 16384, 16384]

    def test_point_mass_floor(self):
        pmf = quantize_pmf([1.0, 0.0, 0.0, 0.0])
        assert list(pmf.counts()) == [65533, 1, 1, 1]

    def test_remainder_tie_goes_to_lowest_index(self):
        # A=3: spare 65533 splits 21844.33.. each; single leftover -> index 0
        pmf = quantize_pmf([1.0, 1.0, 1.0])
        assert list(pmf.counts()) == [21846, 21845, 21845]

    def test_idempotent_below_resolution(self):
        a = np.array([0.5, 0.25, 0.125, 0.125])
        b = a + 1e-13
        assert quantize_pmf(a) == quantize_pmf(b)

    def test_rejects_bad_input(self):
        with pytest.raises(PmfError):
            quantize_pmf([0.5, float("nan")])
        with pytest.raises(PmfError):
            quantize_pmf([0.5, -0.1])
        with pytest.raises(PmfError):
            quantize_pmf([0.0, 0.0])
        with pytest.raises(PmfError):
            quantize_pmf([0.5, float("inf")])

    def test_always_valid_pmf(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 300))
            probs = rng.random(n) ** int(rng.integers(1, 6))
            pmf = quantize_pmf(probs)
            assert pmf.cum[0] == 0
            assert pmf.cum[-1] == PMF_TOTAL
            assert np.all(np.diff(pmf.cum) > 0)

    def test_uniform_pmf_power_of_two(self):
        for a in (2, 4, 256, 1024):
            counts = uniform_pmf(a).counts()
            assert counts.min() == counts.max() == PMF_TOTAL // a


class TestBitStream:
    def test_roundtrip_random_bits(self):
        rng = np.random.default_rng(3)
        bits = [int(b) for b in rng.integers(0, 2, 571)]
        w = BitWriter()
        for b in bits:
            w.write_bit(b)
        r = BitReader(w.getvalue())
        assert [r.read_bit() for b in bits] == bits

    def test_msb_first_layout(self):
        w = BitWriter()
        for b in (1, 0, 1):
            w.write_bit(b)
        assert w.getvalue() == bytes([0b10100000])

    def test_overrun_counting(self):
        r = BitReader(b"\xff")
        for _ in range(8):
            assert r.read_bit() == 1
        assert r.overrun == 0
        assert r.read_bit() == 0
        assert r.overrun == 1


class TestCoder:
    def test_encoder_init_full_range(self):
        enc = Encoder()
        assert enc.low == 0
        assert enc.high == 2**32 - 1

    def test_empty_stream_decodes_zero_symbols(self):
        data = Encoder().finish()
        assert len(data) <= 8
        dec = Decoder(data, symbol_limit=0)
        with pytest.raises(EndOfStreamError):
            dec.decode(uniform_pmf(4))

    def test_decoder_rejects_empty_or_short_stream(self):
        with pytest.raises(CoderError):
            Decoder(b"")
        with pytest.raises(CoderError):
            Decoder(b"\x00\x00\x00")

    def test_double_finish_rejected(self):
        enc = Encoder()
        enc.finish()
        with pytest.raises(CoderError):
            enc.finish()

    def test_encode_after_finish_rejected(self):
        enc = Encoder()
        enc.finish()
        with pytest.raises(CoderError):
            enc.encode(uniform_pmf(4), 1)

    def test_symbol_out_of_range_rejected(self):
        enc = Encoder()
        with pytest.raises(CoderError):
            enc.encode(uniform_pmf(4), 4)

    def test_uniform_256_costs_one_byte_per_symbol(self):
        rng = np.random.default_rng(11)
        pmf = uniform_pmf(256)
        symbols = [int(s) for s in rng.integers(0, 256, 1000)]
        data = encode_all([pmf] * 1000, symbols)
        assert abs(len(data) - 1000) <= 8

    def test_static_sequence_near_entropy(self):
        symbols = [3, 1, 4, 1, 5]
        hist = np.bincount(symbols, minlength=8).astype(float)
        pmf = quantize_pmf(hist)
        schedule = [pmf] * len(symbols)
        data = encode_all(schedule, symbols)
        assert len(data) * 8 <= cross_entropy_bits(schedule, symbols) + 64
        assert decode_all(data, schedule, limit=len(symbols)) == symbols

    def test_round_trip_random_schedules(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            num_symbols = int(rng.integers(2, 64))
            length = int(rng.integers(0, 400))
            schedule = [random_pmf(rng, num_symbols) for _ in range(length)]
            symbols = [int(s) for s in rng.integers(0, num_symbols, length)]
            data = encode_all(schedule, symbols)
            assert decode_all(data, schedule, limit=length) == symbols

    def test_near_optimality_random_schedules(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            num_symbols = int(rng.integers(2, 128))
            length = int(rng.integers(1, 600))
            schedule = [random_pmf(rng, num_symbols) for _ in range(length)]
            symbols = [int(s) for s in rng.integers(0, num_symbols, length)]
            data = encode_all(schedule, symbols)
            assert len(data) * 8 <= cross_entropy_bits(schedule, symbols) + 64

    def test_decode_past_end_raises(self):
        pmf = uniform_pmf(16)
        symbols = [1, 2, 3]
        data = encode_all([pmf] * 3, symbols)
        dec = Decoder(data, symbol_limit=3)
        assert [dec.decode(pmf) for _ in range(3)] == symbols
        with pytest.raises(EndOfStreamError):
            dec.decode(pmf)

    def test_truncated_payload_detected_by_overrun(self):
        rng = np.random.default_rng(23)
        pmf = uniform_pmf(256)
        symbols = [int(s) for s in rng.integers(0, 256, 500)]
        data = encode_all([pmf] * 500, symbols)
        dec = Decoder(data[:20])  # no symbol limit: rely on the overrun guard
        with pytest.raises(EndOfStreamError):
            for _ in range(500):
                dec.decode(pmf)

    def test_low_probability_symbol_costs_at_most_16_bits(self):
        pmf = quantize_pmf([1.0] + [0.0] * 1023)
        data = encode_all([pmf] * 10, [1023] * 10)
        # floor of 1/65536 caps the per-symbol cost at 16 bits
        assert len(data) * 8 <= 10 * 16 + 64

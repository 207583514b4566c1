"""The traffic tensor (time bins x links) and CSV ingestion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alphabet import SymbolAlphabet, calibrate_alphabet
from .errors import CsvFormatError
from .topology import Topology


@dataclass(frozen=True)
class TrafficTensor:
    """Integer symbol matrix; column j is topology link index j."""

    data: np.ndarray  # (T, l) int32 symbols in [0, alphabet.size)
    alphabet: SymbolAlphabet
    bin_duration: float = 300.0

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("tensor data must be 2-D (time x links)")
        if self.data.size and (
            self.data.min() < 0 or self.data.max() >= self.alphabet.size
        ):
            raise ValueError("symbols outside the alphabet")

    @property
    def num_bins(self) -> int:
        return self.data.shape[0]

    @property
    def num_links(self) -> int:
        return self.data.shape[1]

    def raw_size_bytes(self) -> int:
        """Canonical fixed-width size: T*l symbols at the alphabet bit width."""
        bits = self.num_bins * self.num_links * self.alphabet.bits_per_symbol
        return (bits + 7) // 8


def pack_symbols(tensor: TrafficTensor) -> bytes:
    """Fixed-width big-endian bit packing, row-major: the canonical raw bytes."""
    bits_per = tensor.alphabet.bits_per_symbol
    flat = tensor.data.reshape(-1).astype(np.int64)
    shifts = np.arange(bits_per - 1, -1, -1)
    bits = ((flat[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return np.packbits(bits).tobytes()


def unpack_symbols(data: bytes, num_bins: int, num_links: int, bits_per: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    n = num_bins * num_links
    bits = bits[: n * bits_per].reshape(n, bits_per).astype(np.int64)
    weights = 1 << np.arange(bits_per - 1, -1, -1)
    return (bits * weights).sum(axis=1).astype(np.int32).reshape(num_bins, num_links)


def parse_traffic_csv(text: str):
    """Parse the traffic CSV: header of link ids, one numeric row per bin.

    Returns (header, float matrix). Errors carry the 1-based row/column of
    the offending cell.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CsvFormatError("empty traffic CSV")
    header = [h.strip() for h in lines[0].split(",")]
    width = len(header)
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise CsvFormatError(
                f"row {r} has {len(cells)} columns, header has {width}", row=r
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            for c, cell in enumerate(cells, start=1):
                try:
                    float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"non-numeric cell at row {r}, column {c}: {cell.strip()!r}",
                        row=r,
                        col=c,
                    ) from None
            raise
    if not rows:
        raise CsvFormatError("traffic CSV has a header but no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def ingest_csv(
    path,
    topology: Topology,
    alphabet_size: int = 1024,
    bin_duration: float = 300.0,
) -> TrafficTensor:
    """Load a traffic CSV for a topology, calibrating the alphabet quantizer.

    The column order must match the topology's canonical link order; when the
    header uses ``src>dst`` link ids they are checked against it.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header, raw = parse_traffic_csv(fh.read())
    if len(header) != topology.num_links:
        raise CsvFormatError(
            f"CSV has {len(header)} columns but topology '{topology.name}' "
            f"has {topology.num_links} links"
        )
    expected = topology.link_ids()
    if all(">" in h for h in header) and header != expected:
        raise CsvFormatError("CSV link-id header does not match the canonical link order")
    alphabet = calibrate_alphabet(raw, size=alphabet_size)
    result = alphabet.quantize_array(raw)
    return TrafficTensor(data=result.symbols, alphabet=alphabet, bin_duration=bin_duration)


def write_csv(path, topology: Topology, raw_matrix) -> None:
    """Write raw (unquantized) traffic values in the standard CSV layout."""
    raw_matrix = np.asarray(raw_matrix)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(topology.link_ids()) + "\n")
        for row in raw_matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def tensor_to_csv_bytes(tensor: TrafficTensor, topology: Topology) -> bytes:
    """Symbol-integer CSV serialization (the text form DEFLATE baselines see)."""
    out = [",".join(topology.link_ids())]
    for row in tensor.data:
        out.append(",".join(str(int(v)) for v in row))
    return ("\n".join(out) + "\n").encode()

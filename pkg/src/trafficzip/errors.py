"""Exception types shared across the package."""


class TrafficzipError(Exception):
    """Base class for all errors raised by trafficzip."""


class TopologyError(TrafficzipError):
    """Invalid topology definition or topology file."""


class CsvFormatError(TrafficzipError):
    """Malformed traffic CSV. Carries the offending location when known."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class PmfError(TrafficzipError):
    """Invalid probability input or malformed quantized PMF."""


class CoderError(TrafficzipError):
    """Arithmetic coder misuse (bad stream, double finish, ...)."""


class EndOfStreamError(CoderError):
    """Decoder asked for a symbol beyond the encoded stream."""


class ModelError(TrafficzipError):
    """Invalid model context, architecture, or model file."""


class TrainingDivergedError(TrafficzipError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch=None, batch=None, history=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.history = history or []


class CodecError(TrafficzipError):
    """Compression/decompression precondition violated."""


class ContainerError(TrafficzipError):
    """Malformed compressed container."""


class ChecksumMismatchError(ContainerError):
    """Container header does not match the supplied topology or model."""


class DecodeError(ContainerError):
    """Decoding failed mid-payload. Carries the bin/link position."""

    def __init__(self, message, time_bin=None, link=None):
        super().__init__(message)
        self.time_bin = time_bin
        self.link = link

"""Adapter for self-terminating general-purpose byte compressors."""

from __future__ import annotations

import bz2
import lzma
import threading
import zlib
from dataclasses import dataclass

import numpy as np

from ..model import SampleSequence
from ._arith import put_gamma
from .base import Codec, DecodeError, header_length


def _raw_deflate(data: bytes) -> bytes:
    # bare DEFLATE stream: no zlib header or checksum
    c = zlib.compressobj(9, zlib.DEFLATED, -15)
    return c.compress(data) + c.flush()


# name -> (compress, decompressor factory)
COMPRESSORS = {
    "zlib": (lambda b: zlib.compress(b, 9), zlib.decompressobj),
    "deflate": (_raw_deflate, lambda: zlib.decompressobj(-15)),
    "bz2": (lambda b: bz2.compress(b, 9), bz2.BZ2Decompressor),
    "lzma": (lambda b: lzma.compress(b, preset=9), lzma.LZMADecompressor),
}

PACKINGS = ("fixed",)

# compressor objects are not assumed reentrant; one lock per backend
_LOCKS = {name: threading.Lock() for name in COMPRESSORS}


@dataclass(frozen=True, eq=False)
class ExternalByteCompressor(Codec):
    """Frame = header + the compressor's output bytes (8 bits each).

    256-letter alphabets map one symbol to one byte. Other alphabets need
    ``packing="fixed"``: symbols are written as ``ceil(log2 |A|)``-bit fields,
    MSB first, and the bit string is zero-padded to whole bytes.
    """

    name: str = "zlib"
    packing: str | None = None
    kind = "ext"

    def __post_init__(self):
        if self.name not in COMPRESSORS:
            raise ValueError(f"unknown compressor {self.name!r}; choose from {sorted(COMPRESSORS)}")
        if self.packing is not None and self.packing not in PACKINGS:
            raise ValueError(f"unknown packing {self.packing!r}")
        if self.alphabet.size != 256 and self.packing is None:
            raise ValueError(
                f"ext:{self.name} needs a 256-letter alphabet or packing='fixed' (got size {self.alphabet.size})"
            )

    @property
    def descriptor(self):
        return f"ext:{self.name}" + (f",packing={self.packing}" if self.packing else "")

    def _to_bytes(self, x: SampleSequence) -> bytes:
        if self.packing is None:
            return x.symbols.astype(np.uint8).tobytes()
        w = self.alphabet.symbol_bits
        shifts = np.arange(w - 1, -1, -1, dtype=np.int64)
        bits = ((x.symbols.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8).ravel()
        return np.packbits(bits).tobytes()

    def _from_bytes(self, raw: bytes, t: int, pos: int) -> np.ndarray:
        data = np.frombuffer(raw, dtype=np.uint8)
        if self.packing is None:
            sym = data.astype(np.int64)
        else:
            w = self.alphabet.symbol_bits
            bits = np.unpackbits(data)[: t * w]
            if bits.size < t * w:
                raise DecodeError("decompressed payload too short", pos)
            sym = bits.reshape(-1, w).astype(np.int64) @ (1 << np.arange(w - 1, -1, -1, dtype=np.int64))
        if sym.size != t:
            raise DecodeError(f"decompressed payload holds {sym.size} symbols, header says {t}", pos)
        return sym

    def compressed(self, x: SampleSequence) -> bytes:
        compress, _ = COMPRESSORS[self.name]
        with _LOCKS[self.name]:
            return compress(self._to_bytes(x))

    def _frame(self, x, emit):
        body = self.compressed(x)
        hdr = header_length(self.alphabet.size, x.length)
        if not emit:
            return hdr + 8 * len(body)
        est = np.zeros(4, dtype=np.int64)
        buf = np.empty(hdr + 8, dtype=np.uint8)
        buf = put_gamma(buf, est, self.alphabet.size, True)
        buf = put_gamma(buf, est, x.length + 1, True)
        return np.concatenate([buf[: est[3]], np.unpackbits(np.frombuffer(body, dtype=np.uint8))])

    def _decode_frame(self, bits, pos):
        t, off = self._read_header(bits, pos)
        raw = np.packbits(bits[off:]).tobytes()
        _, factory = COMPRESSORS[self.name]
        with _LOCKS[self.name]:
            dec = factory()
            try:
                payload = dec.decompress(raw)
            except (zlib.error, OSError, lzma.LZMAError, EOFError) as exc:
                raise DecodeError(f"{self.name} stream error: {exc}", off) from None
            if not dec.eof:
                raise DecodeError(f"{self.name} stream ends inside a frame", bits.shape[0])
            used = len(raw) - len(dec.unused_data)
        end = off + 8 * used
        if end > bits.shape[0]:
            raise DecodeError(f"{self.name} stream ends inside a frame", bits.shape[0])
        return self._sequence(self._from_bytes(payload, t, pos), pos), end

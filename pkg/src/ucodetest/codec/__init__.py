"""Uniquely decodable universal codes with exact bit-length accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Alphabet, SampleSequence
from ._kernels import ceil_log2
from .base import Codec, Codeword, DecodeError, as_bits, header_length
from .external import COMPRESSORS, ExternalByteCompressor
from .internal import CTW, KT, LZ78, kt_ideal_neg_log, lz78_phrase_count


@dataclass(frozen=True, eq=False)
class Battery(Codec):
    """Best of several codecs: a fixed-width selector, then that codec's frame.

    Its length is ``min_i |code_i(x)| + ceil(log2 #codecs)``, so it stays a
    uniquely decodable code and a test using it keeps its level.
    """

    codecs: tuple = ()
    kind = "battery"

    def __post_init__(self):
        if not self.codecs:
            raise ValueError("battery needs at least one codec")
        for c in self.codecs:
            if c.alphabet.size != self.alphabet.size:
                raise ValueError("battery members must share the alphabet")

    @property
    def selector_bits(self) -> int:
        return int(ceil_log2(len(self.codecs)))

    @property
    def descriptor(self):
        return "+".join(c.descriptor for c in self.codecs)

    def member_lengths(self, x: SampleSequence) -> list[int]:
        return [c.code_length_bits(x) for c in self.codecs]

    def _frame(self, x, emit):
        lengths = self.member_lengths(x)
        best = int(np.argmin(lengths))
        if not emit:
            return lengths[best] + self.selector_bits
        sel = [(best >> j) & 1 for j in range(self.selector_bits - 1, -1, -1)]
        return np.concatenate([np.array(sel, dtype=np.uint8), self.codecs[best].encode(x).bits])

    def _decode_frame(self, bits, pos):
        w = self.selector_bits
        if pos + w > bits.shape[0]:
            raise DecodeError("stream ends inside a battery selector", bits.shape[0])
        idx = 0
        for b in bits[pos : pos + w].tolist():
            idx = (idx << 1) | b
        if idx >= len(self.codecs):
            raise DecodeError(f"battery selector {idx} out of range", pos)
        return self.codecs[idx]._decode_frame(bits, pos + w)


def _parse_one(desc: str, alphabet: Alphabet) -> Codec:
    kind, _, rest = desc.strip().partition(":")
    opts = {}
    flags = set()
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = part.partition("=")
        if eq:
            opts[key] = value
        else:
            flags.add(key)
    kind = kind.lower()
    if kind == "kt":
        return KT(alphabet, int(opts.pop("k", 0)))
    if kind == "ctw":
        return CTW(alphabet, int(opts.pop("d", 3)), binary=bool(flags & {"bin", "binary"}))
    if kind == "lz78":
        return LZ78(alphabet)
    if kind == "ext":
        # rest is "NAME[,packing=...]"
        name = next(iter(flags), None) or opts.get("name", "zlib")
        packing = opts.get("packing")
        if packing is None and alphabet.size != 256:
            packing = "fixed"
        return ExternalByteCompressor(alphabet, name, packing if packing != "none" else None)
    raise ValueError(f"unknown codec {desc!r}")


def parse_codec(desc: str, alphabet: Alphabet | int) -> Codec:
    """Build a codec from a descriptor.

    ``kt:k=K``, ``ctw:d=D`` (``ctw:d=D,bin`` for the bitwise tree), ``lz78``,
    ``ext:NAME`` (zlib, deflate, bz2, lzma). Several descriptors joined by
    ``+`` form a :class:`Battery`. For ``ext`` on a non-256 alphabet the
    fixed-width packing is implied.
    """
    if isinstance(alphabet, int):
        alphabet = Alphabet(alphabet)
    parts = [p for p in desc.split("+") if p.strip()]
    if not parts:
        raise ValueError("empty codec descriptor")
    codecs = tuple(_parse_one(p, alphabet) for p in parts)
    return codecs[0] if len(codecs) == 1 else Battery(alphabet, codecs)


def encode(codec: Codec, x: SampleSequence) -> Codeword:
    return codec.encode(x)


def decode(codec: Codec, stream) -> list[SampleSequence]:
    return codec.decode(stream)


def code_length_bits(codec: Codec, x: SampleSequence) -> int:
    return codec.code_length_bits(x)


__all__ = [
    "Battery",
    "COMPRESSORS",
    "CTW",
    "Codec",
    "Codeword",
    "DecodeError",
    "ExternalByteCompressor",
    "KT",
    "LZ78",
    "as_bits",
    "code_length_bits",
    "decode",
    "encode",
    "header_length",
    "kt_ideal_neg_log",
    "lz78_phrase_count",
    "parse_codec",
]

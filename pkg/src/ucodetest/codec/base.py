"""Codewords, frame headers and the codec interface.

Every codec writes self-delimiting frames::

    gamma(alphabet_size) gamma(t + 1) payload

where ``gamma`` is the Elias gamma code (``floor(log2 v)`` zeros followed by
``v`` in binary). Frames can be concatenated and decoded back one by one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Iterable

import numpy as np
from numba import njit

from ..model import Alphabet, SampleSequence
from ._arith import get_gamma, put_gamma

# refuse to allocate for corrupt headers claiming absurd lengths
MAX_FRAME_SYMBOLS = 1 << 34


class DecodeError(ValueError):
    """Malformed or truncated bit stream; ``offset`` is the bit position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (bit offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class Codeword:
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or (arr.size and arr.max() > 1):
            raise ValueError("codeword bits must be a flat 0/1 array")
        object.__setattr__(self, "bits", arr)

    @property
    def length(self) -> int:
        return int(self.bits.shape[0])

    def __len__(self):
        return self.length

    def __add__(self, other: "Codeword") -> "Codeword":
        return Codeword(np.concatenate([self.bits, other.bits]))

    def __eq__(self, other):
        return isinstance(other, Codeword) and np.array_equal(self.bits, other.bits)

    def __str__(self):
        return "".join("01"[b] for b in self.bits)

    @classmethod
    def concat(cls, words: Iterable["Codeword"]) -> "Codeword":
        parts = [w.bits for w in words]
        return cls(np.concatenate(parts) if parts else np.zeros(0, np.uint8))

    @classmethod
    def from_string(cls, text: str) -> "Codeword":
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_bytes(self) -> bytes:
        """MSB-first packing; the final byte is zero-padded."""
        return np.packbits(self.bits).tobytes()


@njit(cache=True)
def _write_header(buf, est, asize, t, emit):
    buf = put_gamma(buf, est, asize, emit)
    return put_gamma(buf, est, t + 1, emit)


def gamma_length(value: int) -> int:
    return 2 * (int(value).bit_length() - 1) + 1


def header_length(asize: int, t: int) -> int:
    return gamma_length(asize) + gamma_length(t + 1)


def as_bits(stream) -> np.ndarray:
    if isinstance(stream, Codeword):
        return stream.bits
    if isinstance(stream, str):
        return Codeword.from_string(stream).bits
    return Codeword(np.asarray(stream)).bits


@dataclass(frozen=True, eq=False)
class Codec:
    """A uniquely decodable code over ``alphabet``."""

    alphabet: Alphabet
    kind: ClassVar[str] = "abstract"

    @property
    def descriptor(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.descriptor

    def _check(self, x: SampleSequence):
        if x.alphabet.size != self.alphabet.size:
            raise ValueError(
                f"{self.descriptor}: sequence alphabet size {x.alphabet.size} != codec alphabet size {self.alphabet.size}"
            )

    def _frame(self, x: SampleSequence, emit: bool):
        """Encode one frame; returns the bit array (emit) or its length."""
        raise NotImplementedError

    def encode(self, x: SampleSequence) -> Codeword:
        self._check(x)
        return Codeword(self._frame(x, True))

    def code_length_bits(self, x: SampleSequence) -> int:
        self._check(x)
        return int(self._frame(x, False))

    def _decode_frame(self, bits: np.ndarray, pos: int) -> tuple[SampleSequence, int]:
        raise NotImplementedError

    def _read_header(self, bits: np.ndarray, pos: int) -> tuple[int, int]:
        """Returns (t, payload offset)."""
        dst = np.zeros(7, dtype=np.int64)
        dst[3] = pos
        asize = get_gamma(bits, dst)
        if asize < 0:
            raise DecodeError("truncated or malformed frame header", pos)
        if asize != self.alphabet.size:
            raise DecodeError(f"frame alphabet size {asize} does not match codec ({self.alphabet.size})", pos)
        t1 = get_gamma(bits, dst)
        if t1 < 1:
            raise DecodeError("truncated or malformed frame header", pos)
        if t1 - 1 > MAX_FRAME_SYMBOLS:
            raise DecodeError(f"implausible frame length {t1 - 1}", pos)
        return int(t1 - 1), int(dst[3])

    def decode(self, stream) -> list[SampleSequence]:
        """Split a concatenation of frames back into the encoded sequences."""
        bits = as_bits(stream)
        pos = 0
        out = []
        while pos < bits.shape[0]:
            seq, pos = self._decode_frame(bits, pos)
            out.append(seq)
        return out

    def _sequence(self, symbols: np.ndarray, pos: int) -> SampleSequence:
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.alphabet.size):
            raise DecodeError("decoded symbol outside the alphabet", pos)
        return SampleSequence(self.alphabet, symbols)

"""Arithmetic-coded KT and CTW codecs, and the LZ78 incremental-parsing code."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..entropy import joint_counts
from ..model import SampleSequence
from . import _kernels as K
from .base import Codec, DecodeError, _write_header

_EMPTY_BITS = np.zeros(0, dtype=np.uint8)


def _start(t: int, emit: bool):
    est = np.zeros(4, dtype=np.int64)
    buf = np.empty(max(64, t // 2) if emit else 1, dtype=np.uint8)
    return buf, est


def _to_binary(symbols: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((symbols.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _from_binary(bits: np.ndarray, width: int) -> np.ndarray:
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, width).astype(np.int64) @ weights


class _ArithCodec(Codec):
    """Shared frame logic for the arithmetic-coded models."""

    def _model_input(self, x: SampleSequence) -> tuple[np.ndarray, int]:
        return x.symbols, x.length

    def _payload(self, sym, n, mode, bits, dst, est, buf):
        raise NotImplementedError

    def _frame(self, x: SampleSequence, emit: bool):
        sym, n = self._model_input(x)
        buf, est = _start(n, emit)
        buf = _write_header(buf, est, self.alphabet.size, x.length, emit)
        mode = K.EMIT if emit else K.COUNT
        buf = self._payload(sym, n, mode, _EMPTY_BITS, np.zeros(7, np.int64), est, buf)
        return buf[: est[3]].copy() if emit else int(est[3])

    def _model_output(self, out: np.ndarray, pos: int) -> np.ndarray:
        return out

    def _decode_frame(self, bits, pos):
        t, off = self._read_header(bits, pos)
        n = self._model_symbols(t)
        dst = np.zeros(7, dtype=np.int64)
        dst[3] = off
        out = self._payload(np.zeros(0, np.uint8), n, K.DECODE, bits, dst, np.zeros(4, np.int64), _EMPTY_BITS)
        end = int(dst[3])
        if end > bits.shape[0]:
            raise DecodeError("stream ends inside a frame", bits.shape[0])
        seq = self._sequence(self._model_output(out, pos), pos)
        # only canonical frames are accepted: a corrupt or truncated payload can
        # still steer the decoder to some sequence, but never to one that
        # re-encodes to exactly these bits
        if not np.array_equal(self._frame(seq, True), bits[pos:end]):
            raise DecodeError("frame is not a valid codeword (corrupt or truncated)", pos)
        return seq, end

    def _model_symbols(self, t: int) -> int:
        return t


@dataclass(frozen=True, eq=False)
class KT(_ArithCodec):
    """Order-``k`` Krichevsky-Trofimov code.

    The first ``k`` symbols are coded uniformly; afterwards symbol ``a`` in
    context ``v`` gets probability ``(count(va) + 1/2) / (count(v) + |A|/2)``,
    represented exactly as the integer ratio ``(2 count(va) + 1) / (2 count(v) + |A|)``.
    Once a context total would exceed 2**31 the frequencies are halved
    (integer shifts) until they fit, which keeps the code symmetric in the labels.
    """

    k: int = 0
    kind = "kt"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("KT order must be >= 0")
        if self.k * math.log2(self.alphabet.size) > 62:
            raise ValueError("KT context does not fit 62 bits; reduce k")

    @property
    def descriptor(self):
        return f"kt:k={self.k}"

    def _payload(self, sym, n, mode, bits, dst, est, buf):
        n_rows = min(n + 1, self.alphabet.size**self.k)
        buf, out = K.kt_run(sym, n, self.alphabet.size, self.k, n_rows, mode, bits, dst, est, buf)
        return out if mode == K.DECODE else buf


@dataclass(frozen=True, eq=False)
class CTW(_ArithCodec):
    """Context-tree weighting of KT estimators over context depths 0..depth.

    With ``binary=True`` each symbol is expanded to ``ceil(log2 |A|)`` bits
    (MSB first) and the bit stream is coded by a binary context tree.
    """

    depth: int = 3
    binary: bool = False
    kind = "ctw"

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("CTW depth must be >= 0")

    @property
    def descriptor(self):
        return f"ctw:d={self.depth}" + (",bin" if self.binary else "")

    def _model_input(self, x):
        if self.binary:
            return _to_binary(x.symbols, self.alphabet.symbol_bits), x.length * self.alphabet.symbol_bits
        return x.symbols, x.length

    def _model_symbols(self, t):
        return t * self.alphabet.symbol_bits if self.binary else t

    def _model_output(self, out, pos):
        if self.binary:
            return _from_binary(out, self.alphabet.symbol_bits)
        return out

    def _payload(self, sym, n, mode, bits, dst, est, buf):
        asize = 2 if self.binary else self.alphabet.size
        buf, out = K.ctw_run(sym, n, asize, self.depth, mode, bits, dst, est, buf)
        return out if mode == K.DECODE else buf


@dataclass(frozen=True, eq=False)
class LZ78(Codec):
    """LZ78 incremental parsing with fixed-width phrase indices and literals."""

    kind = "lz78"

    @property
    def descriptor(self):
        return "lz78"

    def _frame(self, x, emit):
        buf, est = _start(x.length, emit)
        buf = _write_header(buf, est, self.alphabet.size, x.length, emit)
        mode = K.EMIT if emit else K.COUNT
        buf, _, _ = K.lz78_run(x.symbols, x.length, self.alphabet.size, mode, _EMPTY_BITS, np.zeros(7, np.int64), est, buf)
        return buf[: est[3]].copy() if emit else int(est[3])

    def _decode_frame(self, bits, pos):
        t, off = self._read_header(bits, pos)
        dst = np.zeros(7, dtype=np.int64)
        dst[3] = off
        _, out, status = K.lz78_run(
            np.zeros(0, np.uint8), t, self.alphabet.size, K.DECODE, bits, dst, np.zeros(4, np.int64), _EMPTY_BITS
        )
        end = int(dst[3])
        if end > bits.shape[0]:
            raise DecodeError("stream ends inside a frame", bits.shape[0])
        if status != K.OK:
            raise DecodeError("corrupt LZ78 phrase", end)
        return self._sequence(out, pos), end


def lz78_phrase_count(x: SampleSequence) -> int:
    """Number of phrases in the incremental parsing of ``x`` (trailing partial phrase included)."""
    seen = set()
    cur: tuple = ()
    count = 0
    for s in x.symbols.tolist():
        cur = cur + (s,)
        if cur not in seen:
            seen.add(cur)
            count += 1
            cur = ()
    return count + (1 if cur else 0)


def kt_ideal_neg_log(x: SampleSequence, k: int) -> float:
    """-log2 of the sequential order-``k`` KT probability of ``x``.

    The first ``k`` symbols cost ``log2 |A|`` each. Within a context seen ``n``
    times with symbol counts ``c_a`` the sequential product telescopes to
    ``prod_a Gamma(c_a + 1/2) / Gamma(1/2) * Gamma(|A|/2) / Gamma(n + |A|/2)``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    n, t = x.alphabet.size, x.length
    if t == 0:
        return 0.0
    head = min(k, t) * math.log2(n)
    if t <= k:
        return head
    counts = joint_counts(x, k)
    ln = 0.0
    half = math.lgamma(0.5)
    base = math.lgamma(n / 2)
    for row in counts.values():
        tot = int(row.sum())
        ln += base - math.lgamma(tot + n / 2)
        for c in row[row > 0].tolist():
            ln += math.lgamma(c + 0.5) - half
    return head - ln / math.log(2)

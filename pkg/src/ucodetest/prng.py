"""Linear congruential generators, octet extraction and seeded bit streams.

Seeded randomness uses Philox4x64-10 (counter-based): trial ``i`` of a run
with master seed ``s`` draws from the key ``(s mod 2**64, i)`` with the
counter starting at zero, so any trial can be regenerated on its own.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import Alphabet, SampleSequence

OCTETS = Alphabet(256)


class ExtractionMode(str, enum.Enum):
    TOP8 = "top8"
    PAPER_LITERAL = "paper-literal"
    MOD256 = "mod256"


@dataclass(frozen=True)
class LcgSpec:
    M: int
    A: int
    C: int
    X0: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("modulus must be >= 2")
        for name in ("A", "C", "X0"):
            v = getattr(self, name)
            if not 0 <= v < self.M:
                raise ValueError(f"{name}={v} must satisfy 0 <= {name} < M")

    def __str__(self):
        return f"LCG({self.M},{self.A},{self.C},{self.X0})"


# the four generators of the PRNG experiment
TABLE1_GENERATORS = (
    LcgSpec(10**8 + 1, 23, 0, 47594118),
    LcgSpec(2**31, 2**16 + 3, 0, 1),
    LcgSpec(2**32, 134775813, 1, 0),
    LcgSpec(2**32, 69069, 0, 1),
)


def parse_int(text: str | int) -> int:
    """Integer in decimal, ``2^k``, ``2**k`` or sums/differences thereof (``2^16+3``, ``10^8+1``)."""
    if isinstance(text, int):
        return text
    s = text.replace(" ", "").replace("**", "^")
    if not re.fullmatch(r"[+-]?\d+(\^\d+)?([+-]\d+(\^\d+)?)*", s):
        raise ValueError(f"cannot parse integer {text!r}")
    total = 0
    for sign, base, exp in re.findall(r"([+-]?)(\d+)(?:\^(\d+))?", s):
        v = int(base) ** int(exp) if exp else int(base)
        total += -v if sign == "-" else v
    return total


@njit(cache=True)
def _lcg_u64(m, a, c, x, count):
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        x = (a * x + c) % m
        out[i] = x
    return out, x


def lcg_stream(spec: LcgSpec, count: int, start: int | None = None) -> list[int]:
    """``X_1 .. X_count`` with ``X_{n+1} = (A X_n + C) mod M``, exact integers."""
    if count < 0:
        raise ValueError("count must be >= 0")
    x = spec.X0 if start is None else start
    if spec.A * (spec.M - 1) + spec.C < 2**64:
        arr, _ = _lcg_u64(np.uint64(spec.M), np.uint64(spec.A), np.uint64(spec.C), np.uint64(x), count)
        return [int(v) for v in arr]
    out = []
    for _ in range(count):
        x = (spec.A * x + spec.C) % spec.M
        out.append(x)
    return out


def _lcg_array(spec: LcgSpec, count: int, start: int) -> tuple[np.ndarray, int]:
    if spec.A * (spec.M - 1) + spec.C < 2**64:
        arr, last = _lcg_u64(np.uint64(spec.M), np.uint64(spec.A), np.uint64(spec.C), np.uint64(start), count)
        return arr, int(last)
    vals = lcg_stream(spec, count, start)
    return np.array(vals, dtype=object), (vals[-1] if vals else start)


def extract_octets(values, M: int, mode: ExtractionMode | str = ExtractionMode.TOP8) -> SampleSequence:
    """One octet per value below ``256 * (M // 256)``; larger values are dropped.

    ``top8`` maps X to ``X // mu`` (``mu = M // 256``), ``paper-literal`` to the
    low byte of ``X // 256`` and ``mod256`` to ``X % 256``.
    """
    mode = ExtractionMode(mode)
    mu = M // 256
    if mu == 0:
        raise ValueError(f"modulus {M} < 256: no octet can be extracted")
    vals = np.asarray(values, dtype=object if M > 2**63 else np.int64)
    vals = vals[vals < 256 * mu]
    if mode is ExtractionMode.TOP8:
        out = vals // mu
    elif mode is ExtractionMode.PAPER_LITERAL:
        out = (vals // 256) % 256
    else:
        out = vals % 256
    return SampleSequence(OCTETS, np.asarray(out, dtype=np.int64))


def lcg_octets(spec: LcgSpec, n_octets: int, mode: ExtractionMode | str = ExtractionMode.TOP8) -> SampleSequence:
    """The first ``n_octets`` retained octets of the generator's output."""
    mu = spec.M // 256
    if mu == 0:
        raise ValueError(f"modulus {spec.M} < 256: no octet can be extracted")
    keep_rate = 256 * mu / spec.M
    parts = []
    have = 0
    x = spec.X0
    while have < n_octets:
        need = int((n_octets - have) / keep_rate * 1.01) + 16
        vals, x = _lcg_array(spec, need, x)
        seq = extract_octets(vals, spec.M, mode)
        parts.append(seq.symbols)
        have += seq.length
    return SampleSequence(OCTETS, np.concatenate(parts)[:n_octets])


def octets_to_bits(x: SampleSequence) -> SampleSequence:
    """MSB-first bit expansion of an octet sequence."""
    return SampleSequence(Alphabet(2), np.unpackbits(x.symbols.astype(np.uint8)))


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for trial ``index`` under master ``seed``."""
    key = np.array([seed % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_bits(seed: int, n: int, index: int = 0) -> SampleSequence:
    """``n`` fair bits: the raw 64-bit Philox outputs, least significant bit first."""
    if n < 0:
        raise ValueError("n must be >= 0")
    bitgen = np.random.Philox(key=np.array([seed % 2**64, index % 2**64], dtype=np.uint64))
    words = np.asarray(bitgen.random_raw((n + 63) // 64), dtype="<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n]
    return SampleSequence(Alphabet(2), bits)

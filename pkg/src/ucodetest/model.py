"""Alphabets, sample sequences and finite-memory (Markov) sources.

All code lengths and log-probabilities are in bits. A context word of a
memory-``s`` source is indexed as a base-``n`` integer with the oldest symbol
most significant, so the context preceding ``x[i]`` is
``x[i-s] * n**(s-1) + ... + x[i-1]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

ROW_TOL = 1e-12
IMPOSSIBLE = math.inf


class ValidationError(ValueError):
    """A source description violates the probability-table invariants."""


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("number of labels does not match alphabet size")

    @property
    def dtype(self):
        return np.uint8 if self.size <= 256 else np.int32

    @property
    def symbol_bits(self) -> int:
        """Width of a fixed-length binary code for one symbol."""
        return (self.size - 1).bit_length()


@dataclass(frozen=True, eq=False)
class SampleSequence:
    """A finite word over ``alphabet``; symbols are the integers 0..size-1."""

    alphabet: Alphabet
    symbols: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.symbols)
        if arr.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet.size):
            raise ValueError(f"symbol out of range for alphabet of size {self.alphabet.size}")
        arr = np.ascontiguousarray(arr, dtype=self.alphabet.dtype)
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)

    @classmethod
    def from_string(cls, text: str, size: int = 2) -> "SampleSequence":
        """Build from a digit string such as ``"0110"``."""
        return cls(Alphabet(size), np.array([int(c, 36) for c in text], dtype=np.int64))

    @property
    def length(self) -> int:
        return int(self.symbols.shape[0])

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, SampleSequence):
            return NotImplemented
        return self.alphabet.size == other.alphabet.size and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.alphabet.size, self.symbols.tobytes()))

    def __str__(self):
        if self.alphabet.size <= 36:
            return "".join(np.base_repr(int(s), 36).lower() for s in self.symbols[:64]) + (
                "..." if self.length > 64 else ""
            )
        return repr(self)


@dataclass(frozen=True, eq=False)
class FiniteMemorySource:
    """A Markov source of order ``order`` over ``alphabet``.

    ``initial`` is the law of the first ``order`` symbols (shape ``n**order``),
    ``transitions`` has one row per context (shape ``(n**order, n)``).
    """

    alphabet: Alphabet
    order: int
    initial: np.ndarray = field(repr=False)
    transitions: np.ndarray = field(repr=False)
    name: str | None = None

    @property
    def n_contexts(self) -> int:
        return self.alphabet.size ** self.order

    def relabel(self, perm: Sequence[int]) -> "FiniteMemorySource":
        """The same source with symbol ``a`` renamed to ``perm[a]``."""
        n, s = self.alphabet.size, self.order
        perm = np.asarray(perm)
        words = np.arange(self.n_contexts)
        digits = np.stack([(words // n ** (s - 1 - j)) % n for j in range(s)], axis=1) if s else None
        new_idx = (perm[digits] @ (n ** np.arange(s - 1, -1, -1))) if s else np.zeros(1, dtype=np.int64)
        initial = np.empty_like(self.initial)
        transitions = np.empty_like(self.transitions)
        if s:
            initial[new_idx] = self.initial
        else:
            initial = self.initial.copy()
        transitions[np.ix_(new_idx, perm)] = self.transitions
        return FiniteMemorySource(self.alphabet, s, initial, transitions)


def _check_row(row: np.ndarray, where: str):
    if np.any(row < 0) or not np.all(np.isfinite(row)):
        raise ValidationError(f"{where}: probabilities must be finite and nonnegative")
    total = math.fsum(row.tolist())
    if abs(total - 1.0) > ROW_TOL:
        raise ValidationError(f"{where}: probabilities sum to {total!r}, not 1")


def context_label(index: int, size: int, order: int) -> str:
    """Context string for a context index: digits for n <= 10, else comma-separated."""
    digits = [(index // size ** (order - 1 - j)) % size for j in range(order)]
    sep = "" if size <= 10 else ","
    return sep.join(str(d) for d in digits)


def _parse_context(label: str, size: int, order: int) -> int:
    parts = label.split(",") if (size > 10 or "," in label) else list(label)
    parts = [p for p in (q.strip() for q in parts) if p != ""]
    if len(parts) != order:
        raise ValidationError(f"context {label!r} does not have length {order}")
    idx = 0
    for p in parts:
        d = int(p)
        if not 0 <= d < size:
            raise ValidationError(f"context {label!r}: symbol {d} out of range")
        idx = idx * size + d
    return idx


def build_markov_source(spec: str | Mapping) -> FiniteMemorySource:
    """Build and validate a source from a description.

    ``spec`` is either a builtin name (``"uniform-iid"`` for the binary
    alphabet, ``"uniform-iid:N"`` for ``N`` letters) or a mapping with keys
    ``alphabet_size``, ``order``, ``initial`` (list or ``"uniform"``) and
    ``transitions`` (context string -> probability list).
    """
    if isinstance(spec, str):
        name, _, arg = spec.partition(":")
        if name != "uniform-iid":
            raise ValidationError(f"unknown builtin source {spec!r}")
        n = int(arg) if arg else 2
        return uniform_iid(n)

    n = int(spec["alphabet_size"])
    s = int(spec.get("order", 0))
    if s < 0:
        raise ValidationError("order must be >= 0")
    alphabet = Alphabet(n, tuple(spec["labels"]) if spec.get("labels") else None)
    n_ctx = n**s

    init = spec.get("initial", "uniform")
    if s == 0:
        initial = np.ones(1)
    elif init == "uniform":
        initial = np.full(n_ctx, 1.0 / n_ctx)
    else:
        initial = np.asarray(init, dtype=float)
        if initial.shape != (n_ctx,):
            raise ValidationError(f"initial: expected {n_ctx} entries, got {initial.size}")
        _check_row(initial, "initial")

    raw = spec["transitions"]
    transitions = np.full((n_ctx, n), np.nan)
    if isinstance(raw, Mapping):
        for label, row in raw.items():
            idx = _parse_context(str(label), n, s)
            transitions[idx] = np.asarray(row, dtype=float)
    else:
        transitions[:] = np.asarray(raw, dtype=float).reshape(n_ctx, n)
    for idx in range(n_ctx):
        where = f"context {context_label(idx, n, s)!r}"
        if np.isnan(transitions[idx]).any():
            raise ValidationError(f"{where}: missing transition row")
        _check_row(transitions[idx], where)
    return FiniteMemorySource(alphabet, s, initial, transitions, spec.get("name"))


def uniform_iid(size: int = 2) -> FiniteMemorySource:
    return FiniteMemorySource(Alphabet(size), 0, np.ones(1), np.full((1, size), 1.0 / size), "uniform-iid")


def bernoulli(p0: float) -> FiniteMemorySource:
    """Binary i.i.d. source with P(0) = p0."""
    return build_markov_source({"alphabet_size": 2, "order": 0, "transitions": {"": [p0, 1 - p0]}})


def binary_markov(stay: float) -> FiniteMemorySource:
    """Symmetric binary order-1 chain repeating the last symbol with probability ``stay``."""
    return build_markov_source(
        {"alphabet_size": 2, "order": 1, "transitions": {"0": [stay, 1 - stay], "1": [1 - stay, stay]}}
    )


def load_source(path: str | Path) -> FiniteMemorySource:
    with open(path) as fh:
        return build_markov_source(json.load(fh))


def source_to_json(source: FiniteMemorySource) -> dict:
    n, s = source.alphabet.size, source.order
    return {
        "alphabet_size": n,
        "order": s,
        "initial": source.initial.tolist() if s else "uniform",
        "transitions": {context_label(i, n, s): source.transitions[i].tolist() for i in range(source.n_contexts)},
    }


def context_indices(symbols: np.ndarray, size: int, order: int) -> np.ndarray:
    """Index of the length-``order`` context ending just before each position >= order."""
    t = symbols.shape[0]
    if order == 0:
        return np.zeros(max(t, 0), dtype=np.int64)
    x = symbols.astype(np.int64)
    ctx = np.zeros(max(t - order, 0), dtype=np.int64)
    for j in range(order):
        ctx = ctx * size + x[j : t - order + j]
    return ctx


def _log2_sum(probs: np.ndarray) -> float:
    if np.any(probs <= 0.0):
        return IMPOSSIBLE
    return float(-np.sum(np.log2(probs)))


def neg_log_prob(source: FiniteMemorySource, x: SampleSequence) -> float:
    """-log2 of the probability the source assigns to ``x`` (``inf`` if impossible)."""
    if x.alphabet.size != source.alphabet.size:
        raise ValueError("sequence and source alphabets differ")
    n, s, t = source.alphabet.size, source.order, x.length
    sym = x.symbols.astype(np.int64)
    if s == 0:
        return _log2_sum(source.transitions[0][sym])
    if t < s:
        # marginal of the initial block over its first t symbols
        block = source.initial.reshape((n,) * s)
        p = block[tuple(sym)].sum() if t else 1.0
        return _log2_sum(np.array([p]))
    head = 0
    for a in sym[:s]:
        head = head * n + int(a)
    steps = source.transitions[context_indices(sym, n, s), sym[s:]]
    return _log2_sum(np.concatenate(([source.initial[head]], steps)))


def stationary_distribution(source: FiniteMemorySource, tol: float = 1e-12, max_iter: int = 200_000) -> np.ndarray:
    """Stationary law of the order-``s`` context chain, by (lazy) power iteration."""
    n, s = source.alphabet.size, source.order
    n_ctx = source.n_contexts
    if s == 0:
        return np.ones(1)
    ctx = np.repeat(np.arange(n_ctx), n)
    nxt = (ctx * n + np.tile(np.arange(n), n_ctx)) % n_ctx
    w = source.transitions.ravel()
    keep = w > 0
    graph = csr_matrix((np.ones(keep.sum()), (ctx[keep], nxt[keep])), shape=(n_ctx, n_ctx))
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    if n_comp > 1:
        # more than one closed class means more than one stationary law
        cond = csr_matrix((np.ones(keep.sum()), (labels[ctx[keep]], labels[nxt[keep]])), shape=(n_comp, n_comp))
        cond.setdiag(0)
        cond.eliminate_zeros()
        closed = np.flatnonzero(np.diff(cond.indptr) == 0)
        if closed.size > 1:
            raise ValueError("transition table is not ergodic (several closed classes)")

    p = np.full(n_ctx, 1.0 / n_ctx)
    for _ in range(max_iter):
        q = 0.5 * p + 0.5 * np.bincount(nxt, weights=np.repeat(p, n) * w, minlength=n_ctx)
        if np.abs(q - p).sum() < tol:
            return q / q.sum()
        p = q
    raise ValueError("power iteration did not converge; transition table is not ergodic")


def _cond_entropy(joint: np.ndarray) -> float:
    """H(last | rest) for a joint table of shape (contexts, n)."""
    ctx_mass = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(joint > 0, joint / ctx_mass, 1.0)
        terms = np.where(joint > 0, -joint * np.log2(cond), 0.0)
    return float(terms.sum())


def source_entropy_rate(source: FiniteMemorySource, k: int | None = None) -> float:
    """Order-``k`` conditional Shannon entropy under the stationary law (bits/symbol).

    Equals the entropy rate for ``k >= source.order``; smaller ``k`` gives the
    (larger) entropy of the next symbol given only the last ``k`` symbols.
    """
    n, s = source.alphabet.size, source.order
    k = s if k is None else k
    if k < 0:
        raise ValueError("k must be >= 0")
    p = stationary_distribution(source)
    joint = (p[:, None] * source.transitions).reshape((n,) * (s + 1))
    kk = min(k, s)
    if kk < s:
        joint = joint.sum(axis=tuple(range(s - kk)))
    return _cond_entropy(joint.reshape(n**kk, n))


@njit(cache=True)
def _sample_chain(u, first, trans_cdf, n, s):
    t = u.shape[0]
    out = np.empty(t, dtype=np.int64)
    n_ctx = trans_cdf.shape[0]
    ctx = 0
    for i in range(min(s, t)):
        out[i] = first[i]
        ctx = (ctx * n + first[i]) % n_ctx
    for i in range(s, t):
        row = trans_cdf[ctx]
        a = 0
        while a < n - 1 and u[i] >= row[a]:
            a += 1
        out[i] = a
        ctx = (ctx * n + a) % n_ctx
    return out


def sample(source: FiniteMemorySource, t: int, rng: np.random.Generator) -> SampleSequence:
    """Draw ``x_1..x_t`` from the source."""
    n, s = source.alphabet.size, source.order
    u = rng.random(t)
    cdf = np.cumsum(source.transitions, axis=1)
    cdf[:, -1] = np.inf
    if s == 0:
        sym = np.searchsorted(cdf[0], u, side="right")
        return SampleSequence(source.alphabet, np.minimum(sym, n - 1))
    icdf = np.cumsum(source.initial)
    icdf[-1] = np.inf
    head = int(np.searchsorted(icdf, rng.random(), side="right"))
    first = np.array([(head // n ** (s - 1 - j)) % n for j in range(s)], dtype=np.int64)
    return SampleSequence(source.alphabet, _sample_chain(u, first, cdf, n, s))

"""Overlapping word counts, empirical Shannon entropy and KL divergence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import SampleSequence, context_indices


def count_occurrences(x: SampleSequence, v: Sequence[int] | str) -> int:
    """Number of (overlapping) positions where the word ``v`` occurs in ``x``."""
    word = np.array([int(c, 36) for c in v] if isinstance(v, str) else list(v), dtype=np.int64)
    t, m = x.length, word.size
    if m > t:
        return 0
    if m == 0:
        return t + 1
    windows = sliding_window_view(x.symbols, m)
    return int(np.all(windows == word, axis=1).sum())


def _window_keys(x: SampleSequence, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Context id (length-k word before each position >= k) and the symbol there."""
    n, t = x.alphabet.size, x.length
    sym = x.symbols[k:].astype(np.int64)
    if k * math.log2(n) <= 62:
        return context_indices(x.symbols, n, k), sym
    windows = sliding_window_view(x.symbols, k)[: t - k]
    _, inv = np.unique(windows, axis=0, return_inverse=True)
    return inv.ravel().astype(np.int64), sym


@dataclass(frozen=True)
class ContextCounts:
    """Counts of (k+1)-words over the ``t - k`` windows of a sequence.

    ``rows`` maps each observed context (a k-word, as a tuple) to the vector of
    counts of the symbol following it; ``totals`` are their row sums.
    """

    k: int
    alphabet_size: int
    rows: dict

    def nu(self, word: Sequence[int]) -> int:
        word = tuple(word)
        if len(word) != self.k + 1:
            raise ValueError(f"expected a word of length {self.k + 1}")
        row = self.rows.get(word[:-1])
        return 0 if row is None else int(row[word[-1]])

    def nu_bar(self, context: Sequence[int]) -> int:
        row = self.rows.get(tuple(context))
        return 0 if row is None else int(row.sum())

    @property
    def n_windows(self) -> int:
        return int(sum(int(r.sum()) for r in self.rows.values()))


def _count_matrix(x: SampleSequence, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(first window index of each context, count matrix) over observed contexts."""
    n = x.alphabet.size
    ctx, sym = _window_keys(x, k)
    uniq, first, inv = np.unique(ctx, return_index=True, return_inverse=True)
    counts = np.zeros((uniq.size, n), dtype=np.int64)
    np.add.at(counts, (inv.ravel(), sym), 1)
    return first, counts


def context_counts(x: SampleSequence, k: int) -> ContextCounts:
    if not 0 <= k < max(x.length, 1):
        raise ValueError(f"need 0 <= k < t (k={k}, t={x.length})")
    first, counts = _count_matrix(x, k)
    rows = {tuple(x.symbols[i : i + k].tolist()): counts[j] for j, i in enumerate(first.tolist())}
    return ContextCounts(k, x.alphabet.size, rows)


def joint_counts(x: SampleSequence, k: int) -> dict:
    """Context id -> symbol count vector (ids are opaque)."""
    if x.length <= k:
        return {}
    _, counts = _count_matrix(x, k)
    return dict(enumerate(counts))


def plugin_code_length(x: SampleSequence, k: int) -> float:
    """``(t - k) * h*_k(x)``: the maximum-likelihood order-k code length in bits."""
    t = x.length
    if not 0 <= k < t:
        raise ValueError(f"empirical entropy needs 0 <= k < t (k={k}, t={t})")
    _, counts = _count_matrix(x, k)
    totals = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    terms = counts[nz] * np.log2(np.broadcast_to(totals, counts.shape)[nz] / counts[nz])
    return float(math.fsum(terms.tolist()))


def empirical_entropy(x: SampleSequence, k: int) -> float:
    """Order-``k`` empirical Shannon entropy ``h*_k(x)`` in bits per symbol."""
    return plugin_code_length(x, k) / (x.length - k)


def kl_divergence(p, q) -> float:
    """``sum_b p(b) log2(p(b)/q(b))``; ``inf`` when ``p`` is not dominated by ``q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distributions have different shapes {p.shape} and {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be nonnegative")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    value = math.fsum((p[support] * np.log2(p[support] / q[support])).tolist())
    # rounding can leave a -1e-17 residue when p == q
    return max(value, 0.0)

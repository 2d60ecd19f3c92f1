"""Model kernels shared by encoder, length counter and decoder.

Each ``*_run`` kernel walks the sequence once. ``mode`` selects the role:
COUNT only advances the bit counter, EMIT also writes bits, DECODE reads
symbols from ``bits`` into ``out``. Running the same model code in all three
roles keeps encoder and decoder probability tables bit-identical.
"""

import numpy as np
from numba import njit

from ._arith import (
    MAX_TOTAL,
    dec_finish,
    dec_init,
    dec_symbol,
    dec_update,
    enc_finish,
    enc_init,
    enc_update,
    get_uint,
    put_uint,
    quantize,
)

COUNT, EMIT, DECODE = 0, 1, 2

OK, BAD_HEADER, BAD_PAYLOAD = 0, 1, 2

BETA_MAX = 2.0**256
BETA_MIN = 2.0**-256


@njit(cache=True)
def _slot(keys, ctx):
    mask = keys.shape[0] - 1
    h = ctx * np.int64(0x2545F4914F6CDD1D)
    h = (h ^ (h >> 29)) & mask
    while keys[h] != -1 and keys[h] != ctx:
        h = (h + 1) & mask
    return h


@njit(cache=True)
def _code_step(mode, x, out, i, cum, nsym, bits, dst, est, buf):
    """Code symbol i with cumulative table ``cum``; returns (symbol, buf)."""
    total = cum[nsym]
    if mode == DECODE:
        s = dec_symbol(dst, cum, nsym)
        dec_update(bits, dst, cum[s], cum[s + 1], total)
        out[i] = s
    else:
        s = np.int64(x[i])
        buf = enc_update(buf, est, cum[s], cum[s + 1], total, mode == EMIT)
    return s, buf


@njit(cache=True)
def kt_run(x, t, asize, k, n_rows, mode, bits, dst, est, buf):
    """Order-k Krichevsky-Trofimov model; first k symbols coded uniformly."""
    out = np.empty(t if mode == DECODE else 0, dtype=np.int64)
    cap = 4
    while cap < 2 * n_rows:
        cap *= 2
    keys = np.full(cap, -1, dtype=np.int64)
    rows = np.empty(cap, dtype=np.int64)
    counts = np.zeros((n_rows, asize), dtype=np.int64)
    totals = np.zeros(n_rows, dtype=np.int64)
    used = 0
    modulus = np.int64(1)
    for _ in range(k):
        modulus *= asize
    cum = np.empty(asize + 1, dtype=np.int64)
    if mode == DECODE:
        dec_init(bits, dst)
    else:
        enc_init(est)
    ctx = np.int64(0)
    for i in range(t):
        r = -1
        if i < k:
            for a in range(asize + 1):
                cum[a] = a
        else:
            h = _slot(keys, ctx)
            if keys[h] == -1:
                keys[h] = ctx
                rows[h] = used
                used += 1
            r = rows[h]
            total = 2 * totals[r] + asize
            if total <= MAX_TOTAL:
                cum[0] = 0
                for a in range(asize):
                    cum[a + 1] = cum[a] + 2 * counts[r, a] + 1
            else:
                # halve the frequencies until they fit; integer and label-symmetric
                sh = 0
                while total > MAX_TOTAL:
                    sh += 1
                    total = 0
                    for a in range(asize):
                        total += ((2 * counts[r, a] + 1) >> sh) + 1
                cum[0] = 0
                for a in range(asize):
                    cum[a + 1] = cum[a] + ((2 * counts[r, a] + 1) >> sh) + 1
        s, buf = _code_step(mode, x, out, i, cum, asize, bits, dst, est, buf)
        if r >= 0:
            counts[r, s] += 1
            totals[r] += 1
        if k > 0:
            ctx = (ctx * asize + s) % modulus
    if mode == DECODE:
        dec_finish(dst)
    else:
        buf = enc_finish(buf, est, mode == EMIT)
    return buf, out


@njit(cache=True)
def _ctw_grow(child, cnt, tot, beta):
    cap = child.shape[0] * 2
    c2 = np.full((cap, child.shape[1]), -1, dtype=np.int32)
    c2[: child.shape[0]] = child
    n2 = np.zeros((cap, cnt.shape[1]), dtype=np.int64)
    n2[: cnt.shape[0]] = cnt
    t2 = np.zeros(cap, dtype=np.int64)
    t2[: tot.shape[0]] = tot
    b2 = np.ones(cap, dtype=np.float64)
    b2[: beta.shape[0]] = beta
    return c2, n2, t2, b2


@njit(cache=True)
def ctw_run(x, t, asize, depth, mode, bits, dst, est, buf):
    """Context-tree weighting over depths 0..depth with KT leaves.

    Each node stores beta = Pe(s) / prod Pw(children); the weighted
    conditional at node s is (beta*pe_s + pw_child) / (beta + 1). The
    context before the first ``depth`` symbols is padded with symbol 0.
    """
    out = np.empty(t if mode == DECODE else 0, dtype=np.int64)
    cap = 64
    child = np.full((cap, asize), -1, dtype=np.int32)
    cnt = np.zeros((cap, asize), dtype=np.int64)
    tot = np.zeros(cap, dtype=np.int64)
    beta = np.ones(cap, dtype=np.float64)
    n_nodes = 1
    path = np.zeros(depth + 1, dtype=np.int64)
    pe = np.empty((depth + 1, asize), dtype=np.float64)
    pw = np.empty((depth + 1, asize), dtype=np.float64)
    cum = np.empty(asize + 1, dtype=np.int64)
    half_a = 0.5 * asize
    if mode == DECODE:
        dec_init(bits, dst)
    else:
        enc_init(est)
    for i in range(t):
        node = 0
        path[0] = 0
        for d in range(1, depth + 1):
            j = i - d
            if j < 0:
                c = np.int64(0)
            elif mode == DECODE:
                c = out[j]
            else:
                c = np.int64(x[j])
            nxt = child[node, c]
            if nxt < 0:
                if n_nodes >= child.shape[0]:
                    child, cnt, tot, beta = _ctw_grow(child, cnt, tot, beta)
                nxt = n_nodes
                child[node, c] = nxt
                n_nodes += 1
            node = nxt
            path[d] = node
        for d in range(depth + 1):
            nd = path[d]
            den = tot[nd] + half_a
            for a in range(asize):
                pe[d, a] = (cnt[nd, a] + 0.5) / den
        for a in range(asize):
            pw[depth, a] = pe[depth, a]
        for d in range(depth - 1, -1, -1):
            b = beta[path[d]]
            for a in range(asize):
                pw[d, a] = (b * pe[d, a] + pw[d + 1, a]) / (b + 1.0)
        quantize(pw[0], cum)
        s, buf = _code_step(mode, x, out, i, cum, asize, bits, dst, est, buf)
        for d in range(depth):
            nd = path[d]
            b = beta[nd] * pe[d, s] / pw[d + 1, s]
            if b > BETA_MAX:
                b = BETA_MAX
            elif b < BETA_MIN:
                b = BETA_MIN
            beta[nd] = b
        for d in range(depth + 1):
            nd = path[d]
            cnt[nd, s] += 1
            tot[nd] += 1
    if mode == DECODE:
        dec_finish(dst)
    else:
        buf = enc_finish(buf, est, mode == EMIT)
    return buf, out


@njit(cache=True)
def ceil_log2(v):
    n = 0
    while (np.int64(1) << n) < v:
        n += 1
    return n


@njit(cache=True)
def lz78_run(x, t, asize, mode, bits, dst, est, buf):
    """Incremental parsing; phrase i costs ceil(log2 i) index bits + a literal.

    A trailing phrase already in the dictionary is sent as its index alone;
    the decoder recognises it because it exactly fills the remaining length.
    Returns (buf, out, status).
    """
    emit = mode == EMIT
    lit_bits = ceil_log2(asize)
    out = np.empty(t if mode == DECODE else 0, dtype=np.int64)
    if mode != DECODE:
        # trie edges (node, symbol) -> node in an open-addressing table
        cap = 4
        while cap < 2 * (t + 2):
            cap *= 2
        keys = np.full(cap, -1, dtype=np.int64)
        vals = np.empty(cap, dtype=np.int64)
        n_dict = 1
        cur = np.int64(0)
        for i in range(t):
            s = np.int64(x[i])
            key = cur * asize + s
            h = _slot(keys, key)
            if keys[h] == key:
                cur = vals[h]
            else:
                buf = put_uint(buf, est, cur, ceil_log2(n_dict), emit)
                buf = put_uint(buf, est, s, lit_bits, emit)
                keys[h] = key
                vals[h] = n_dict
                n_dict += 1
                cur = 0
        if cur != 0:
            buf = put_uint(buf, est, cur, ceil_log2(n_dict), emit)
        return buf, out, OK

    parent = np.zeros(t + 2, dtype=np.int64)
    sym = np.zeros(t + 2, dtype=np.int64)
    plen = np.zeros(t + 2, dtype=np.int64)
    n_dict = 1
    done = 0
    while done < t:
        j = get_uint(bits, dst, ceil_log2(n_dict))
        if j >= n_dict:
            return buf, out, BAD_PAYLOAD
        ln = plen[j]
        node = j
        for p in range(done + ln - 1, done - 1, -1):
            if p < t:
                out[p] = sym[node]
            node = parent[node]
        if done + ln == t and j != 0:
            done = t
            break
        if done + ln + 1 > t:
            return buf, out, BAD_PAYLOAD
        a = get_uint(bits, dst, lit_bits)
        if a >= asize:
            return buf, out, BAD_PAYLOAD
        out[done + ln] = a
        parent[n_dict] = j
        sym[n_dict] = a
        plen[n_dict] = ln + 1
        n_dict += 1
        done += ln + 1
    return buf, out, OK

"""Integer range coder kernels (numba).

The coder keeps an interval ``[low, low + range)`` inside a 62-bit window
(int64 registers). A symbol with cumulative frequencies ``[lo, hi)`` out of
``total`` maps it to

    low + q * lo,  range = q * (hi - lo),   q = range // total

and whenever ``range <= 2**61`` the window shifts left by one bit, emitting
the top bit of ``low``. Carries out of ``low`` are propagated into the bits
already written. The sequence of ranges, and hence the number of shifts,
depends only on the frequencies and not on where the interval sits, so two
inputs whose symbols receive the same frequencies (for example relabeled
copies under a symmetric model) get codewords of the same length.

Termination writes a fixed number of tail bits: none if no symbol was coded,
one if ``range == 2**62`` and two otherwise. That always leaves room for a
dyadic interval inside ``[low, low + range)``, so every continuation of the
tail decodes identically and the decoder may read ahead into the next frame.
A frame's payload is therefore ``ceil(1 - log2 W)`` bits, ``W`` being the
final interval width, i.e. at most two bits above the ideal length.

Encoder state ``est``: [low, range, coded, nbits].
Decoder state ``dst``: [unused, range, code, pos, consumed, coded, start].
"""

import numpy as np
from numba import njit

STATE_BITS = 62
FULL = 1 << STATE_BITS
MASK = FULL - 1
HALF = FULL >> 1
MAX_TOTAL = 1 << 31
# total used when quantising real-valued probabilities
QUANT_TOTAL = 1 << 30


@njit(cache=True)
def put_bit(buf, n, bit):
    if n >= buf.shape[0]:
        bigger = np.empty(2 * buf.shape[0] + 256, dtype=np.uint8)
        bigger[:n] = buf[:n]
        buf = bigger
    buf[n] = bit
    return buf


@njit(cache=True)
def put_uint(buf, est, value, width, emit):
    """Raw fixed-width integer, MSB first (not arithmetic coded)."""
    for j in range(width - 1, -1, -1):
        if emit:
            buf = put_bit(buf, est[3], (value >> j) & 1)
        est[3] += 1
    return buf


@njit(cache=True)
def put_gamma(buf, est, value, emit):
    """Elias gamma code of ``value >= 1``."""
    width = 0
    v = value
    while v > 1:
        v >>= 1
        width += 1
    for _ in range(width):
        if emit:
            buf = put_bit(buf, est[3], 0)
        est[3] += 1
    return put_uint(buf, est, value, width + 1, emit)


@njit(cache=True)
def enc_init(est):
    est[0] = 0
    est[1] = FULL
    est[2] = 0


@njit(cache=True)
def _carry(buf, n, emit):
    # add one at bit n-1 of the output; the written prefix is never all ones
    if emit:
        j = n - 1
        while buf[j] == 1:
            buf[j] = 0
            j -= 1
        buf[j] = 1


@njit(cache=True)
def enc_update(buf, est, lo, hi, total, emit):
    q = est[1] // total
    low = est[0] + q * lo
    rng = q * (hi - lo)
    if low >= FULL:
        low -= FULL
        _carry(buf, est[3], emit)
    while rng <= HALF:
        if emit:
            buf = put_bit(buf, est[3], low >> (STATE_BITS - 1))
        est[3] += 1
        low = (low << 1) & MASK
        rng <<= 1
    est[0] = low
    est[1] = rng
    est[2] = 1
    return buf


@njit(cache=True)
def tail_bits(rng, coded):
    if coded == 0:
        return 0
    return 1 if rng == FULL else 2


@njit(cache=True)
def enc_finish(buf, est, emit):
    n = tail_bits(est[1], est[2])
    if n > 0:
        unit = np.int64(1) << (STATE_BITS - n)
        v = ((est[0] + unit - 1) // unit) * unit
        if v >= FULL:
            v -= FULL
            _carry(buf, est[3], emit)
        for j in range(STATE_BITS - 1, STATE_BITS - 1 - n, -1):
            if emit:
                buf = put_bit(buf, est[3], (v >> j) & 1)
            est[3] += 1
    return buf


@njit(cache=True, inline="always")
def get_bit(bits, pos):
    if pos < bits.shape[0]:
        return np.int64(bits[pos])
    return np.int64(0)


@njit(cache=True)
def get_uint(bits, dst, width):
    v = np.int64(0)
    for _ in range(width):
        v = (v << 1) | get_bit(bits, dst[3])
        dst[3] += 1
    return v


@njit(cache=True)
def get_gamma(bits, dst):
    """Elias gamma decode; -1 on a malformed or truncated prefix."""
    width = 0
    while True:
        if dst[3] >= bits.shape[0]:
            return -1
        if bits[dst[3]] != 0:
            break
        width += 1
        dst[3] += 1
        if width > 62:
            return -1
    if dst[3] + width + 1 > bits.shape[0]:
        return -1
    return get_uint(bits, dst, width + 1)


@njit(cache=True)
def dec_init(bits, dst):
    """Start decoding at bit offset ``dst[3]``."""
    dst[6] = dst[3]
    dst[1] = FULL
    dst[4] = 0
    dst[5] = 0
    code = np.int64(0)
    for j in range(STATE_BITS):
        code = (code << 1) | get_bit(bits, dst[3] + j)
    dst[2] = code


@njit(cache=True)
def dec_symbol(dst, cum, nsym):
    """Index ``a`` with ``cum[a] <= target < cum[a+1]``; ``cum`` has nsym+1 entries."""
    total = cum[nsym]
    target = dst[2] // (dst[1] // total)
    if target >= total:
        # only reachable on corrupt input; the frame check rejects it later
        target = total - 1
    lo_i = 0
    hi_i = nsym
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) >> 1
        if cum[mid] <= target:
            lo_i = mid
        else:
            hi_i = mid
    return lo_i


@njit(cache=True)
def dec_update(bits, dst, lo, hi, total):
    q = dst[1] // total
    code = dst[2] - q * lo
    rng = q * (hi - lo)
    if code >= rng:
        code = rng - 1
    base = dst[6] + STATE_BITS
    while rng <= HALF:
        code = (code << 1) | get_bit(bits, base + dst[4])
        dst[4] += 1
        rng <<= 1
    dst[1] = rng
    dst[2] = code
    dst[5] = 1


@njit(cache=True)
def dec_finish(dst):
    """Move ``dst[3]`` to the end of the frame; returns that offset."""
    dst[3] = dst[6] + dst[4] + tail_bits(dst[1], dst[5])
    return dst[3]


@njit(cache=True)
def quantize(q, cum):
    """Integer cumulative frequencies for a real-valued distribution ``q``.

    Every symbol keeps frequency >= 1; total <= QUANT_TOTAL.
    """
    nsym = q.shape[0]
    s = 0.0
    for a in range(nsym):
        s += q[a]
    room = QUANT_TOTAL - nsym
    cum[0] = 0
    for a in range(nsym):
        f = np.int64(q[a] / s * room)
        if f < 0:
            f = 0
        if f > room:
            f = room
        cum[a + 1] = cum[a] + f + 1

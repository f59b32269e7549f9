"""Compiled inner loops.

Everything that touches individual wires lives here so that the Monte Carlo
runner, the single-sample API and the exhaustive enumerator all go through
the same layer recurrence (`_advance_layer`) and only differ in where wire
delays come from.

Layer buffers are indexed so that array slot ``i`` on layer ``y`` is column
``x = i - (H - y)``; the in-neighbours of slot ``i`` are slots ``i``, ``i+1``
and ``i+2`` of the previous layer.

Wire delays for one node are packed into an int32 "code" holding three
fields of ``bits`` bits each (c = -1 in the low field, then c = 0, c = +1).
"""

from __future__ import annotations

import os

import numpy as np
from numba import njit, objmode, uint64

MODEL_BINARY = 0
MODEL_TERNARY = 1
MODEL_SPLIT = 2
MODEL_CONST = 3
MODEL_TABLE = 4

SRC_XOSHIRO = 0
SRC_OS = 1

# binary: 21 node triples per 64-bit word, top bit unused
BINARY_NODES_PER_WORD = 21
# ternary: 32 two-bit chunks per word, value 3 rejected
TERNARY_CHUNKS_PER_WORD = 32

OS_POOL_WORDS = 1 << 14

GOLDEN = 0x9E3779B97F4A7C15
SEED_SALT = 0xD1B54A32D192ED03
FALLBACK_STATE = np.array(
    [
        0x0123456789ABCDEF,
        0x5DEECE66D1CE4E5B,
        0x2545F4914F6CDD1D,
        0x9E3779B97F4A7C15,
        0xBF58476D1CE4E5B9,
        0x94D049BB133111EB,
        0xD6E8FEB86659FD93,
        0xA0761D6478BD642F,
    ],
    dtype=np.uint64,
)


@njit(inline="always", cache=True)
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(inline="always", cache=True)
def xoshiro_next(s):
    s1 = s[1]
    result = _rotl(s1 * uint64(5), 7) * uint64(9)
    t = s1 << uint64(11)
    s[2] ^= s[0]
    s[5] ^= s[1]
    s[1] ^= s[2]
    s[7] ^= s[3]
    s[3] ^= s[4]
    s[4] ^= s[5]
    s[0] ^= s[6]
    s[6] ^= s[7]
    s[6] ^= t
    s[7] = _rotl(s[7], 21)
    return result


@njit(inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(cache=True)
def seed_state(master, index, s):
    """Fill ``s`` with the xoshiro512** state derived from (master, index)."""
    x = uint64(master) ^ _mix64(uint64(index) ^ uint64(SEED_SALT))
    nonzero = False
    for j in range(8):
        x = x + uint64(GOLDEN)
        s[j] = _mix64(x)
        if s[j] != uint64(0):
            nonzero = True
    if not nonzero:
        for j in range(8):
            s[j] = FALLBACK_STATE[j]


@njit(cache=True)
def _refill_pool(pool):
    with objmode(fresh="uint64[:]"):
        fresh = np.frombuffer(os.urandom(8 * pool.shape[0]), dtype=np.uint64).copy()
    pool[:] = fresh


@njit(inline="always", cache=True)
def _next_word(src, s, pool, cursor):
    if src == SRC_XOSHIRO:
        return xoshiro_next(s)
    if cursor[0] >= pool.shape[0]:
        _refill_pool(pool)
        cursor[0] = 0
    w = pool[cursor[0]]
    cursor[0] += 1
    return w


@njit(cache=True)
def _fill_binary(src, s, pool, cursor, words, codes, w):
    m = (w + BINARY_NODES_PER_WORD - 1) // BINARY_NODES_PER_WORD
    if src == SRC_XOSHIRO:
        for j in range(m):
            words[j] = xoshiro_next(s)
    else:
        for j in range(m):
            words[j] = _next_word(src, s, pool, cursor)
    for j in range(m):
        wd = words[j]
        for q in range(BINARY_NODES_PER_WORD):
            codes[BINARY_NODES_PER_WORD * j + q] = np.int32((wd >> uint64(3 * q)) & uint64(7))


@njit(cache=True)
def _fill_ternary(src, s, pool, cursor, accepted, codes, w):
    # Branch-free compaction of 2-bit chunks; yields exactly the sequence that
    # chunk-by-chunk rejection of the value 3 would, leftovers discarded.
    need = 3 * w
    k = 0
    while k < need:
        wd = _next_word(src, s, pool, cursor)
        for q in range(TERNARY_CHUNKS_PER_WORD):
            v = np.int32((wd >> uint64(2 * q)) & uint64(3))
            accepted[k] = v
            k += v != 3
    for i in range(w):
        codes[i] = accepted[3 * i] | (accepted[3 * i + 1] << 2) | (accepted[3 * i + 2] << 4)


@njit(cache=True)
def _fill_split(codes, w, first_x, boundary, bits):
    slow = 1 | (1 << bits) | (1 << (2 * bits))
    for i in range(w):
        codes[i] = slow if first_x + i >= boundary else 0


@njit(cache=True)
def _fill_const(codes, w, value, bits):
    code = value | (value << bits) | (value << (2 * bits))
    for i in range(w):
        codes[i] = code


@njit(cache=True)
def _fill_table(codes, w, table, pos, bits):
    for i in range(w):
        p = pos + 3 * i
        codes[i] = table[p] | (table[p + 1] << bits) | (table[p + 2] << (2 * bits))


def _make_advance(bits):
    mask = (1 << bits) - 1
    shift2 = 2 * bits

    @njit(cache=True)
    def advance(prev, cur, codes, w):
        for i in range(w):
            t = codes[i]
            a = prev[i] + (t & mask)
            b = prev[i + 1] + ((t >> bits) & mask)
            c = prev[i + 2] + (t >> shift2)
            lo = min(a, b)
            hi = max(a, b)
            cur[i] = max(lo, min(hi, c))

    return advance


# one recurrence, specialised per field width so the shifts are constants
_advance_1 = _make_advance(1)
_advance_2 = _make_advance(2)
_advance_8 = _make_advance(8)


@njit(cache=True)
def _advance_layer(prev, cur, codes, w, bits):
    if bits == 1:
        _advance_1(prev, cur, codes, w)
    elif bits == 2:
        _advance_2(prev, cur, codes, w)
    else:
        _advance_8(prev, cur, codes, w)


@njit(cache=True)
def field_bits(model):
    if model == MODEL_BINARY or model == MODEL_SPLIT:
        return 1
    if model == MODEL_TERNARY:
        return 2
    return 8


@njit(cache=True)
def _fill_codes(model, param, table, tpos, src, s, pool, cursor,
                words, scratch, codes, w, first_x, bits):
    if model == MODEL_BINARY:
        _fill_binary(src, s, pool, cursor, words, codes, w)
    elif model == MODEL_TERNARY:
        _fill_ternary(src, s, pool, cursor, scratch, codes, w)
    elif model == MODEL_SPLIT:
        _fill_split(codes, w, first_x, param, bits)
    elif model == MODEL_CONST:
        _fill_const(codes, w, param, bits)
    else:
        _fill_table(codes, w, table, tpos, bits)


@njit(cache=True)
def simulate_one(H, span, model, param, table, src, s, pool, cursor,
                 prev, cur, words, scratch, codes, layers_out, wires_out, record):
    """Evaluate one sample of the cone using work buffers from `buffers`.

    Returns 1 if layer H ended up in ``cur`` and 0 if in ``prev``. When
    ``record`` is set, every layer is appended to ``layers_out`` and every wire
    delay (draw order) to ``wires_out``.
    """
    bits = field_bits(model)
    mask = (1 << bits) - 1
    w0 = 2 * H + 1 + span
    for i in range(w0 + 2):
        prev[i] = 0
    lpos = 0
    if record:
        for i in range(w0):
            layers_out[i] = 0
        lpos = w0
    tpos = 0
    wpos = 0
    for y in range(1, H + 1):
        w = 2 * (H - y) + 1 + span
        _fill_codes(model, param, table, tpos, src, s, pool, cursor,
                    words, scratch, codes, w, -(H - y), bits)
        if model == MODEL_TABLE:
            tpos += 3 * w
        # alternate buffers by parity; rebinding array names costs refcount traffic
        if y & 1:
            _advance_layer(prev, cur, codes, w, bits)
        else:
            _advance_layer(cur, prev, codes, w, bits)
        if record:
            _record_layer(cur if y & 1 else prev, codes, w, bits, mask,
                          layers_out, lpos, wires_out, wpos)
            lpos += w
            wpos += 3 * w
    return H & 1


@njit(cache=True)
def _record_layer(layer, codes, w, bits, mask, layers_out, lpos, wires_out, wpos):
    for i in range(w):
        layers_out[lpos + i] = layer[i]
        t = codes[i]
        wires_out[wpos + 3 * i] = t & mask
        wires_out[wpos + 3 * i + 1] = (t >> bits) & mask
        wires_out[wpos + 3 * i + 2] = t >> (2 * bits)


@njit(cache=True)
def buffers(H, span):
    width = 2 * H + 3 + span
    nwords = width // BINARY_NODES_PER_WORD + 2
    return (
        np.zeros(width, np.int32),
        np.zeros(width, np.int32),
        np.zeros(nwords, np.uint64),
        np.zeros(3 * width + TERNARY_CHUNKS_PER_WORD, np.int32),
        np.zeros(nwords * BINARY_NODES_PER_WORD, np.int32),
    )


@njit(cache=True)
def run_single(H, span, model, param, table, src, s, record):
    """One sample with state ``s`` (advanced in place); returns (top, layers, wires)."""
    prev, cur, words, scratch, codes = buffers(H, span)
    pool = np.zeros(OS_POOL_WORDS if src == SRC_OS else 1, np.uint64)
    cursor = np.zeros(1, np.int64)
    cursor[0] = pool.shape[0]
    nodes = 0
    for y in range(H + 1):
        nodes += 2 * (H - y) + 1 + span
    w0 = 2 * H + 1 + span
    layers_out = np.zeros(nodes if record else 0, np.int32)
    wires_out = np.zeros(3 * (nodes - w0) if record else 0, np.int32)
    if simulate_one(H, span, model, param, table, src, s, pool, cursor,
                    prev, cur, words, scratch, codes, layers_out, wires_out, record):
        top = cur[: span + 1].copy()
    else:
        top = prev[: span + 1].copy()
    return top, layers_out, wires_out


@njit(cache=True)
def _tally(top, span, tmax, delay_counts, skew_counts):
    d0 = top[0]
    delay_counts[d0] += 1
    for j in range(span + 1):
        skew_counts[j, tmax + top[j] - d0] += 1


@njit(cache=True)
def run_batch(H, span, model, param, table, src, master, start, count, tmax):
    """Simulate samples ``start .. start+count-1`` and histogram the top layer.

    Returns (delay_counts, skew_counts): ``delay_counts[v]`` counts d(0, H) = v,
    ``skew_counts[k, tmax + v]`` counts d(k, H) - d(0, H) = v for 0 <= k <= span.
    """
    prev, cur, words, scratch, codes = buffers(H, span)
    s = np.zeros(8, np.uint64)
    pool = np.zeros(OS_POOL_WORDS if src == SRC_OS else 1, np.uint64)
    cursor = np.zeros(1, np.int64)
    cursor[0] = pool.shape[0]
    empty = np.zeros(0, np.int32)
    delay_counts = np.zeros(tmax + 1, np.int64)
    skew_counts = np.zeros((span + 1, 2 * tmax + 1), np.int64)
    for k in range(count):
        if src == SRC_XOSHIRO:
            seed_state(master, start + k, s)
        if simulate_one(H, span, model, param, table, src, s, pool, cursor,
                        prev, cur, words, scratch, codes, empty, empty, False):
            _tally(cur, span, tmax, delay_counts, skew_counts)
        else:
            _tally(prev, span, tmax, delay_counts, skew_counts)
    return delay_counts, skew_counts


@njit(cache=True)
def enumerate_range(H, span, radix, lo, hi, nwires, tmax):
    """Exhaustively evaluate assignments ``lo .. hi-1`` of the cone's wires.

    Assignment index ``a`` sets wire ``j`` (draw order) to digit ``j`` of ``a``
    written in base ``radix`` (wire 0 least significant).
    """
    table = np.zeros(nwires, np.int32)
    a = lo
    for j in range(nwires):
        table[j] = a % radix
        a //= radix
    prev, cur, words, scratch, codes = buffers(H, span)
    s = np.zeros(8, np.uint64)
    pool = np.zeros(1, np.uint64)
    cursor = np.zeros(1, np.int64)
    empty = np.zeros(0, np.int32)
    delay_counts = np.zeros(tmax + 1, np.int64)
    skew_counts = np.zeros(2 * tmax + 1, np.int64)
    for _ in range(hi - lo):
        if simulate_one(H, span, MODEL_TABLE, 0, table, SRC_XOSHIRO, s, pool, cursor,
                        prev, cur, words, scratch, codes, empty, empty, False):
            d0 = cur[0]
            ds = cur[span]
        else:
            d0 = prev[0]
            ds = prev[span]
        delay_counts[d0] += 1
        skew_counts[tmax + ds - d0] += 1
        j = 0
        while j < nwires:
            table[j] += 1
            if table[j] < radix:
                break
            table[j] = 0
            j += 1
    return delay_counts, skew_counts

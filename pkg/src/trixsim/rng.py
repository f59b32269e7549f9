"""Random streams: xoshiro512**, OS entropy, and per-sample seed derivation.

The compiled kernels carry their own copy of the generator; this module is
the reference used by the single-sample API and by the tests.

Bit consumption (draw-order version ``DRAW_ORDER``):

* binary wires take one bit each, least significant first, from the low 63
  bits of each 64-bit output (so one output covers 21 nodes);
* ternary wires take two bits each, all 32 pairs of an output in order,
  rejecting the value 3;
* buffered bits are discarded at the start of every layer.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels as K
from .models import DelayModel

MASK64 = (1 << 64) - 1
DRAW_ORDER = "trix-draw-v1"
ALGORITHMS = ("xoshiro512ss", "os")


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def parse_seed(text: str | int) -> int:
    """Accept a decimal or 0x-hex 64-bit seed."""
    if isinstance(text, int):
        value = text
    else:
        text = text.strip().lower()
        value = int(text, 16) if text.startswith("0x") else int(text, 10)
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


def expand_seed(master: int, index: int) -> list[int]:
    x = (master ^ _mix64((index & MASK64) ^ K.SEED_SALT)) & MASK64
    state = []
    for _ in range(8):
        x = (x + K.GOLDEN) & MASK64
        state.append(_mix64(x))
    if not any(state):
        state = [int(v) for v in K.FALLBACK_STATE]
    return state


class RngStream:
    """A single-owner bit source.

    For ``xoshiro512ss`` the 512-bit state is held as eight Python ints;
    ``os`` streams read from ``os.urandom`` and are not reproducible.
    """

    def __init__(self, algorithm: str = "xoshiro512ss", state=None, origin=None):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown rng algorithm {algorithm!r}")
        self.algorithm = algorithm
        self.origin = origin
        self._s: list[int] | None = None
        if algorithm == "xoshiro512ss":
            if state is None:
                raise ValueError("xoshiro512ss needs an explicit state")
            s = [int(v) & MASK64 for v in state]
            if len(s) != 8:
                raise ValueError("xoshiro512ss state is eight 64-bit words")
            if not any(s):
                raise ValueError("xoshiro512ss state must not be all zero")
            self._s = s
        self._buf = 0
        self._rem = 0

    @property
    def state(self) -> np.ndarray | None:
        return None if self._s is None else np.array(self._s, dtype=np.uint64)

    @state.setter
    def state(self, value) -> None:
        self._s = [int(v) for v in value]

    def copy(self) -> RngStream:
        twin = RngStream.__new__(RngStream)
        twin.algorithm = self.algorithm
        twin.origin = self.origin
        twin._s = None if self._s is None else list(self._s)
        twin._buf, twin._rem = self._buf, self._rem
        return twin

    def next_u64(self) -> int:
        if self._s is None:
            return int.from_bytes(os.urandom(8), "little")
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 11) & MASK64
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

    def flush(self) -> None:
        """Discard buffered bits; called at every layer boundary."""
        self._buf = 0
        self._rem = 0

    def _bit(self) -> int:
        if self._rem == 0:
            self._buf = self.next_u64()
            self._rem = 3 * K.BINARY_NODES_PER_WORD
        b = self._buf & 1
        self._buf >>= 1
        self._rem -= 1
        return b

    def _pair(self) -> int:
        if self._rem == 0:
            self._buf = self.next_u64()
            self._rem = K.TERNARY_CHUNKS_PER_WORD
        v = self._buf & 3
        self._buf >>= 2
        self._rem -= 1
        return v

    def next_delay(self, model: DelayModel, target_x: int | None = None) -> int:
        """Draw one scaled wire delay.

        Deterministic models return their fixed delay without touching the
        stream; ``split`` needs the column of the receiving node.
        """
        if model.kind == "binary":
            return self._bit()
        if model.kind == "ternary":
            while True:
                v = self._pair()
                if v != 3:
                    return v
        if model.kind == "const":
            return model.value
        if model.kind == "split":
            if target_x is None:
                raise ValueError("split model needs the receiving column")
            return 1 if target_x >= model.boundary else 0
        raise ValueError(f"{model.kind} delays are positional; use the table directly")


def derive_stream(master_seed: int, sample_index: int) -> RngStream:
    """Stream for sample ``sample_index`` of a run seeded with ``master_seed``."""
    master_seed = parse_seed(master_seed)
    return RngStream("xoshiro512ss", expand_seed(master_seed, sample_index),
                     origin=(master_seed, sample_index & MASK64))


def os_stream() -> RngStream:
    return RngStream("os")

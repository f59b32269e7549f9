"""The TRIX grid restricted to the dependency cone of the observed nodes.

Layer 0 pulses at time 0. Node (x, y+1) receives the pulse of (x+c, y) after
the delay of the wire between them (c in {-1, 0, +1}) and fires at the
median of the three arrival times. The top node(s) (0..span, H) depend only
on columns within H - y of them on layer y, so the cone

    layer y covers x in [-(H - y), span + (H - y)]

reproduces an infinitely wide grid exactly.

Wire delays are drawn layer by layer, left to right, and for each node in
the order c = -1, 0, +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError
from .models import DelayModel
from .rng import RngStream


@dataclass(frozen=True)
class ConeSpec:
    height: int
    span: int = 0

    def __post_init__(self):
        if self.height < 0 or self.span < 0:
            raise ConfigurationError(f"cone needs height >= 0 and span >= 0, got {self}")

    def bounds(self, y: int) -> tuple[int, int]:
        """Inclusive column range of layer ``y``."""
        r = self.height - y
        return -r, self.span + r

    def width(self, y: int) -> int:
        return 2 * (self.height - y) + 1 + self.span

    @property
    def node_count(self) -> int:
        return sum(self.width(y) for y in range(self.height + 1))

    @property
    def wire_count(self) -> int:
        return 3 * sum(self.width(y) for y in range(1, self.height + 1))

    @property
    def updates(self) -> int:
        """Node evaluations per sample (layer 0 excluded)."""
        return self.wire_count // 3


@dataclass
class GridSample:
    spec: ConeSpec
    model: DelayModel
    top: np.ndarray
    layers: list[np.ndarray] | None = None
    wires: np.ndarray | None = None
    origin: tuple[int, int] | None = None

    @property
    def recorded(self) -> bool:
        return self.layers is not None

    def time(self, x: int, y: int) -> int:
        """Pulse time (scaled) of node (x, y); needs a recorded sample except on top."""
        lo, hi = self.spec.bounds(y)
        if not lo <= x <= hi:
            raise ConfigurationError(f"node ({x}, {y}) lies outside the cone")
        if y == self.spec.height:
            return int(self.top[x])
        if self.layers is None:
            raise ConfigurationError("intermediate layers were not recorded")
        return int(self.layers[y][x - lo])


def median3(a: int, b: int, c: int) -> int:
    """Second largest of three values."""
    return max(min(a, b), min(max(a, b), c))


def _split_layers(spec: ConeSpec, flat: np.ndarray) -> list[np.ndarray]:
    out, pos = [], 0
    for y in range(spec.height + 1):
        w = spec.width(y)
        out.append(flat[pos:pos + w])
        pos += w
    return out


def simulate_sample(spec: ConeSpec, model: DelayModel, stream: RngStream | None = None,
                    record: bool = False) -> GridSample:
    """Draw one sample; ``stream`` is advanced exactly as the batch runner would."""
    table = model.kernel_table()
    if model.kind == "table" and table.size != spec.wire_count:
        raise ConfigurationError(
            f"delay table has {table.size} entries, cone needs {spec.wire_count}")
    if model.stochastic and stream is None:
        raise ConfigurationError(f"{model.kind} model needs an rng stream")
    if stream is not None and stream.algorithm == "os":
        src, state = K.SRC_OS, np.zeros(8, np.uint64)
    else:
        src = K.SRC_XOSHIRO
        state = stream.state if stream is not None else np.zeros(8, np.uint64)
    top, layers, wires = K.run_single(spec.height, spec.span, model.kernel_code,
                                      model.kernel_param, table, src, state, record)
    if stream is not None and model.stochastic and src == K.SRC_XOSHIRO:
        stream.state = state
        stream.flush()
    return GridSample(
        spec=spec,
        model=model,
        top=top,
        layers=_split_layers(spec, layers) if record else None,
        wires=wires if record else None,
        origin=None if stream is None else stream.origin,
    )


def evaluate_delays(spec: ConeSpec, delays, resolution: int = 1,
                    record: bool = True) -> GridSample:
    """Evaluate the cone under an explicit per-wire delay list (draw order)."""
    return simulate_sample(spec, DelayModel.explicit(delays, resolution), record=record)


def complement_sample(sample: GridSample) -> GridSample:
    """Re-evaluate with every wire delay w replaced by 1 - w."""
    if sample.wires is None:
        raise ConfigurationError("complement needs a sample with recorded wire delays")
    if sample.model.resolution != 1 or not set(sample.model.support) <= {0, 1}:
        raise ConfigurationError(f"complement is defined for 0/1 delays, not {sample.model}")
    flipped = evaluate_delays(sample.spec, 1 - sample.wires, resolution=1, record=True)
    flipped.origin = sample.origin
    return flipped


def extract_skew(sample: GridSample, delta: int) -> int:
    """d(delta, H) - d(0, H) in scaled units."""
    if not 0 <= delta <= sample.spec.span:
        raise ConfigurationError(f"delta {delta} outside the observed span 0..{sample.spec.span}")
    return int(sample.top[delta]) - int(sample.top[0])

"""Exact distributions by exhaustive enumeration of wire-delay assignments.

Only feasible for tiny cones: the delay cone at height H has
3 * sum_{y=1..H} (2(H - y) + 1) wires, i.e. 3, 12, 27 for H = 1, 2, 3.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .errors import GuardRefusal
from .grid import ConeSpec
from .models import DelayModel

DEFAULT_GUARD = 1 << 30
_CHUNK = 1 << 22


@dataclass(frozen=True)
class ExactPmf:
    """Exact pmf as raw counts over ``denominator`` equally likely assignments."""

    counts: dict[int, int]
    denominator: int
    wires: int
    resolution: int = 1

    @property
    def entries(self) -> dict[int, Fraction]:
        return {v: Fraction(c, self.denominator) for v, c in sorted(self.counts.items())}

    def probability(self, value: int) -> Fraction:
        return Fraction(self.counts.get(value, 0), self.denominator)

    def cdf(self, value: float) -> Fraction:
        return Fraction(sum(c for v, c in self.counts.items() if v <= value), self.denominator)

    def to_json(self) -> str:
        body = {
            "resolution": self.resolution,
            "wires": self.wires,
            "pmf": {str(v): [p.numerator, p.denominator] for v, p in self.entries.items()},
        }
        return json.dumps(body, indent=2)

    def to_csv(self) -> str:
        rows = ["value,probability"]
        for v, p in self.entries.items():
            rows.append(f"{v},{float(p):.15g}")
        return "\n".join(rows) + "\n"


def _radix(model: DelayModel) -> int:
    if model.kind not in ("binary", "ternary"):
        raise ValueError(f"exhaustive enumeration needs a uniform random model, not {model}")
    # shipped uniform models have support {0, .., radix-1}, so digit == delay
    return len(model.support)


def enumeration_size(spec: ConeSpec, model: DelayModel) -> int:
    return _radix(model) ** spec.wire_count


def _enumerate_chunk(args):
    H, span, radix, lo, hi, nwires, tmax = args
    return K.enumerate_range(H, span, radix, lo, hi, nwires, tmax)


def _enumerate(spec: ConeSpec, model: DelayModel, guard: int, force: bool, workers: int):
    radix = _radix(model)
    total = enumeration_size(spec, model)
    if total > guard and not force:
        raise GuardRefusal(
            f"{total} assignments exceed the enumeration guard {guard}; "
            "use Monte Carlo or pass force=True")
    tmax = spec.height * model.max_delay
    jobs = [
        (spec.height, spec.span, radix, lo, min(lo + _CHUNK, total), spec.wire_count, tmax)
        for lo in range(0, total, _CHUNK)
    ]
    delay = np.zeros(tmax + 1, np.int64)
    skew = np.zeros(2 * tmax + 1, np.int64)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_enumerate_chunk, jobs))
    else:
        parts = [_enumerate_chunk(job) for job in jobs]
    for d, s in parts:
        delay += d
        skew += s
    return delay, skew, total, tmax


def _to_pmf(counts: np.ndarray, offset: int, total: int, wires: int, resolution: int) -> ExactPmf:
    nz = np.nonzero(counts)[0]
    return ExactPmf({int(i) + offset: int(counts[i]) for i in nz}, total, wires, resolution)


def exact_delay_pmf(height: int, model: DelayModel | None = None, *, guard: int = DEFAULT_GUARD,
                    force: bool = False, workers: int = 1) -> ExactPmf:
    """Exact distribution of d(0, H) (scaled units)."""
    model = model or DelayModel.binary()
    spec = ConeSpec(height, 0)
    delay, _, total, _ = _enumerate(spec, model, guard, force, workers)
    return _to_pmf(delay, 0, total, spec.wire_count, model.resolution)


def exact_skew_pmf(height: int, delta: int = 1, model: DelayModel | None = None, *,
                   guard: int = DEFAULT_GUARD, force: bool = False, workers: int = 1) -> ExactPmf:
    """Exact distribution of d(delta, H) - d(0, H) (scaled units)."""
    model = model or DelayModel.binary()
    spec = ConeSpec(height, delta)
    _, skew, total, tmax = _enumerate(spec, model, guard, force, workers)
    return _to_pmf(skew, -tmax, total, spec.wire_count, model.resolution)


def exact_mean(pmf: ExactPmf) -> Fraction:
    return sum((v * Fraction(c, pmf.denominator) for v, c in pmf.counts.items()), Fraction(0))


def exact_variance(pmf: ExactPmf) -> Fraction:
    mu = exact_mean(pmf)
    return sum(((v - mu) ** 2 * Fraction(c, pmf.denominator) for v, c in pmf.counts.items()),
               Fraction(0))


def log2_assignments(spec: ConeSpec, model: DelayModel) -> float:
    return spec.wire_count * math.log2(_radix(model))

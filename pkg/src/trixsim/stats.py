"""Estimators and error bounds for integer-valued samples.

Histograms keep exact integer counts; moments are accumulated with Python
integers and only converted to floating point at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InconsistencyError


@dataclass(frozen=True)
class Histogram:
    offset: int
    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("histogram needs at least one bucket")
        if (counts < 0).any():
            raise ValueError("histogram counts must be non-negative")
        if counts[0] == 0 or counts[-1] == 0:
            raise ValueError("histogram must start and end on a nonzero count")
        if int(counts.sum()) != self.n:
            raise ValueError(f"counts sum to {int(counts.sum())}, not n = {self.n}")

    @classmethod
    def from_counts(cls, counts, offset: int = 0) -> Histogram:
        """Build from a dense count array whose index 0 is value ``offset``; trims zeros."""
        counts = np.asarray(counts, dtype=np.int64)
        nz = np.nonzero(counts)[0]
        if nz.size == 0:
            raise ValueError("cannot build a histogram from zero samples")
        lo, hi = int(nz[0]), int(nz[-1])
        trimmed = counts[lo:hi + 1].copy()
        return cls(offset + lo, trimmed, int(trimmed.sum()))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> Histogram:
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                         dtype=np.int64)
        if arr.size == 0:
            raise ValueError("cannot build a histogram from zero samples")
        lo = int(arr.min())
        return cls.from_counts(np.bincount(arr - lo), lo)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> Histogram:
        items = {int(k): int(v) for k, v in mapping.items() if v}
        if not items:
            raise ValueError("cannot build a histogram from zero samples")
        lo, hi = min(items), max(items)
        dense = np.zeros(hi - lo + 1, np.int64)
        for k, v in items.items():
            dense[k - lo] = v
        return cls(lo, dense, int(dense.sum()))

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.counts.size, dtype=np.int64)

    @property
    def min_value(self) -> int:
        return self.offset

    @property
    def max_value(self) -> int:
        return self.offset + self.counts.size - 1

    @property
    def phat(self) -> np.ndarray:
        return self.counts / self.n

    def count(self, value: int) -> int:
        i = value - self.offset
        return int(self.counts[i]) if 0 <= i < self.counts.size else 0

    def power_sums(self) -> tuple[int, int]:
        s1 = s2 = 0
        for v, c in zip(self.values.tolist(), self.counts.tolist()):
            s1 += c * v
            s2 += c * v * v
        return s1, s2

    def mean(self) -> float:
        s1, _ = self.power_sums()
        return s1 / self.n

    def merge(self, other: Histogram) -> Histogram:
        lo = min(self.offset, other.offset)
        hi = max(self.max_value, other.max_value)
        dense = np.zeros(hi - lo + 1, np.int64)
        dense[self.offset - lo:self.offset - lo + self.counts.size] += self.counts
        dense[other.offset - lo:other.offset - lo + other.counts.size] += other.counts
        return Histogram(lo, dense, self.n + other.n)

    def ecdf(self, x: float) -> float:
        """Fraction of samples <= x."""
        k = math.floor(x) - self.offset
        if k < 0:
            return 0.0
        return int(self.counts[: k + 1].sum()) / self.n


def empirical_mean(data) -> float:
    if isinstance(data, Histogram):
        return data.mean()
    arr = np.asarray(data, dtype=float)
    return float(arr.mean())


def empirical_stddev(data) -> float:
    """Sample standard deviation with Bessel's correction.

    For a histogram (or any integer sequence) the sums are exact and the only
    rounding happens in the final division and square root.
    """
    if not isinstance(data, Histogram):
        seq = list(data)
        if seq and all(isinstance(v, (int, np.integer)) for v in seq):
            data = Histogram.from_values(seq) if len(seq) else None
        else:
            arr = np.asarray(seq, dtype=float)
            if arr.size < 2:
                raise ValueError("standard deviation needs at least two samples")
            return float(arr.std(ddof=1))
    if data is None or data.n < 2:
        raise ValueError("standard deviation needs at least two samples")
    s1, s2 = data.power_sums()
    n = data.n
    return math.sqrt((n * s2 - s1 * s1) / (n * (n - 1)))


def dkw_epsilon(n: int, alpha: float) -> float:
    """Half-width of the uniform CDF band holding with probability 1 - alpha."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def dkw_sample_size(epsilon: float, alpha: float) -> float:
    """Sample count at which the DKW half-width equals ``epsilon``."""
    return math.log(2.0 / alpha) / (2.0 * epsilon * epsilon)


def ks_distance(hist: Histogram, cdf: Callable[[int], float], lo: int | None = None,
                hi: int | None = None) -> float:
    """sup over integers of |ECDF - cdf|, scanning [lo, hi] (defaults to the support)."""
    lo = hist.min_value if lo is None else min(lo, hist.min_value)
    hi = hist.max_value if hi is None else max(hi, hist.max_value)
    cum = 0
    worst = 0.0
    for v in range(lo, hi + 1):
        cum += hist.count(v)
        worst = max(worst, abs(cum / hist.n - float(cdf(v))))
    return worst


def within_dkw(hist: Histogram, cdf: Callable[[int], float], alpha: float,
               lo: int | None = None, hi: int | None = None) -> bool:
    return ks_distance(hist, cdf, lo, hi) <= dkw_epsilon(hist.n, alpha)


# --- Chernoff bucket bounds -------------------------------------------------

_REL_TOL = 1e-9


def _log_upper_tail(k: int, n: int, p: float) -> float:
    # log of (e^d / (1+d)^(1+d))^(np) with d = k/(np) - 1
    mu = n * p
    return (k - mu) - k * math.log(k / mu)


def _log_lower_tail(k: int, n: int, p: float) -> float:
    # log of exp(-np d^2 / 2) with d = 1 - k/(np)
    mu = n * p
    return -((mu - k) ** 2) / (2.0 * mu)


def chernoff_bucket_bounds(k: int, n: int, alpha_bucket: float) -> tuple[float, float]:
    """[p_min, p_max] for a bucket observed ``k`` times out of ``n``.

    p_max is the smallest p >= k/n at which the multiplicative lower-tail
    bound on seeing at most k drops to ``alpha_bucket``; p_min the largest
    p <= k/n at which the upper-tail bound on seeing at least k does.
    Both are located by bisection to relative tolerance 1e-9.
    """
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0 < alpha_bucket < 1:
        raise ValueError("per-bucket failure probability must lie in (0, 1)")
    target = math.log(alpha_bucket)
    phat = k / n

    if _log_lower_tail(k, n, 1.0) > target:
        p_max = 1.0
    else:
        lo, hi = phat, 1.0
        while hi - lo > _REL_TOL * hi:
            mid = 0.5 * (lo + hi)
            if mid > 0 and _log_lower_tail(k, n, mid) <= target:
                hi = mid
            else:
                lo = mid
        p_max = hi

    if k == 0:
        p_min = 0.0
    else:
        lo, hi = 0.0, phat
        while hi - lo > _REL_TOL * hi:
            mid = 0.5 * (lo + hi)
            if _log_upper_tail(k, n, mid) <= target:
                lo = mid
            else:
                hi = mid
        p_min = lo
    return p_min, p_max


@dataclass(frozen=True)
class BucketPolicy:
    """Which values get their own bucket.

    Every nonzero value inside ``window`` (default: the whole support) is a
    bucket; everything else (zero counts inside the window, all values
    outside it, unobserved tails) shares one pooled bucket.
    """

    window: tuple[int, int] | None = None

    def describe(self) -> str:
        if self.window is None:
            return "singletons+pooled"
        return f"singletons[{self.window[0]},{self.window[1]}]+pooled"


@dataclass(frozen=True)
class ConfidenceBand:
    values: np.ndarray
    phat: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    own_bucket: np.ndarray
    pool_count: int
    pool_min: float
    pool_max: float
    n: int
    alpha: float
    alpha_bucket: float
    buckets: int
    dkw_epsilon: float
    policy: BucketPolicy = field(default_factory=BucketPolicy)
    method: str = "chernoff-bucket"

    def bounds(self, value: int) -> tuple[float, float]:
        i = value - int(self.values[0])
        if 0 <= i < self.values.size:
            return float(self.p_min[i]), float(self.p_max[i])
        return 0.0, self.pool_max

    def relative_halfwidth(self, value: int) -> float:
        i = value - int(self.values[0])
        p = float(self.phat[i])
        return max(p - float(self.p_min[i]), float(self.p_max[i]) - p) / p

    def contains(self, pmf: Mapping[int, float]) -> bool:
        """True if every per-value bound and the pooled bound hold for ``pmf``."""
        pooled = 0.0
        for v, p in pmf.items():
            p = float(p)
            i = v - int(self.values[0])
            if 0 <= i < self.values.size and self.own_bucket[i]:
                if not self.p_min[i] <= p <= self.p_max[i]:
                    return False
            else:
                pooled += p
        return self.pool_min <= pooled <= self.pool_max


def confidence_band(hist: Histogram, alpha: float = 0.01,
                    policy: BucketPolicy | None = None) -> ConfidenceBand:
    """Chernoff per-bucket band with a union bound over all buckets."""
    policy = policy or BucketPolicy()
    lo, hi = policy.window or (hist.min_value, hist.max_value)
    values = np.arange(lo, hi + 1, dtype=np.int64)
    counts = np.array([hist.count(int(v)) for v in values], dtype=np.int64)
    own = counts > 0
    pool_count = hist.n - int(counts[own].sum())
    buckets = int(own.sum()) + 1
    alpha_bucket = alpha / buckets
    p_min = np.zeros(values.size)
    p_max = np.zeros(values.size)
    for i in np.nonzero(own)[0]:
        p_min[i], p_max[i] = chernoff_bucket_bounds(int(counts[i]), hist.n, alpha_bucket)
    pool_min, pool_max = chernoff_bucket_bounds(pool_count, hist.n, alpha_bucket)
    # zero-count values in the window can hold at most the pooled mass
    p_max[~own] = pool_max
    return ConfidenceBand(
        values=values,
        phat=counts / hist.n,
        p_min=p_min,
        p_max=p_max,
        own_bucket=own,
        pool_count=pool_count,
        pool_min=pool_min,
        pool_max=pool_max,
        n=hist.n,
        alpha=alpha,
        alpha_bucket=alpha_bucket,
        buckets=buckets,
        dkw_epsilon=dkw_epsilon(hist.n, alpha),
        policy=policy,
    )


# --- standard deviation error bars -----------------------------------------

def _geometric_tail_moments(edge: int, direction: int, ratio: float) -> tuple[float, float]:
    """E[X], E[X^2] for X = edge + direction * J with J ~ Geometric(1 - ratio) on {1, 2, ...}."""
    ej = 1.0 / (1.0 - ratio)
    ej2 = (1.0 + ratio) / (1.0 - ratio) ** 2
    return edge + direction * ej, edge * edge + 2.0 * direction * edge * ej + ej2


def _spread(mass: Sequence[float], values: Sequence[float], extra: Sequence[tuple[float, float, float]]):
    m1 = sum(p * v for p, v in zip(mass, values))
    m2 = sum(p * v * v for p, v in zip(mass, values))
    for q, e1, e2 in extra:
        m1 += q * e1
        m2 += q * e2
    return max(m2 - m1 * m1, 0.0)


def stddev_interval(hist: Histogram, band: ConfidenceBand,
                    lambda_min: float = 2.0) -> tuple[float, float]:
    """Bounds on the standard deviation over all pmfs compatible with ``band``.

    Starting from every bucket at its lower bound, the missing mass is handed
    out nearest-to-the-mean first for the lower end and farthest-first for
    the upper end. Pooled (unobserved) mass is placed for the upper end as
    geometric tails beyond the observed support decaying at rate
    ``lambda_min`` per unit, for the lower end on the pooled value closest to
    the mean. The result is rescaled by sqrt(n / (n - 1)) to match
    `empirical_stddev` and always contains it.
    """
    if hist.n < 2:
        raise ValueError("standard deviation needs at least two samples")
    if lambda_min <= 0:
        raise ValueError("tail decay floor must be positive")
    own = np.nonzero(band.own_bucket)[0]
    vals = band.values[own].astype(float)
    lo_b = band.p_min[own]
    hi_b = band.p_max[own]
    total_lo = float(lo_b.sum()) + band.pool_min
    total_hi = float(hi_b.sum()) + band.pool_max
    if total_lo > 1.0 + 1e-12 or total_hi < 1.0 - 1e-12:
        raise InconsistencyError(
            f"band cannot renormalise: lower bounds sum to {total_lo}, upper to {total_hi}")
    mean = hist.mean()
    dist = np.abs(vals - mean)

    def fill(order, pool_first):
        p = lo_b.copy()
        q = band.pool_min
        rest = 1.0 - float(p.sum()) - q
        if pool_first:
            take = min(rest, band.pool_max - q)
            q += take
            rest -= take
        for i in order:
            if rest <= 0:
                break
            take = min(rest, hi_b[i] - p[i])
            p[i] += take
            rest -= take
        if rest > 0:
            q += min(rest, band.pool_max - q)
        return p, q

    # lower end: mass inward, pooled mass on the nearest pooled location
    p, q = fill(np.argsort(dist, kind="stable"), pool_first=False)
    candidates = [int(v) for v in band.values[~band.own_bucket]]
    candidates += [int(band.values[0]) - 1, int(band.values[-1]) + 1]
    near = min(candidates, key=lambda v: abs(v - mean))
    var_lo = _spread(p, vals, [(q, near, near * near)])

    # upper end: pooled mass as geometric tails, remaining mass outward
    p, q = fill(np.argsort(-dist, kind="stable"), pool_first=True)
    ratio = math.exp(-lambda_min)
    left = _geometric_tail_moments(int(band.values[0]), -1, ratio)
    right = _geometric_tail_moments(int(band.values[-1]), +1, ratio)
    var_hi = max(
        _spread(p, vals, [(q, *left)]),
        _spread(p, vals, [(q, *right)]),
        _spread(p, vals, [(q / 2, *left), (q / 2, *right)]),
    )

    bessel = math.sqrt(hist.n / (hist.n - 1))
    sigma = empirical_stddev(hist)
    return min(math.sqrt(var_lo) * bessel, sigma), max(math.sqrt(var_hi) * bessel, sigma)


def bootstrap_stddev_interval(hist: Histogram, resamples: int = 1000, level: float = 0.99,
                              seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the standard deviation."""
    rng = np.random.default_rng(seed)
    vals = hist.values.astype(float)
    draws = rng.multinomial(hist.n, hist.phat, size=resamples)
    m1 = draws @ vals / hist.n
    m2 = draws @ (vals * vals) / hist.n
    sig = np.sqrt(np.maximum(m2 - m1 * m1, 0.0) * hist.n / (hist.n - 1))
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(sig, [tail, 1.0 - tail])
    return float(lo), float(hi)


# --- normal quantile (Wichura, AS 241 PPND16) --------------------------------

_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def normal_quantile(p: float, mu: float = 0.0, sigma: float = 1.0) -> float:
    """Inverse normal CDF via a rational approximation (|error| ~ 1e-16 in z)."""
    if not 0.0 < p < 1.0:
        raise ValueError("normal quantile needs 0 < p < 1")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        z = q * _poly(_A, r) / _poly(_B, r)
    else:
        r = math.sqrt(-math.log(p if q < 0 else 1.0 - p))
        if r <= 5.0:
            r -= 1.6
            z = _poly(_C, r) / _poly(_D, r)
        else:
            r -= 5.0
            z = _poly(_E, r) / _poly(_F, r)
        if q < 0:
            z = -z
    return mu + sigma * z


def ecdf_and_qq(hist: Histogram, mu: float, sigma: float) -> list[tuple[float, float]]:
    """(k + 0.5, normal quantile of ECDF(k + 0.5)) across the support.

    Points where the ECDF is 0 or 1 have no finite quantile and are skipped.
    """
    if sigma <= 0:
        raise ValueError("reference standard deviation must be positive")
    out = []
    cum = 0
    for v, c in zip(hist.values.tolist(), hist.counts.tolist()):
        cum += c
        if 0 < cum < hist.n:
            out.append((v + 0.5, normal_quantile(cum / hist.n, mu, sigma)))
    return out


# --- fits --------------------------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    decay: float
    k_lo: int
    k_hi: int
    side: str
    residual: float
    intercept: float


def fit_exponential_tail(hist: Histogram, k_lo: int = 1, k_hi: int = 4,
                         side: str = "pooled") -> TailFit:
    """Least-squares fit of ln p(k) = c - decay * |k| over k_lo <= |k| <= k_hi.

    ``side`` picks the right tail, the left tail, or the average of both
    (``pooled``). Zero is never part of the fit.
    """
    if side not in ("left", "right", "pooled"):
        raise ValueError(f"unknown side {side!r}")
    if not 1 <= k_lo < k_hi:
        raise ValueError("need 1 <= k_lo < k_hi")
    ks = np.arange(k_lo, k_hi + 1)
    probs = []
    for k in ks.tolist():
        right, left = hist.count(k), hist.count(-k)
        used = {"right": (right,), "left": (left,), "pooled": (right, left)}[side]
        if min(used) == 0:
            raise ValueError(f"zero count at |k| = {k} inside the fit range")
        probs.append(sum(used) / len(used) / hist.n)
    y = np.log(np.asarray(probs))
    slope, intercept = np.polyfit(ks.astype(float), y, 1)
    resid = y - (slope * ks + intercept)
    if slope >= 0:
        raise ValueError(f"tail does not decay over [{k_lo}, {k_hi}] (slope {slope:.3g})")
    return TailFit(float(-slope), k_lo, k_hi, side, float(np.sqrt((resid ** 2).sum())),
                   float(intercept))


_COORDS = ("log-log", "loglog-lin", "log-lin")


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    residual: float
    coordinates: str
    points: int


def fit_power_law(axis: Sequence[float], values: Sequence[float],
                  coordinates: str = "log-log") -> PowerLawFit:
    """Ordinary least squares after transforming (axis, value).

    ``log-log``: (ln x, ln y); ``log-lin``: (ln x, y); ``loglog-lin``: (ln ln x, y).
    """
    if coordinates not in _COORDS:
        raise ValueError(f"coordinates must be one of {_COORDS}")
    x = np.asarray(axis, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least three (axis, value) points")
    if (x <= 0).any():
        raise ValueError("log transform needs positive axis values")
    if coordinates == "log-log":
        if (y <= 0).any():
            raise ValueError("log transform needs positive values")
        tx, ty = np.log(x), np.log(y)
    elif coordinates == "log-lin":
        tx, ty = np.log(x), y
    else:
        if (x <= 1).any():
            raise ValueError("log-log transform of the axis needs values > 1")
        tx, ty = np.log(np.log(x)), y
    slope, intercept = np.polyfit(tx, ty, 1)
    resid = ty - (slope * tx + intercept)
    return PowerLawFit(float(slope), float(intercept), float(np.sqrt((resid ** 2).sum())),
                       coordinates, int(x.size))


@dataclass
class SweepResult:
    axis_name: str
    axis: list[int]
    n: list[int]
    mean: list[float]
    stddev: list[float]
    stddev_lo: list[float]
    stddev_hi: list[float]
    boot_lo: list[float]
    boot_hi: list[float]
    fits: dict[str, PowerLawFit] = field(default_factory=dict)

    def rows(self):
        for i, a in enumerate(self.axis):
            yield (a, self.n[i], self.mean[i], self.stddev[i], self.stddev_lo[i], self.stddev_hi[i])

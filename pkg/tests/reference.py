"""Plain-Python cone evaluation, independent of the compiled kernels."""

from trixsim.grid import ConeSpec
from trixsim.models import DelayModel
from trixsim.rng import RngStream


def reference_layers(spec: ConeSpec, model: DelayModel, stream: RngStream | None = None,
                     delays=None):
    """All layers as dicts {x: time}; draws wire delays in the documented order."""
    H = spec.height
    table = iter(delays) if delays is not None else None
    layers = [{x: 0 for x in range(-H, spec.span + H + 1)}]
    for y in range(1, H + 1):
        if stream is not None:
            stream.flush()
        lo, hi = spec.bounds(y)
        prev = layers[-1]
        cur = {}
        for x in range(lo, hi + 1):
            arrivals = []
            for c in (-1, 0, 1):
                w = next(table) if table is not None else stream.next_delay(model, target_x=x)
                arrivals.append(prev[x + c] + w)
            cur[x] = sorted(arrivals)[1]
        layers.append(cur)
    return layers


def reference_top(spec: ConeSpec, model: DelayModel, stream: RngStream | None = None,
                  delays=None) -> list[int]:
    top = reference_layers(spec, model, stream, delays)[-1]
    return [top[x] for x in range(spec.span + 1)]

"""Wire-delay models.

All delays are integers in scaled units; a model's ``resolution`` says how
many scaled units make one unit of link-delay uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K

_KIND_CODES = {
    "binary": K.MODEL_BINARY,
    "ternary": K.MODEL_TERNARY,
    "split": K.MODEL_SPLIT,
    "const": K.MODEL_CONST,
    "table": K.MODEL_TABLE,
}

MAX_SCALED_DELAY = 255


@dataclass(frozen=True)
class DelayModel:
    kind: str
    resolution: int
    support: tuple[int, ...]
    boundary: int = 1
    value: int = 0
    table: np.ndarray | None = field(default=None, compare=False, repr=False)

    @classmethod
    def binary(cls) -> DelayModel:
        """Fair coin per wire: delay 0 or 1."""
        return cls("binary", 1, (0, 1))

    @classmethod
    def ternary(cls) -> DelayModel:
        """Uniform over {0, 0.5, 1}, stored as {0, 1, 2} at resolution 2."""
        return cls("ternary", 2, (0, 1, 2))

    @classmethod
    def split(cls, boundary: int = 1) -> DelayModel:
        """Wires into columns x >= boundary are slow (1), all others fast (0)."""
        return cls("split", 1, (0, 1), boundary=int(boundary))

    @classmethod
    def constant(cls, value: int = 0) -> DelayModel:
        value = int(value)
        if not 0 <= value <= MAX_SCALED_DELAY:
            raise ValueError(f"constant delay must lie in [0, {MAX_SCALED_DELAY}], got {value}")
        return cls("const", 1, (value,), value=value)

    @classmethod
    def explicit(cls, delays, resolution: int = 1) -> DelayModel:
        """Fixed per-wire delays listed in draw order."""
        table = np.ascontiguousarray(delays, dtype=np.int32)
        if table.ndim != 1:
            raise ValueError("delay table must be one-dimensional")
        if table.size and (table.min() < 0 or table.max() > MAX_SCALED_DELAY):
            raise ValueError(f"table delays must lie in [0, {MAX_SCALED_DELAY}]")
        support = tuple(int(v) for v in np.unique(table))
        return cls("table", int(resolution), support, table=table)

    @classmethod
    def parse(cls, text: str) -> DelayModel:
        """Parse ``binary``, ``ternary``, ``split:<x*>`` or ``const:<w>``."""
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        try:
            if name == "binary" and not arg:
                return cls.binary()
            if name == "ternary" and not arg:
                return cls.ternary()
            if name == "split":
                return cls.split(int(arg) if arg else 1)
            if name == "const":
                return cls.constant(int(arg) if arg else 0)
        except ValueError as exc:
            raise ValueError(f"bad delay model {text!r}: {exc}") from None
        raise ValueError(f"unknown delay model {text!r}")

    @property
    def stochastic(self) -> bool:
        return self.kind in ("binary", "ternary")

    @property
    def max_delay(self) -> int:
        """Largest scaled delay any wire can take."""
        return max(self.support) if self.support else 0

    @property
    def kernel_code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def kernel_param(self) -> int:
        if self.kind == "split":
            return self.boundary
        if self.kind == "const":
            return self.value
        return 0

    def kernel_table(self) -> np.ndarray:
        return self.table if self.table is not None else np.zeros(1, np.int32)

    def __str__(self) -> str:
        if self.kind == "split":
            return f"split:{self.boundary}"
        if self.kind == "const":
            return f"const:{self.value}"
        return self.kind

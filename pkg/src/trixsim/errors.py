from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid parameters or a request outside the simulated cone."""


class GuardRefusal(RuntimeError):
    """A job exceeds a resource guard and no override was given."""


class InconsistencyError(RuntimeError):
    """Results that violate an invariant the code relies on."""

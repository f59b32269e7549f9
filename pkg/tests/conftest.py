import os
from pathlib import Path

import pytest

from trixsim.experiments import ConeCounts, sample_cone
from trixsim.grid import ConeSpec
from trixsim.models import DelayModel

DATA = Path(__file__).resolve().parents[1] / "src" / "trixsim" / "data"

_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TRIXSIM_SLOW"):
        return
    skip = pytest.mark.skip(reason="slow; set TRIXSIM_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _criteria[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))


class ConeCache:
    """Session-wide Monte Carlo results keyed by cone, model, rng and seed.

    Sample ``i`` always comes from stream (seed, i), so a request for n
    samples extends the largest cached prefix instead of starting over.
    """

    def __init__(self):
        self._runs: dict[tuple, dict[int, ConeCounts]] = {}

    def get(self, height: int, span: int, model: DelayModel, n: int, seed: int,
            rng: str = "xoshiro512ss") -> ConeCounts:
        key = (height, span, model, rng, seed)
        prefixes = self._runs.setdefault(key, {})
        if n in prefixes:
            return prefixes[n]
        spec = ConeSpec(height, span)
        below = [m for m in prefixes if m < n] if rng != "os" else []
        if below:
            base = prefixes[max(below)]
            counts = base.merge(sample_cone(spec, model, n - base.n, seed, rng, start=base.n))
        else:
            counts = sample_cone(spec, model, n, seed, rng)
        prefixes[n] = counts
        return counts


@pytest.fixture(scope="session")
def cones() -> ConeCache:
    return ConeCache()


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA

import json
from fractions import Fraction as F

import pytest

from trixsim import GuardRefusal
from trixsim.grid import ConeSpec
from trixsim.models import DelayModel
from trixsim.oracle import (
    enumeration_size,
    exact_delay_pmf,
    exact_mean,
    exact_skew_pmf,
    exact_variance,
)


def test_height_zero():
    assert exact_delay_pmf(0).entries == {0: 1}


def test_height_one():
    pmf = exact_delay_pmf(1)
    assert pmf.entries == {0: F(1, 2), 1: F(1, 2)}
    assert pmf.denominator == 2**3


def test_height_two():
    pmf = exact_delay_pmf(2)
    assert pmf.entries == {0: F(5, 32), 1: F(22, 32), 2: F(5, 32)}
    assert sum(pmf.counts.values()) == 2**12
    assert exact_mean(pmf) == 1


def test_skew_height_one():
    assert exact_skew_pmf(1, 1).entries == {-1: F(1, 4), 0: F(1, 2), 1: F(1, 4)}
    assert exact_skew_pmf(1, 2).entries == exact_skew_pmf(1, 1).entries


def test_skew_delta_zero():
    assert exact_skew_pmf(2, 0).entries == {0: 1}


def test_skew_height_two_is_symmetric_with_zero_mean():
    pmf = exact_skew_pmf(2, 1)
    assert exact_mean(pmf) == 0
    assert all(pmf.probability(k) == pmf.probability(-k) for k in pmf.counts)
    assert sum(pmf.counts.values()) == 2 ** ConeSpec(2, 1).wire_count


@pytest.mark.parametrize("H", [0, 1, 2])
def test_delay_symmetry_and_mean(H):
    pmf = exact_delay_pmf(H)
    assert exact_mean(pmf) == F(H, 2)
    assert all(pmf.probability(k) == pmf.probability(H - k) for k in pmf.counts)


def test_ternary_height_one():
    pmf = exact_delay_pmf(1, DelayModel.ternary())
    # median of three uniform {0,1,2}: P(0) = 3*(1/3)^2*(2/3) + (1/3)^3
    assert pmf.entries == {0: F(7, 27), 1: F(13, 27), 2: F(7, 27)}
    assert pmf.resolution == 2


def test_exact_variance():
    pmf = exact_delay_pmf(1)
    assert exact_variance(pmf) == F(1, 4)
    assert exact_mean(exact_delay_pmf(0)) == 0


def test_guard_refuses_large_cones():
    assert enumeration_size(ConeSpec(3, 1), DelayModel.binary()) > 2**30
    with pytest.raises(GuardRefusal):
        exact_skew_pmf(3, 1)
    with pytest.raises(GuardRefusal):
        exact_delay_pmf(2, guard=100)


def test_non_uniform_model_rejected():
    with pytest.raises(ValueError):
        exact_delay_pmf(1, DelayModel.constant(0))


def test_partitioning_does_not_change_result(monkeypatch):
    from trixsim import oracle

    whole = exact_skew_pmf(2, 1)
    monkeypatch.setattr(oracle, "_CHUNK", 1000)
    split = exact_skew_pmf(2, 1, workers=2)
    assert split.counts == whole.counts


def test_serialisation():
    pmf = exact_delay_pmf(2)
    assert json.loads(pmf.to_json())["pmf"] == {"0": [5, 32], "1": [11, 16], "2": [5, 32]}
    assert pmf.to_csv().splitlines() == ["value,probability", "0,0.15625", "1,0.6875",
                                         "2,0.15625"]


@pytest.mark.slow
def test_height_three_exact():
    pmf = exact_delay_pmf(3)
    assert sum(pmf.counts.values()) == 2**27
    assert exact_mean(pmf) == F(3, 2)
    assert pmf.entries == {0: F(219, 8192), 1: F(3877, 8192), 2: F(3877, 8192), 3: F(219, 8192)}

import json
from dataclasses import replace

import numpy as np
import pytest

from trixsim import ConfigurationError, GuardRefusal
from trixsim.experiments import (
    ExperimentConfig,
    load_config,
    run_cross_validation,
    run_distribution,
    run_experiment,
    run_oracle_check,
    run_sweep,
    sample_cone,
)
from trixsim.grid import ConeSpec
from trixsim.models import DelayModel


@pytest.mark.parametrize("kwargs", [
    dict(heights=(5, 5)),
    dict(heights=(10, 5)),
    dict(heights=()),
    dict(deltas=(41,), heights=(20,)),
    dict(samples=0),
    dict(model="quaternary"),
    dict(rng="mt19937"),
    dict(alpha=1.5),
    dict(seed=-3),
    dict(tail_range=(2, 2)),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ExperimentConfig("delay-pmf", **kwargs)


def test_config_rejects_unknown_scenario_and_keys():
    with pytest.raises(ConfigurationError):
        ExperimentConfig("histogram")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"scenario": "delay-pmf", "hieght": 3})
    with pytest.raises(ConfigurationError):
        ExperimentConfig("delta-sweep", heights=(10, 20))


def test_config_hash_ignores_runtime_fields():
    a = ExperimentConfig("delay-pmf", seed=1)
    assert a.config_hash() == replace(a, workers=8, out="x", force=True).config_hash()
    assert a.config_hash() != replace(a, seed=2).config_hash()


def test_config_file_round_trip(tmp_path):
    cfg = ExperimentConfig("skew-sweep", heights=(5, 10, 20), deltas=(2,), seed="0x10")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert load_config(p) == cfg
    assert cfg.seed == 16
    p.write_text("[1, 2]")
    with pytest.raises(ConfigurationError):
        load_config(p)


def test_unseeded_config_gets_a_seed():
    cfg = ExperimentConfig("delay-pmf").resolved()
    assert cfg.seed is not None and cfg.seed_text.startswith("0x")


def test_sampling_is_independent_of_partitioning():
    spec, model = ConeSpec(9, 2), DelayModel.ternary()
    whole = sample_cone(spec, model, 3000, seed=5)
    parts = sample_cone(spec, model, 1000, seed=5).merge(
        sample_cone(spec, model, 2000, seed=5, start=1000))
    pooled = sample_cone(spec, model, 3000, seed=5, workers=3)
    for other in (parts, pooled):
        assert (whole.delay == other.delay).all() and (whole.skew == other.skew).all()
    assert parts.n == 3000


def test_os_entropy_sampling_runs():
    counts = sample_cone(ConeSpec(4, 1), DelayModel.binary(), 500, rng="os")
    assert counts.delay.sum() == 500


def test_delay_distribution_report():
    r = run_distribution(ExperimentConfig("delay-pmf", heights=(2, 6), samples=20000, seed=3,
                                          bootstrap=100))
    assert set(r.distributions) == {"delay_h2", "delay_h6"}
    assert r.ok
    assert r.check("mean-pin delay H=6").passed
    assert "delay_h6" in r.qq
    s = r.distributions["delay_h6"]
    assert s.stddev_lo <= s.stddev <= s.stddev_hi
    assert s.boot_lo <= s.stddev <= s.boot_hi


def test_skew_distribution_with_split_model():
    r = run_distribution(ExperimentConfig("skew-pmf", heights=(7,), deltas=(1,), samples=5,
                                          model="split:1", seed=1))
    h = r.distributions["skew_h7_d1"].histogram
    assert h.counts.tolist() == [5] and h.offset == 7
    assert r.ok
    assert not any(c.name.startswith("mean-pin") for c in r.checks)


def test_skew_distribution_has_tail_fit():
    cfg = ExperimentConfig("skew-pmf", heights=(20,), samples=200_000, seed=2, bootstrap=0,
                           tail_range=(1, 3))
    r = run_distribution(cfg)
    assert 2.0 < r.tails["skew_h20_d1"].decay < 4.0
    assert r.check("mean-pin skew H=20 delta=1").passed
    # this sample never reaches skew +4, so the default range cannot be fitted
    r = run_distribution(replace(cfg, tail_range=(1, 4)))
    assert r.tails == {} and any("zero count" in n for n in r.notes)


def test_ternary_tail_fit_uses_physical_units():
    r = run_distribution(ExperimentConfig("skew-pmf", heights=(20,), samples=100_000, seed=2,
                                          model="ternary", bootstrap=0))
    s = r.distributions["skew_h20_d1"]
    assert s.resolution == 2
    assert s.stddev == pytest.approx(s.histogram and
                                     __import__("trixsim").empirical_stddev(s.histogram) / 2)
    assert any("1/2" in n for n in r.notes)


def test_delay_sweep_fits_beta():
    r = run_sweep(ExperimentConfig("delay-sweep", heights=(10, 20, 40), samples=20000, seed=4,
                                   bootstrap=0))
    assert r.sweep.axis == [10, 20, 40]
    assert 0.1 < r.sweep.fits["beta"].slope < 0.4


def test_skew_sweep_needs_three_points_for_fits():
    r = run_sweep(ExperimentConfig("skew-sweep", heights=(5, 10), samples=2000, seed=4,
                                   bootstrap=0))
    assert r.sweep.fits == {}
    assert any("fit skipped" in n for n in r.notes)


def test_delta_sweep_shares_one_cone():
    r = run_sweep(ExperimentConfig("delta-sweep", heights=(60,), deltas=(1, 2, 3, 6), samples=4000,
                                   seed=4, bootstrap=0))
    assert r.sweep.axis == [1, 2, 3, 6]
    assert r.sweep.fits["gamma"].points == 3
    assert r.samples_total == 4000


def test_cross_validation_tiny_n_is_inconclusive():
    r = run_cross_validation(ExperimentConfig("cross-validate", heights=(10,), samples=10, seed=1,
                                              bootstrap=0))
    assert r.verdict == "inconclusive"


def test_cross_validation_moderate_n_passes():
    r = run_cross_validation(ExperimentConfig("cross-validate", heights=(10,), samples=20000,
                                              seed=1, bootstrap=0))
    assert r.verdict == "pass"
    assert r.check("model-pair skew ternary<=binary").passed


def test_oracle_check_small_heights():
    r = run_oracle_check(ExperimentConfig("oracle-check", heights=(1, 2), samples=50000, seed=9,
                                          bootstrap=0))
    assert r.ok and len(r.checks) == 8


def test_guard_refuses_and_force_changes_nothing():
    cfg = ExperimentConfig("delay-pmf", heights=(10,), samples=1000, seed=3, guard=10,
                           bootstrap=0)
    with pytest.raises(GuardRefusal):
        run_experiment(cfg)
    forced = run_experiment(replace(cfg, force=True))
    normal = run_experiment(replace(cfg, guard=1e12))
    a, b = forced.distributions["delay_h10"].histogram, normal.distributions["delay_h10"].histogram
    assert a.offset == b.offset and (a.counts == b.counts).all()


def test_written_outputs_are_reproducible(tmp_path):
    cfg = ExperimentConfig("skew-pmf", heights=(12,), deltas=(1, 3), samples=3000, seed=77,
                           bootstrap=50, record_grid=True)
    files_a = {p.name: p.read_bytes() for p in run_experiment(cfg).write(tmp_path / "a")}
    files_b = {p.name: p.read_bytes() for p in
               run_experiment(replace(cfg, workers=4)).write(tmp_path / "b")}
    csvs = [k for k in files_a if k.endswith(".csv")]
    assert "grid_h12_s3.csv" in csvs and "skew_h12_d3.csv" in csvs
    assert all(files_a[k] == files_b[k] for k in csvs)
    report = json.loads(files_a["report.json"])
    assert report["draw_order"] == "trix-draw-v1" and report["seed"] == f"0x{77:016x}"


def test_grid_recording_matches_first_sample(tmp_path):
    cfg = ExperimentConfig("delay-pmf", heights=(4,), samples=1, seed=5, record_grid=True,
                           bootstrap=0)
    r = run_experiment(cfg)
    grid = r.grids["h4_s0"]
    assert int(grid.top[0]) == int(r.distributions["delay_h4"].histogram.offset)
    assert np.array_equal(grid.layers[0], np.zeros(9, np.int32))

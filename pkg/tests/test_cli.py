import json

import pytest

from trixsim import InconsistencyError
from trixsim import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_enumerate_height_two(tmp_path, capsys):
    code, out, _ = run(capsys, "enumerate", "--height", "2", "--target", "delay",
                       "--out", str(tmp_path))
    assert code == 0
    assert out.splitlines() == ["value,probability", "0,0.15625", "1,0.6875", "2,0.15625"]
    text = (tmp_path / "exact_delay_h2.csv").read_text()
    assert "0,0.15625\n1,0.6875\n2,0.15625\n" in text
    assert json.loads((tmp_path / "exact_delay_h2.json").read_text())["pmf"]["1"] == [11, 16]


def test_enumerate_guard_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "enumerate", "--height", "3", "--target", "skew",
                       "--out", str(tmp_path))
    assert code == 2 and "refused" in err


def test_unknown_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--bogus"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_configuration_error_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--scenario", "delay-pmf", "--heights", "5,3",
                       "--out", str(tmp_path))
    assert code == 1 and "configuration error" in err
    code, _, _ = run(capsys, "simulate", "--height", "3", "--out", str(tmp_path))
    assert code == 1


def test_guard_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "2000",
                       "--samples", "25000000", "--out", str(tmp_path))
    assert code == 2 and "--force" in err


def test_inconsistency_exit_code(tmp_path, capsys, monkeypatch):
    def boom(cfg):
        raise InconsistencyError("band cannot renormalise")

    monkeypatch.setattr(cli, "run_experiment", boom)
    code, _, err = run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "3",
                       "--samples", "10", "--out", str(tmp_path))
    assert code == 3 and "inconsistency" in err


def test_simulate_is_deterministic(tmp_path, capsys):
    args = ["simulate", "--scenario", "delay-pmf", "--height", "20", "--samples", "1000000",
            "--seed", "42"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    _, out, _ = run(capsys, *args, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "delay_h20.csv").read_bytes()
    assert a == (tmp_path / "b" / "delay_h20.csv").read_bytes()
    assert (tmp_path / "a" / "qq_delay_h20.csv").read_bytes() == \
        (tmp_path / "b" / "qq_delay_h20.csv").read_bytes()
    assert '"seed": "0x000000000000002a"' in out


def test_effective_config_is_printed(tmp_path, capsys):
    _, out, _ = run(capsys, "simulate", "--scenario", "skew-pmf", "--height", "5",
                    "--samples", "100", "--out", str(tmp_path))
    cfg, _ = json.JSONDecoder().raw_decode(out)
    assert cfg["effective_config"]["samples"] == 100
    assert cfg["effective_config"]["alpha"] == 0.01
    assert cfg["seed"].startswith("0x")


def test_env_var_sets_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "3",
               "--samples", "50", "--seed", "1")[0] == 0
    assert (tmp_path / "env" / "delay_h3.csv").exists()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"scenario": "delay-sweep", "heights": [4, 8, 16],
                               "samples": 500, "seed": "0x5", "bootstrap": 0}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--samples", "700",
                       "--out", str(tmp_path / "o"))
    assert code == 0
    rows = (tmp_path / "o" / "sweep_height.csv").read_text().splitlines()
    assert "axis,n,mean,stddev,stddev_lo,stddev_hi" in rows
    assert rows[-1].startswith("16,700,")
    assert "fit beta" in out


def test_record_grid_flag(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "3",
                     "--samples", "10", "--seed", "2", "--record-grid", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "grid_h3_s0.csv").read_text().splitlines()
    assert "y,x,time" in rows
    assert sum(1 for r in rows if r[0].isdigit()) == ConeNodes(3)


def ConeNodes(h):
    return sum(2 * (h - y) + 1 for y in range(h + 1))


def test_cross_validate_subcommand(tmp_path, capsys):
    code, out, _ = run(capsys, "cross-validate", "--height", "6", "--samples", "10",
                       "--seed", "3", "--out", str(tmp_path))
    assert code == 0 and "verdict: inconclusive" in out


def test_analyze_flags_declared_dkw(data_dir, tmp_path, capsys):
    code, out, err = run(capsys, "analyze", "--input", str(data_dir / "skew_pmf_h2000.csv"),
                         "--dkw", "--alpha", "0.01", "--out", str(tmp_path))
    assert code == 0
    result = json.loads(out)
    assert result["declared_n"] == 20_000_000
    assert result["dkw_epsilon"] == pytest.approx(0.000364, abs=5e-7)
    assert "0.0005147" in result["notes"][0] and "n = 1e+07" in result["notes"][0]
    assert "0.0005147" in err
    assert 2.6 <= result["tail"]["decay"] <= 3.2


def test_analyze_round_trips_own_output(tmp_path, capsys):
    run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "8", "--samples", "5000",
        "--seed", "8", "--out", str(tmp_path))
    code, out, _ = run(capsys, "analyze", "--input", str(tmp_path / "delay_h8.csv"),
                       "--out", str(tmp_path / "an"))
    assert code == 0
    assert json.loads(out)["n"] == 5000
    original = (tmp_path / "delay_h8.csv").read_text().splitlines()
    again = (tmp_path / "an" / "delay_h8_band.csv").read_text().splitlines()
    strip = lambda rows: [r.split(",")[:2] for r in rows if not r.startswith("#")]  # noqa: E731
    assert strip(original) == strip(again)


def test_analyze_bad_input(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("value,count\n1,2\nthree,4\n")
    code, _, err = run(capsys, "analyze", "--input", str(p), "--out", str(tmp_path))
    assert code == 1 and "bad.csv:3" in err


def test_qq_subcommand(data_dir, tmp_path, capsys):
    code, out, _ = run(capsys, "qq", "--input", str(data_dir / "delay_pmf_h2000.csv"),
                       "--mu", "1000", "--sigma", "2.741", "--out", str(tmp_path))
    assert code == 0
    rows = dict(r.split(",") for r in out.splitlines()[1:])
    assert float(rows["1000.5"]) == pytest.approx(1000.503, abs=0.01)
    assert (tmp_path / "qq_delay_pmf_h2000.csv").exists()


def test_sample_count_accepts_scientific_notation(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "delay-pmf", "--height", "3",
                       "--samples", "2e3", "--seed", "1", "--out", str(tmp_path))
    assert code == 0
    assert json.JSONDecoder().raw_decode(out)[0]["effective_config"]["samples"] == 2000
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--samples", "2.5"])

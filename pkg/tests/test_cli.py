import csv

import pytest

from dca.cli import main


@pytest.fixture
def scenario_dir(tmp_path):
    assert main(["generate", "--out-dir", str(tmp_path / "sc")]) == 0
    return tmp_path / "sc"


def run_args(d, out, *extra):
    return ["run", "--signals", str(d / "signals.csv"), "--antigen", str(d / "antigen.csv"),
            "--mapping", str(d / "mapping.csv"), "--out", str(out), *extra]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_generate_writes_consistent_files(scenario_dir):
    signals = (scenario_dir / "signals.csv").read_text().splitlines()
    assert len(signals) == 1001
    assert {r["antigen_type"] for r in read_rows(scenario_dir / "truth.csv")} == {
        r["antigen_type"] for r in read_rows(scenario_dir / "antigen.csv")}


def test_generate_scan_window_flag(tmp_path):
    assert main(["generate", "--out-dir", str(tmp_path), "--steps", "1000",
                 "--scan-window", "400:600"]) == 0
    for row in read_rows(tmp_path / "signals.csv"):
        t = float(row["time"])
        hot = float(row["pamp1"]) > 1.0 or float(row["pamp2"]) > 1.0
        assert hot == (400 <= t <= 600)


def test_generate_same_seed_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", "--out-dir", str(tmp_path / name), "--seed", "7"]) == 0
    for f in ("signals.csv", "antigen.csv", "truth.csv", "mapping.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_generate_invalid_spec(tmp_path, capsys):
    assert main(["generate", "--out-dir", str(tmp_path), "--steps", "100",
                 "--scan-window", "50:500"]) == 2
    assert "invalid scenario" in capsys.readouterr().err


def test_run_default_scenario(scenario_dir, tmp_path, capsys):
    out = tmp_path / "report.csv"
    assert main(run_args(scenario_dir, out, "--log", str(tmp_path / "log.csv"))) == 0
    rows = read_rows(out)
    truth = {r["antigen_type"]: r["label"] for r in read_rows(scenario_dir / "truth.csv")}
    assert [r["antigen_type"] for r in rows] == sorted(truth)
    assert {r["antigen_type"]: r["label"] for r in rows} == truth
    assert out.read_text().splitlines()[0] == "antigen_type,mature_count,semi_count,total,mcav,label"
    err = capsys.readouterr().err
    assert "# resolved configuration" in err
    assert "threshold_low=" in err and "threshold_low=None" not in err
    assert "unpresented=" in err and "presentations=" in err


def test_deterministic_reports_byte_identical(scenario_dir, tmp_path):
    outs = []
    for i in range(2):
        out, log = tmp_path / f"r{i}.csv", tmp_path / f"l{i}.csv"
        assert main(run_args(scenario_dir, out, "--mode", "deterministic", "--log", str(log))) == 0
        outs.append((out.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]


def test_stochastic_seeded(scenario_dir, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.csv"
        assert main(run_args(scenario_dir, out, "--mode", "stochastic", "--seed", "3")) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_missing_mapping_exit_2_no_report(scenario_dir, tmp_path, capsys):
    (scenario_dir / "mapping.csv").unlink()
    out = tmp_path / "report.csv"
    assert main(run_args(scenario_dir, out)) == 2
    assert not out.exists()
    assert "ingestion failed" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [
    ["--w1", "0"],
    ["--cells", "0"],
    ["--mcav-threshold", "2"],
    ["--mode", "stochastic"],
    ["--threshold-range", "9:1"],
    ["--threshold-dist", "fixed"],
])
def test_config_errors_exit_2(scenario_dir, tmp_path, extra):
    out = tmp_path / "report.csv"
    assert main(run_args(scenario_dir, out, *extra)) == 2
    assert not out.exists()


def test_bad_flag_syntax_exit_2(scenario_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(run_args(scenario_dir, tmp_path / "r.csv", "--threshold-range", "abc"))
    assert exc.value.code == 2


def test_small_population_warns_but_succeeds(scenario_dir, tmp_path, capsys):
    assert main(run_args(scenario_dir, tmp_path / "r.csv", "--cells", "5")) == 0
    assert "minimum" in capsys.readouterr().err


def test_segmented_report(scenario_dir, tmp_path):
    out = tmp_path / "r.csv"
    assert main(run_args(scenario_dir, out, "--segment-size", "500")) == 0
    rows = read_rows(out)
    assert rows[0]["segment"] == "0"
    assert len({r["segment"] for r in rows}) > 1


def test_explicit_threshold_options(scenario_dir, tmp_path):
    for extra in (["--threshold-range", "200:600"],
                  ["--threshold-dist", "gaussian", "--threshold-gaussian", "400:50"],
                  ["--threshold-dist", "fixed", "--threshold-value", "400"]):
        assert main(run_args(scenario_dir, tmp_path / "r.csv", *extra)) == 0


def test_internal_invariant_violation_exit_3(scenario_dir, tmp_path, monkeypatch):
    import dca.cli

    def broken(*a, **k):
        raise AssertionError("antigen accounting broken")

    monkeypatch.setattr(dca.cli, "run", broken)
    assert main(run_args(scenario_dir, tmp_path / "r.csv")) == 3

"""End-to-end command-line pipeline on a small 1D case."""

import numpy as np
import pytest

from rombox.cli import main
from rombox.metrics import read_csv
from rombox.snapshots import load_snapshots

SMALL_CASE = """
[case]
kind = adv1d
n = 64

[time]
dt = 0.01
t_end = 2.0

[splits]
train_end = 1.0
val_end = 2.0

[rom]
method = gpod
rank = 8
replicas = 1
"""

SWEEP_SUBDOMAINS = SMALL_CASE + """
[sweep]
kind = subdomains
subdomains = 3, 4
modes = 2
methods = lpod
"""

SWEEP_MODES = SMALL_CASE.replace("rank = 8", "subdomains = 4\nmodes = 2") + """
[sweep]
kind = modes
modes = 2, 4, 8
methods = lpod, lopod
threshold = 0.05
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Snapshots and a global basis produced by the real commands."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "case.ini"
    config.write_text(SMALL_CASE)
    out = root / "run"
    assert main(["fom", "--config", str(config), "--out", str(out)]) == 0
    assert main(["pod", "--snapshots", str(out / "snapshots.rsnp"),
                 "--method", "gpod", "--rank", "8",
                 "--out", str(out)]) == 0
    return {"root": root, "config": config, "out": out}


def test_fom_outputs(workdir):
    out = workdir["out"]
    snaps = load_snapshots(out / "snapshots.rsnp")
    assert snaps.grid.n == 64
    assert snaps.counts() == {"train": 101, "validation": 100,
                              "extrapolation": 0, "excluded": 0}
    header, rows = read_csv(out / "fom_metrics.csv")
    assert header == ["time", "energy"]
    energies = np.array([float(r["energy"]) for r in rows])
    assert np.max(np.abs(energies - energies[0])) < 1e-5 * energies[0]
    header, rows = read_csv(out / "summary.csv")
    assert rows[0]["name"] == "fom" and rows[0]["stable"] == "1"


def test_fom_snapshots_are_deterministic(workdir, tmp_path):
    out2 = tmp_path / "again"
    assert main(["fom", "--config", str(workdir["config"]),
                 "--out", str(out2)]) == 0
    original = (workdir["out"] / "snapshots.rsnp").read_bytes()
    assert (out2 / "snapshots.rsnp").read_bytes() == original
    assert ((out2 / "fom_metrics.csv").read_bytes()
            == (workdir["out"] / "fom_metrics.csv").read_bytes())


def test_pod_outputs(workdir):
    out = workdir["out"]
    assert (out / "basis.rpod").exists()
    header, rows = read_csv(out / "projection_errors.csv")
    assert header == ["split", "time", "projection_error"]
    splits = {r["split"] for r in rows}
    assert splits == {"train", "validation"}
    assert len(rows) == 201


def test_pod_local_needs_subdomains(workdir, tmp_path, capsys):
    rc = main(["pod", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--method", "lpod", "--modes", "2", "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
    rc = main(["pod", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--method", "lpod", "--subdomains", "4", "--modes", "2",
               "--out", str(tmp_path)])
    assert rc == 0


def test_rom_runs_against_snapshots(workdir, tmp_path):
    out = tmp_path / "rom"
    rc = main(["rom", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--basis", str(workdir["out"] / "basis.rpod"),
               "--config", str(workdir["config"]), "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "metrics.csv")
    assert header[:4] == ["time", "solution_error", "rom_error",
                          "projection_error"]
    assert "stable" in header
    assert len(rows) == 201
    _, summary = read_csv(out / "summary.csv")
    assert summary[0]["name"] == "gpod"
    assert summary[0]["rank"] == "8"
    assert float(summary[0]["solution_error"]) < 0.5


def test_rom_without_config_derives_the_case(workdir, tmp_path, capsys):
    out = tmp_path / "derived"
    rc = main(["rom", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--basis", str(workdir["out"] / "basis.rpod"),
               "--dt", "0.01", "--out", str(out)])
    assert rc == 0
    assert "gpod" in capsys.readouterr().out


def test_rom_coarse_factor(workdir, tmp_path):
    out = tmp_path / "coarse"
    rc = main(["rom", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--coarse-factor", "2", "--config", str(workdir["config"]),
               "--out", str(out)])
    assert rc == 0
    _, summary = read_csv(out / "summary.csv")
    assert summary[0]["name"] == "coarse_fom"
    assert summary[0]["dof"] == "32"
    assert float(summary[0]["solution_error"]) > 0.0


def test_rom_requires_a_model_choice(workdir, tmp_path, capsys):
    rc = main(["rom", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_sweep_captures_per_row_failures(workdir, tmp_path, capsys):
    config = tmp_path / "sweep.ini"
    config.write_text(SWEEP_SUBDOMAINS)
    out = tmp_path / "out"
    rc = main(["sweep", "--config", str(config),
               "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--out", str(out)])
    assert rc == 0
    assert "(1 failed)" in capsys.readouterr().out
    header, rows = read_csv(out / "sweep.csv")
    assert header[0] == "method" and header[-2] == "status"
    by_counts = {r["subdomains"]: r for r in rows}
    assert by_counts["3"]["status"] == "error"  # 3 does not divide 64
    assert "divide" in by_counts["3"]["detail"] or by_counts["3"]["detail"]
    assert by_counts["4"]["status"] == "ok"
    assert float(by_counts["4"]["validation_error"]) > 0.0


def test_sweep_modes_reports_threshold_choice(workdir, tmp_path, capsys):
    config = tmp_path / "sweep.ini"
    config.write_text(SWEEP_MODES)
    out = tmp_path / "out"
    rc = main(["sweep", "--config", str(config),
               "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--out", str(out)])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "lpod: smallest q with validation error < 0.05" in captured
    assert "lopod: smallest q with validation error < 0.05" in captured
    _, rows = read_csv(out / "sweep.csv")
    assert len(rows) == 6  # two methods x three mode counts


def _write_summary(path, rows):
    header = ("name,dof,rank,dt,integrator,seconds,replicas,stable,"
              "solution_error,gradient_error")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(header + "\n" + "\n".join(rows) + "\n")


def test_report_flags_missing_runs(tmp_path, capsys):
    _write_summary(tmp_path / "fom" / "summary.csv",
                   ["fom,4096,,0.01,rk4,10.0,5,1,,"])
    rc = main(["report", "--dir", str(tmp_path)])
    captured = capsys.readouterr()
    assert rc == 1
    assert "missing runs" in captured.err
    assert "lopod" in captured.err


def test_report_checks_tolerances_and_timing(tmp_path, capsys):
    _write_summary(tmp_path / "all" / "summary.csv", [
        "gpod,31,31,0.2,rk4,0.1,5,1,0.26,",
        "lpod,1280,1280,0.1,rk4,0.5,5,1,0.035,0.21",
        "lopod,960,960,0.025,crank_nicolson,2.0,5,1,0.036,0.16",
        "coarse_fom,16384,,0.05,rk4,4.0,5,1,0.22,0.8",
        "fom,65536,,0.025,rk4,30.0,5,1,0.0,0.0",
    ])
    rc = main(["report", "--dir", str(tmp_path)])
    captured = capsys.readouterr().out
    assert rc == 0
    assert (tmp_path / "table1.csv").exists()
    assert "PASS timing ordering" in captured
    assert "PASS gradient error lopod < lpod" in captured
    assert "FAIL" not in captured
    header, rows = read_csv(tmp_path / "table1.csv")
    assert [r["method"] for r in rows] == ["fom", "gpod", "lpod", "lopod",
                                           "coarse_fom"]


def test_report_applies_tolerance_overrides(tmp_path, capsys):
    _write_summary(tmp_path / "all" / "summary.csv", [
        "gpod,31,31,0.2,rk4,0.1,5,1,0.26,",
        "lpod,1280,1280,0.1,rk4,0.5,5,1,0.035,0.21",
        "lopod,960,960,0.025,crank_nicolson,2.0,5,1,0.036,0.16",
        "coarse_fom,16384,,0.05,rk4,4.0,5,1,0.22,0.8",
        "fom,65536,,0.025,rk4,30.0,5,1,0.0,0.0",
    ])
    tol = tmp_path / "tol.csv"
    tol.write_text("metric,method,target,rel_tol\n"
                   "solution_error,gpod,1.0,0.05\n")
    rc = main(["report", "--dir", str(tmp_path), "--tolerances", str(tol)])
    captured = capsys.readouterr().out
    assert rc == 1
    assert "FAIL gpod solution_error" in captured


def test_bad_config_exits_with_diagnostic(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text(SMALL_CASE.replace("n = 64", "n = 64\nflavor = etc"))
    rc = main(["fom", "--config", str(config), "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "flavor" in err


def test_missing_output_directory_is_reported(workdir, capsys):
    rc = main(["pod", "--snapshots", str(workdir["out"] / "snapshots.rsnp"),
               "--method", "gpod", "--rank", "4"])
    assert rc == 2
    assert "output directory" in capsys.readouterr().err

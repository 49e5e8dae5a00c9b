import csv
import json
import subprocess
import sys

import pytest

from iqmimo.cli import CSV_COLUMNS, preset, run


def test_presets():
    assert preset("fig1").rho_ul_db == 15.0
    assert preset("fig1").sweep_values[-1] == 160
    assert preset("fig2").contamination is False
    assert preset("fig2").modes == ("bs_only", "ut_only", "both")
    assert preset("fig3").theta_deg == 2.0 and preset("fig3").sweep_var == "eps"
    assert preset("fig4").eps == 0.02 and preset("fig4").sweep_var == "theta"
    with pytest.raises(ValueError):
        preset("fig9")


ARGS = ["--n-list", "8,12", "--trials", "3", "--seed", "5", "--receivers", "iqu_mmse,mmse_no_iqi"]


def read(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_csv_output(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(ARGS + ["--out", str(out)]) == 0
    rows = read(out)
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 5
    assert [r[3] for r in rows[1:]] == ["8", "8", "12", "12"]
    assert all(r[13] == "5" for r in rows[1:])
    man = json.loads(out.with_suffix(".manifest.json").read_text())
    assert man["seed"] == 5 and man["config"]["trials"] == 3
    assert "wrote" in capsys.readouterr().out


def test_repeat_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(ARGS + ["--out", str(a)]) == 0
    assert run(ARGS + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_manifest_reruns(tmp_path):
    a = tmp_path / "a.csv"
    assert run(ARGS + ["--out", str(a)]) == 0
    b = tmp_path / "b.csv"
    assert run(["--config", str(a.with_suffix(".manifest.json")), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def exit_code(argv):
    # argparse signals usage errors with SystemExit(2)
    try:
        return run(argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize("argv", [["--preset", "fig9"], [], ["--n-list", "8", "--trials", "0"],
                                  ["--n-list", "8,x"], ["--n-list", "8", "--receivers", "zf"]])
def test_usage_errors_exit_2_without_files(tmp_path, argv):
    out = tmp_path / "r.csv"
    assert exit_code(argv + ["--out", str(out)]) == 2
    assert not out.exists()


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"antennas": 4}))
    assert run(["--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "iqmimo", "--preset", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "invalid choice" in proc.stderr

import subprocess
import sys

import pytest

from pfcbdf.cli import SIM_DEFAULTS, _merge, build_parser, main
from pfcbdf.harness.config import ConfigError
from pfcbdf.harness.io import read_csv


def test_kernels(capsys):
    assert main(["kernels", "--k", "3", "--doc", "3"]) == 0
    out = capsys.readouterr().out
    assert "11/6" in out and "-7/6" in out and "1/3" in out
    assert "42/121" in out and "162/1331" in out
    assert "1.8333333333333333" in out


def test_bad_order_exit_code(capsys):
    assert main(["kernels", "--k", "8"]) == 2
    assert "order" in capsys.readouterr().err


def test_verify_bdf6(capsys):
    assert main(["verify", "bdf6"]) == 0
    assert "indefinite at order 5" in capsys.readouterr().out


def test_verify_failure_exit_code(capsys):
    assert main(["verify", "kernels", "--tol-scale", "0"]) == 1
    assert "FAIL[tolerance]" in capsys.readouterr().out


def test_verify_eigs_csv(tmp_path, capsys):
    assert main(["verify", "eigs", "--m", "40", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "eigs.csv")
    assert header == ["k", "m", "lmin_B", "lmax_BtB", "lmin_T", "lmax_T", "m1", "m2", "m3"]
    assert [r[:2] for r in rows] == [[3, 40], [4, 40], [5, 40]]


def test_converge(tmp_path, capsys):
    rc = main(["converge", "--k", "3", "--N", "10", "20", "--grid", "16", "16", "--out", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "convergence.csv")
    assert header == ["k", "N", "tau", "error", "error_l2", "order"]
    assert len(rows) == 2 and 2.5 < rows[1][5] < 3.5


def test_simulate_with_config_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k = 3\nT = 5\ngrid = 32 32\ndomain = 32 32\nseed = 4\n", encoding="utf-8")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--T", "0.5", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "BDF-3 on 32x32" in text and "T=0.5" in text
    _, rows = read_csv(out / "diagnostics.csv")
    assert len(rows) == 6
    assert sorted(p.name for p in out.iterdir()) == ["diagnostics.csv", "snapshot_t000000.5000.bin"]


def test_merge_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("eps = 0.3\ntau = 0.05\nstrict = yes\n")
    args = build_parser().parse_args(["simulate", "--config", str(cfg), "--tau", "0.2"])
    o = _merge(args, SIM_DEFAULTS)
    assert (o["eps"], o["tau"], o["strict"], o["k"]) == (0.3, 0.2, True, 5)
    cfg.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        _merge(args, SIM_DEFAULTS)
    cfg.write_text("strict = maybe\n")
    with pytest.raises(ConfigError):
        _merge(args, SIM_DEFAULTS)


def test_strict_rejects_large_step(tmp_path, capsys):
    rc = main(["simulate", "--k", "5", "--tau", "1.0", "--T", "5", "--grid", "16", "16",
               "--domain", "32", "32", "--strict"])
    assert rc == 2
    assert "exceeds" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pfcbdf", "kernels", "--k", "4"],
                       capture_output=True, text=True, check=True)
    assert "25/12" in r.stdout

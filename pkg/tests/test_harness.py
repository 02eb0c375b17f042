import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfcbdf.harness.config import ConfigError, load_config, parse_config
from pfcbdf.harness.experiments import (REFERENCE_ERRORS, ManufacturedSolution, NucleationSpec, Patch,
                                        convergence_study, crystal_growth, desk_setup,
                                        format_convergence, initial_field)
from pfcbdf.harness.io import (CSV_COLUMNS, MAGIC, SnapshotFormatError, read_csv, read_snapshot,
                               write_csv, write_snapshot)
from pfcbdf.harness.rng import SplitMix64, rng_uniform
from pfcbdf.harness.verify import Report, eig_csv, eig_table, run_suite, verify_all
from pfcbdf.kernels import doc_kernels
from pfcbdf.solver import SolverConfig
from pfcbdf.spectral import Grid2D

# rng

def test_splitmix_reference_outputs():
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(4)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]


def test_uniform_mapping_is_exact():
    from fractions import Fraction
    r = SplitMix64(0)
    outs = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    for z in outs:
        u = Fraction((z >> 11) * 2 + 1, 2**54)
        assert Fraction(rng_uniform(r)) == 2 * u - 1


@settings(max_examples=50)
@given(seed=st.integers(0, 2**64 - 1))
def test_uniform_open_interval(seed):
    r = SplitMix64(seed)
    for _ in range(20):
        u = r.uniform()
        assert -1 < u < 1


def test_extremes_stay_open():
    class Fixed(SplitMix64):
        def __init__(self, v):
            self.v = v

        def next_u64(self):
            return self.v

    assert -1 < Fixed(0).uniform() < 1
    assert -1 < Fixed(2**64 - 1).uniform() < 1
    assert 0 < Fixed(0).unit() and Fixed(2**64 - 1).unit() < 1


def test_uniform_mean():
    x = SplitMix64(12345).uniform_array(1_000_000)
    assert abs(x.mean()) < 0.01


def test_streams_reproducible():
    assert np.array_equal(SplitMix64(7).uniform_array(50), SplitMix64(7).uniform_array(50))
    assert not np.array_equal(SplitMix64(7).uniform_array(50), SplitMix64(8).uniform_array(50))


# io

def test_snapshot_round_trip(tmp_path):
    f = np.random.default_rng(0).standard_normal((6, 4))
    p = write_snapshot(tmp_path / "s.bin", f, 1.5, 8.0, 4.0)
    g, t, lx, ly = read_snapshot(p)
    assert np.array_equal(f, g) and (t, lx, ly) == (1.5, 8.0, 4.0)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC and len(raw) == 4 + 8 + 24 + 8 * 24
    # row-major: the first value after the header is f[0, 0], the second f[0, 1]
    assert np.frombuffer(raw[36:52], "<f8").tolist() == [f[0, 0], f[0, 1]]


def test_snapshot_corruption(tmp_path):
    p = write_snapshot(tmp_path / "s.bin", np.zeros((4, 4)), 0.0, 1.0, 1.0)
    raw = p.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"PFC2" + raw[4:])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(tmp_path / "short.bin")
    (tmp_path / "tiny.bin").write_bytes(raw[:10])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(tmp_path / "tiny.bin")
    with pytest.raises(OSError, match="missing.bin"):
        read_snapshot(tmp_path / "missing.bin")


def test_csv(tmp_path):
    rows = [(0, 0.0, 1.0 / 3.0, float("nan"), 2.0, -0.5, 0), (1, 0.1, 0.3, 0.2, 2.0, -0.4, 5)]
    p = write_csv(tmp_path / "d.csv", rows)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert all(len(line.split(",")) == 7 for line in lines)
    assert lines[1].split(",")[2] == "0.33333333333333331"
    header, body = read_csv(p)
    assert header == list(CSV_COLUMNS)
    assert body[1][2] == 0.3 and math.isnan(body[0][3])
    with pytest.raises(ValueError):
        write_csv(tmp_path / "e.csv", [(1, 2, 3)])
    with pytest.raises(OSError, match="nodir"):
        write_csv(tmp_path / "nodir" / "x.csv", rows)


# config

def test_parse_config():
    cfg = parse_config("# run\nk = 4\n tau=0.05  # step\n\nfull-scale = true\n")
    assert cfg == {"k": "4", "tau": "0.05", "full_scale": "true"}
    with pytest.raises(ConfigError, match="<string>:1"):
        parse_config("k 4")
    with pytest.raises(ConfigError):
        parse_config("= 4")


def test_load_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("eps = 0.3\n", encoding="utf-8")
    assert load_config(p) == {"eps": "0.3"}
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.cfg")


# experiments

def test_reference_errors():
    assert REFERENCE_ERRORS[3][20] == 2.42e-5
    assert REFERENCE_ERRORS[4][160] == 2.05e-10
    assert REFERENCE_ERRORS[5][40] == 1.80e-9


def test_manufactured_forcing_is_consistent():
    g = Grid2D(16, 16, 8.0, 8.0)
    ex = ManufacturedSolution(g)
    t, h = 0.4, 1e-5
    dphi = (ex(t + h) - ex(t - h)) / (2 * h)
    phi = ex(t)
    mu = g.one_plus_lap_sq(phi) + phi**3 - ex.epsilon * phi
    assert np.max(np.abs(dphi - g.laplacian(mu) - ex.forcing(t))) < 1e-8


def test_small_convergence_study():
    rows = convergence_study([3], [10, 20], grid_shape=(16, 16))
    assert [r.N for r in rows] == [10, 20]
    assert math.isnan(rows[0].order) and 2.5 < rows[1].order < 3.5
    assert rows[0].error == pytest.approx(rows[0].error_l2 / 0.5)   # h = 8/16
    assert "Order" in format_convergence(rows)


def test_initial_field_patches():
    g = Grid2D(32, 32, 32.0, 32.0)
    spec = NucleationSpec(mean_density=0.1, patches=(Patch(8.0, 8.0, 2.0, 0.5), Patch(20, 24, 4, 0.0)), seed=3)
    f = initial_field(g, spec)
    changed = np.argwhere(f != 0.1)
    # closed square: x, y in {7, 8, 9}
    assert sorted(map(tuple, changed)) == [(i, j) for i in (7, 8, 9) for j in (7, 8, 9)]
    r = SplitMix64(3)
    expect = [0.1 + 0.5 * r.uniform() for _ in range(9)]
    assert [f[i, j] for i in (7, 8, 9) for j in (7, 8, 9)] == expect
    assert np.all(np.abs(f - 0.1) < 0.5)


def test_initial_field_rejects_bad_patches():
    g = Grid2D(16, 16, 16.0, 16.0)
    with pytest.raises(ValueError):
        initial_field(g, NucleationSpec(patches=(Patch(1.0, 8.0, 4.0, 0.2),)))
    with pytest.raises(ValueError):
        initial_field(g, NucleationSpec(patches=(Patch(8.0, 8.0, 4.0, -0.2),)))


def test_zero_amplitude_stays_constant(tmp_path):
    g = Grid2D(32, 32, 32.0, 32.0)
    spec = NucleationSpec(patches=(Patch(16.0, 16.0, 6.0, 0.0),))
    res = crystal_growth(spec, SolverConfig(k=3, epsilon=0.25, tau=0.1), grid=g, T=1.0,
                         snapshot_times=(1.0,), out_dir=tmp_path)
    assert np.max(np.abs(res.trajectory.final - 0.285)) < 1e-14
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["diagnostics.csv", "snapshot_t000001.0000.bin"]


def test_desk_setup():
    grid, spec, cfg, T = desk_setup(k=4, seed=9)
    assert grid.shape == (128, 128) and grid.lx == 128.0 and T == 100.0
    assert [(p.x, p.y, p.side) for p in spec.patches] == [(32, 98, 10), (64, 32, 10), (98, 98, 10)]
    assert (cfg.k, cfg.epsilon, cfg.tau, spec.seed) == (4, 0.25, 0.1, 9)
    grid, spec, _, T = desk_setup(full_scale=True)
    assert grid.shape == (256, 256) and T == 1000.0
    assert [(p.x, p.y, p.amplitude) for p in spec.patches] == [(64, 196, 0.25), (128, 64, 0.3), (196, 196, 0.35)]


# verify

def test_verify_fresh_build_passes():
    opts = {"gradient": {"trials": 50}, "spectral": {"n_fields": 20, "field_trials": 5}}
    report = verify_all(options=opts)
    assert report.passed, report.text()


def test_verify_detects_corrupt_theta():
    th = doc_kernels(5, 400).theta.copy()
    th[7] *= 1 + 1e-4
    report = verify_all(suites=("kernels",), theta_overrides={5: th})
    bad = report.failures()
    assert [c.name for c in bad] == ["orthogonality k=5 n=200"]
    assert bad[0].category == "violation"


def test_verify_zero_tolerance_reports_rounding():
    report = verify_all(tol_scale=0.0, suites=("kernels", "gradient"), options={"gradient": {"trials": 5}})
    bad = report.failures()
    assert bad and all(c.category == "tolerance" for c in bad)
    # exact checks still pass at zero tolerance
    assert all(c.passed for c in report.checks if c.name.startswith("identity exact"))


def test_run_suite_unknown():
    with pytest.raises(KeyError):
        run_suite("nope")
    assert isinstance(run_suite("bdf6"), Report)


def test_eig_csv():
    text = eig_csv(eig_table(sizes=(20,)))
    lines = text.splitlines()
    assert lines[0] == "k,m,lmin_B,lmax_BtB,lmin_T,lmax_T,m1,m2,m3"
    assert [line.split(",")[:2] for line in lines[1:]] == [["3", "20"], ["4", "20"], ["5", "20"]]

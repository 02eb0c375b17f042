"""Property suites over kernels, gradient structures, matrices and spectral operators.

Each check reports a nonnegative *defect* (residual, or amount by which an
inequality is violated) against a tolerance.  A failed check is classed as
``"tolerance"`` when the defect is within the nominal tolerance and only a
tightened tolerance made it fail, and ``"violation"`` otherwise.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from ..gradient_structure import (SIGMA_L, bdf6_counterexample, verify_identity,
                                  verify_identity_exact)
from ..kernels import doc_decay_bound, doc_kernels, verify_orthogonality
from ..matrix_analysis import (M1, build_B_lower, build_Theta_lower, eig_report,
                               check_young_inequalities, m2_constant, m3_constant,
                               symmetric_eigs)
from ..spectral import Grid2D, convolution_h2_slacks

__all__ = ["Check", "Report", "SUITES", "EIG_COLUMNS", "verify_all", "run_suite",
           "random_mean_zero_field", "eig_table", "eig_csv"]

EIG_COLUMNS = ("k", "m", "lmin_B", "lmax_BtB", "lmin_T", "lmax_T", "m1", "m2", "m3")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    defect: float
    tol: float
    nominal_tol: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.tol

    @property
    def category(self) -> str:
        if self.passed:
            return "ok"
        return "tolerance" if self.defect <= self.nominal_tol else "violation"

    def line(self) -> str:
        status = "PASS" if self.passed else f"FAIL[{self.category}]"
        return (f"{status:<18} {self.suite}/{self.name}: value={self.value:.6g} "
                f"defect={self.defect:.3g} tol={self.tol:.3g}")


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def text(self) -> str:
        lines = [c.line() for c in self.checks]
        n_fail = len(self.failures())
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines)


class _Ctx:
    def __init__(self, suite: str, report: Report, tol_scale: float):
        self.suite, self.report, self.tol_scale = suite, report, tol_scale

    def add(self, name: str, value: float, defect: float, tol: float) -> Check:
        c = Check(self.suite, name, float(value), float(max(defect, 0.0)), tol * self.tol_scale, tol)
        self.report.checks.append(c)
        return c


def random_mean_zero_field(grid: Grid2D, rng: np.random.Generator, band: float | None = None) -> np.ndarray:
    """Random mean-zero field; with ``band`` the spectrum is concentrated near |kappa|^2 = band."""
    f = rng.standard_normal(grid.shape)
    if band is not None:
        fh = np.fft.rfft2(f) * np.exp(-((grid.ksq - band) ** 2))
        f = np.fft.irfft2(fh, s=grid.shape)
    return f - f.mean()


# suites

def _kernels(ctx: _Ctx, rng, theta_overrides: Mapping[int, np.ndarray] | None = None, n: int = 200):
    overrides = theta_overrides or {}
    for k in range(3, 7):
        r = verify_orthogonality(k, n, overrides.get(k))
        ctx.add(f"orthogonality k={k} n={n}", r, r, 1e-11)
    j = np.arange(400)
    for k in (3, 4, 5):
        theta = np.abs(overrides.get(k, doc_kernels(k, 400).theta)[:400])
        bound = doc_decay_bound(k, j)
        excess = float(np.max((theta - bound) / bound))
        ctx.add(f"decay bound k={k} j<400", excess, excess, 1e-12)


def _gradient(ctx: _Ctx, rng, trials: int = 1000, length: int = 120, size: int = 500):
    for k in (3, 4, 5):
        worst = 0.0
        for _ in range(trials):
            worst = max(worst, verify_identity(k, rng.standard_normal(length)))
        ctx.add(f"identity k={k} ({trials} x len {length})", worst, worst, 1e-10)
        ints = [Fraction(int(x)) for x in rng.integers(-9, 10, size=12)]
        exact = float(verify_identity_exact(k, ints))
        ctx.add(f"identity exact k={k}", exact, exact, 0.0)
        lam, _ = symmetric_eigs(build_B_lower(k, size).symmetric())
        sig = float(SIGMA_L[k])
        ctx.add(f"lambda_min(B_{k}) >= sigma_L size={size}", lam, sig - lam, 1e-8)
        ctx.add(f"lambda_min(B_{k}) >= m1 size={size}", lam, M1[k] - lam, 1e-6)


def _bdf6(ctx: _Ctx, rng, max_n: int = 200):
    m, lam = bdf6_counterexample(max_n)
    ctx.add(f"B_6 indefinite at order {m} (<= {max_n})", lam, lam, 0.0)


def eig_table(sizes=(300,), ks=(3, 4, 5)) -> list[dict]:
    return [eig_report(k, m).as_dict() for k in ks for m in sizes]


def eig_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EIG_COLUMNS)
    keys = ("k", "m", "lambda_min_Bk", "lambda_max_BlTBl", "lambda_min_Theta", "lambda_max_Theta", "m1", "m2", "m3")
    for r in rows:
        w.writerow([r[c] if c in ("k", "m") else format(r[c], ".17g") for c in keys])
    return buf.getvalue()


def _eigs(ctx: _Ctx, rng, size: int = 300):
    for k in (3, 4, 5):
        T = build_Theta_lower(k, size)
        lmin_t, lmax_t = symmetric_eigs(T + T.T)
        m2 = m2_constant(k, size)
        m3 = m3_constant(k)
        ctx.add(f"lambda_max(Theta_{k}) <= m3 size={size}", lmax_t, lmax_t - m3, 0.0)
        ctx.add(f"lambda_min(Theta_{k}) >= m1/m2 size={size}", lmin_t, M1[k] / m2 - lmin_t, 1e-8)


def _young(ctx: _Ctx, rng, trials: int = 500, length: int = 40):
    for k in (3, 4, 5):
        worst = check_young_inequalities(k, trials=trials, length=length, rng=rng)
        ctx.add(f"young chains k={k} ({trials} trials)", worst, -worst, 1e-9)


def _spectral(ctx: _Ctx, rng, n_fields: int = 200, n: int = 64, field_trials: int = 50):
    g = Grid2D(n, n, 32.0, 32.0)
    green1 = green2 = rt = 0.0
    emb = hold = -np.inf
    for i in range(n_fields):
        band = None if i % 2 else float(rng.uniform(0.5, 3.0))
        v = random_mean_zero_field(g, rng, band)
        w = random_mean_zero_field(g, rng, band)
        a, b = g.inner(-g.laplacian(v), w), g.grad_inner(v, w)
        green1 = max(green1, abs(a - b) / max(abs(a) + abs(b), 1e-300))
        lv = g.laplacian(v)
        a, b = g.inner(g.laplacian(lv), w), g.inner(lv, g.laplacian(w))
        green2 = max(green2, abs(a - b) / max(abs(a) + abs(b), 1e-300))
        vv = g.inner(v, v)
        rhs = g.inner(g.one_plus_lap(v), g.one_plus_lap(v)) / 3 + 1.5 * g.norm_hm1(v) ** 2
        emb = max(emb, (vv - rhs) / vv)
        hold = max(hold, (vv - np.sqrt(g.gradient_norm_sq(v)) * g.norm_hm1(v)) / vv)
        rt = max(rt, float(np.max(np.abs(g.ifft(g.fft(v)) - v)) / np.max(np.abs(v))))
    ctx.add("green: <-Lap v, w> = <grad v, grad w>", green1, green1, 1e-10)
    ctx.add("green: <Lap^2 v, w> = <Lap v, Lap w>", green2, green2, 1e-10)
    ctx.add("embedding ||v||^2 <= ||(1+Lap)v||^2/3 + 1.5||v||_-1^2", emb, emb, 1e-10)
    ctx.add("hoelder ||v||^2 <= ||grad v|| ||v||_-1", hold, hold, 1e-10)
    ctx.add("fft round trip", rt, rt, 1e-12)

    g32 = Grid2D(32, 32, 16.0, 16.0)
    cache = {}
    worst = np.inf
    for _ in range(field_trials):
        k = int(rng.integers(3, 6))
        m = int(rng.integers(1, 41))
        if (k, m) not in cache:
            cache[k, m] = (build_Theta_lower(k, m), m2_constant(k, m))
        T, m2 = cache[k, m]
        band = float(rng.uniform(0.0, 4.0))
        seq = np.stack([random_mean_zero_field(g32, rng, band) for _ in range(m)])
        seq /= np.sqrt(g32.cell * np.sum(seq**2))  # unit total L2 mass
        for eps in (0.4, 1.0):
            worst = min(worst, convolution_h2_slacks(g32, seq, eps, T, M1[k], m2))
    ctx.add(f"DOC-weighted H2 inequality ({field_trials} trials, 32x32)", worst, -worst, 1e-9)


SUITES: dict[str, Callable] = {
    "kernels": _kernels,
    "gradient": _gradient,
    "bdf6": _bdf6,
    "eigs": _eigs,
    "young": _young,
    "spectral": _spectral,
}


def run_suite(name: str, report: Report | None = None, tol_scale: float = 1.0,
              seed: int = 0, **options) -> Report:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    report = Report() if report is None else report
    SUITES[name](_Ctx(name, report, tol_scale), np.random.default_rng(seed), **options)
    return report


def verify_all(tol_scale: float = 1.0, seed: int = 0,
               theta_overrides: Mapping[int, np.ndarray] | None = None,
               suites=tuple(SUITES), options: Mapping[str, dict] | None = None) -> Report:
    """Run the requested suites and aggregate their checks.

    ``theta_overrides`` maps k to a replacement DOC sequence for the kernel
    suite (fault injection).  ``tol_scale`` multiplies every tolerance.
    """
    options = dict(options or {})
    report = Report()
    for name in suites:
        opts = dict(options.get(name, {}))
        if name == "kernels" and theta_overrides is not None:
            opts["theta_overrides"] = theta_overrides
        run_suite(name, report, tol_scale, seed, **opts)
    return report

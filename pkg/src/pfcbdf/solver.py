"""BDF-k time stepping for the phase field crystal equation

    d/dt phi = Lap mu + g,    mu = (1 + Lap)^2 phi + phi^3 - eps phi

on a periodic grid.  Each step solves the implicit BDF-k equation by a
fixed-point iteration in which every linear term is treated implicitly
(diagonal in Fourier space) and only the cubic term is lagged.
"""
from __future__ import annotations

import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .gradient_structure import SIGMA_L, structure
from .kernels import bdf_kernels
from .spectral import Grid2D

log = logging.getLogger(__name__)

__all__ = [
    "SolverError",
    "SymbolError",
    "FixedPointDivergence",
    "StartupError",
    "TimeStepWarning",
    "GrowthWarning",
    "SolverConfig",
    "SolverState",
    "Trajectory",
    "PFCSolver",
    "time_step_bound",
    "energy",
    "chemical_potential",
    "volume",
    "dissipation_rate",
    "run",
]

Forcing = Callable[[float], np.ndarray]


class SolverError(RuntimeError):
    pass


class SymbolError(SolverError):
    """The implicit Fourier symbol is not positive on every mode (time step too large)."""


class FixedPointDivergence(SolverError):
    pass


class StartupError(SolverError):
    pass


class TimeStepWarning(UserWarning):
    pass


class GrowthWarning(UserWarning):
    """max|phi| grew past the monitored multiple of its initial value."""


LINF_GROWTH = 10.0


def time_step_bound(k: int, epsilon: float) -> float:
    """Largest step allowed by the solvability / energy-stability restriction.

    For k = 3, 4, 5 this is 2/(3 eps) * min(b_0, sigma_L); other orders have
    no gradient structure and only the solvability bound 2 b_0/(3 eps) applies.
    """
    b0 = float(bdf_kernels(k).b[0])
    lim = b0 if k not in SIGMA_L else min(b0, float(SIGMA_L[k]))
    return 2.0 * lim / (3.0 * epsilon)


@dataclass(frozen=True)
class SolverConfig:
    k: int = 3
    epsilon: float = 0.25
    tau: float = 0.1
    fp_tol: float = 1e-12
    fp_max_iters: int = 200
    startup: str = "bootstrap"
    dealias: bool = False
    forcing: Forcing | None = None
    strict: bool = False
    bootstrap_max_substeps: int = 10_000

    def __post_init__(self):
        if not 1 <= self.k <= 6:
            raise ValueError(f"k must be in 1..6, got {self.k}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.startup not in ("exact", "bootstrap"):
            raise ValueError(f"unknown startup strategy {self.startup!r}")

    def check_step_constraint(self) -> bool:
        """True if tau satisfies the energy-stability restriction; warns or raises otherwise."""
        bound = time_step_bound(self.k, self.epsilon)
        if self.tau <= bound:
            return True
        msg = f"tau = {self.tau} exceeds the energy-stability bound {bound:.6g} for BDF-{self.k}"
        if self.strict:
            raise SolverError(msg)
        warnings.warn(msg, TimeStepWarning, stacklevel=2)
        return False


def chemical_potential(grid: Grid2D, phi: np.ndarray, epsilon: float) -> np.ndarray:
    return grid.one_plus_lap_sq(phi) + phi**3 - epsilon * phi


def energy(grid: Grid2D, phi: np.ndarray, epsilon: float) -> float:
    """Discrete free energy 1/2 ||(1+Lap) phi||^2 + 1/4 ||phi^2 - eps||^2 - eps^2 |Omega| / 4."""
    lin = grid.one_plus_lap(phi)
    q = phi**2 - epsilon
    return 0.5 * grid.inner(lin, lin) + 0.25 * grid.inner(q, q) - 0.25 * epsilon**2 * grid.area


def volume(grid: Grid2D, phi: np.ndarray) -> float:
    return grid.volume(phi)


def dissipation_rate(grid: Grid2D, mu: np.ndarray) -> float:
    """-||grad mu||^2, the continuous energy decay rate."""
    return -grid.gradient_norm_sq(mu)


@dataclass
class SolverState:
    """Ring buffer of the most recent k levels (oldest first) and the index of the newest."""

    history: deque
    n: int
    tau: float

    @classmethod
    def from_levels(cls, levels: Sequence[np.ndarray], k: int, tau: float) -> "SolverState":
        hist: deque = deque(maxlen=k)
        hist.extend(levels)
        return cls(history=hist, n=len(levels) - 1, tau=tau)

    @property
    def t(self) -> float:
        return self.n * self.tau

    @property
    def current(self) -> np.ndarray:
        return self.history[-1]


class PFCSolver:
    def __init__(self, grid: Grid2D, config: SolverConfig):
        self.grid = grid
        self.config = config
        kern = bdf_kernels(config.k)
        self.b = kern.as_array()
        self.b0 = self.b[0]
        ksq = grid.ksq
        self._ksq = ksq
        self._lin = ksq * ((1.0 - ksq) ** 2 - config.epsilon)
        self._symbol = self.b0 / config.tau + self._lin
        smin = float(self._symbol.min())
        if not smin > 0:
            raise SymbolError(
                f"implicit symbol has minimum {smin:.3e} <= 0; reduce tau below the BDF-{config.k} limit")
        self._mask = grid.dealias_mask if config.dealias else None

    def _cubic_hat(self, phi: np.ndarray) -> np.ndarray:
        ch = np.fft.rfft2(phi**3)
        if self._mask is not None:
            ch = ch * self._mask
        return ch

    def history_sum(self, history: Sequence[np.ndarray]) -> np.ndarray:
        """sum_{j=1}^{k-1} b_j (phi^{n-j} - phi^{n-j-1}) from levels phi^{n-k} .. phi^{n-1}."""
        k = self.config.k
        acc = np.zeros(self.grid.shape)
        for j in range(1, k):
            acc += self.b[j] * (history[-j] - history[-j - 1])
        return acc

    def step(self, history: Sequence[np.ndarray], t_new: float) -> tuple[np.ndarray, int]:
        """Solve for phi^n given the k previous levels (oldest first)."""
        cfg = self.config
        if len(history) < cfg.k:
            raise SolverError(f"BDF-{cfg.k} needs {cfg.k} previous levels, got {len(history)}")
        prev = history[-1]
        # Iterate on the increment d = phi^n - phi^{n-1}; the mean of d is then
        # formed from near-zero quantities and the volume does not drift.
        prev_hat = np.fft.rfft2(prev)
        rhs = -np.fft.rfft2(self.history_sum(history)) / cfg.tau - self._lin * prev_hat
        if cfg.forcing is not None:
            rhs = rhs + np.fft.rfft2(cfg.forcing(t_new))
        phi = prev
        for it in range(1, cfg.fp_max_iters + 1):
            inc_hat = (rhs - self._ksq * self._cubic_hat(phi)) / self._symbol
            new = prev + np.fft.irfft2(inc_hat, s=self.grid.shape)
            diff = float(np.max(np.abs(new - phi)))
            if not np.isfinite(diff):
                raise SolverError(f"non-finite values in fixed-point iterate at t = {t_new}")
            phi = new
            if diff <= cfg.fp_tol:
                return phi, it
        raise FixedPointDivergence(
            f"fixed-point iteration did not reach {cfg.fp_tol:g} within {cfg.fp_max_iters} iterations "
            f"(last update {diff:.3e}) at t = {t_new}")

    def residual(self, history: Sequence[np.ndarray], phi: np.ndarray, t_new: float) -> float:
        """Relative residual of the BDF-k equation for a candidate phi^n."""
        cfg = self.config
        g = self.grid
        dk = (self.b0 * (phi - history[-1]) + self.history_sum(history)) / cfg.tau
        cubic = g.dealias(phi**3) if self._mask is not None else phi**3
        mu = g.one_plus_lap_sq(phi) + cubic - cfg.epsilon * phi
        rhs = g.laplacian(mu)
        if cfg.forcing is not None:
            rhs = rhs + cfg.forcing(t_new)
        scale = g.norm_l2(dk) + g.norm_l2(rhs)
        r = g.norm_l2(dk - rhs)
        return r / scale if scale > 0 else r

    def advance(self, state: SolverState) -> tuple[np.ndarray, int]:
        """One BDF-k step in place on ``state``; returns the new level and the iteration count."""
        phi, iters = self.step(list(state.history), (state.n + 1) * state.tau)
        state.history.append(phi)
        state.n += 1
        return phi, iters

    def modified_energy(self, levels: Sequence[np.ndarray]) -> float:
        """E[phi^n] + (1/tau) G_k evaluated with squared H^-1 norms of the difference stencils.

        ``levels`` are the most recent levels, oldest first; missing older
        differences count as zero.
        """
        cfg = self.config
        g = self.grid
        phi = levels[-1]
        e = energy(g, phi, cfg.epsilon)
        s = structure(cfg.k)
        depth = s.g_depth
        diffs = []
        for lag in range(depth + 1):
            i = len(levels) - 1 - lag
            diffs.append(levels[i] - levels[i - 1] if i >= 1 else np.zeros(g.shape))
        atol = 1e-11 * (1.0 + float(np.max(np.abs(phi))))
        q = 0.0
        for w, stencil in s.g_terms:
            comb = sum(float(c) * diffs[lag] for lag, c in enumerate(stencil) if c != 0)
            q += float(w) * g.norm_hm1(comb, atol=atol) ** 2
        return e + q / cfg.tau


def startup(grid: Grid2D, config: SolverConfig, phi0: np.ndarray,
            exact: Callable[[float], np.ndarray] | None = None) -> tuple[list[np.ndarray], int]:
    """Starting levels phi^1 .. phi^{k-1} and the number of fixed-point iterations spent.

    ``exact`` samples a closed-form solution (strategy ``exact``); otherwise each
    level is reached by backward Euler with substep tau^(1 + k/2).
    """
    k, tau = config.k, config.tau
    if k == 1:
        return [], 0
    if config.startup == "exact":
        if exact is None:
            raise StartupError("startup strategy 'exact' needs an exact-solution callable")
        levels = [np.asarray(exact(j * tau), dtype=float) for j in range(1, k)]
        iters = 0
    else:
        n_sub = max(1, math.ceil(tau ** (-k / 2) - 1e-9))
        if n_sub > config.bootstrap_max_substeps:
            raise StartupError(
                f"bootstrap needs {n_sub} backward-Euler substeps per level "
                f"(budget {config.bootstrap_max_substeps}); use a larger tau or the exact startup")
        sub = PFCSolver(grid, replace(config, k=1, tau=tau / n_sub, startup="bootstrap"))
        levels, iters = [], 0
        phi = np.asarray(phi0, dtype=float)
        for j in range(1, k):
            for s in range(1, n_sub + 1):
                t = (j - 1) * tau + s * tau / n_sub
                phi, it = sub.step([phi], t)
                iters += it
            levels.append(phi)
    if config.forcing is not None:
        return levels, iters  # a forcing with nonzero mean changes the volume legitimately
    v0 = grid.volume(phi0)
    tol = 1e-12 * max(1.0, abs(v0), grid.area * float(np.max(np.abs(phi0))))
    for j, lev in enumerate(levels, start=1):
        drift = abs(grid.volume(lev) - v0)
        if drift > tol:
            raise StartupError(f"starting level {j} changes the volume by {drift:.3e}")
    return levels, iters


@dataclass
class Trajectory:
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    modified_energy: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    dissipation_rate: list = field(default_factory=list)
    fp_iters: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    final: np.ndarray | None = None
    linf: list = field(default_factory=list)

    def rows(self):
        return zip(self.steps, self.times, self.energy, self.modified_energy,
                   self.volume, self.dissipation_rate, self.fp_iters)


def run(grid: Grid2D, config: SolverConfig, phi0: np.ndarray, T: float,
        exact: Callable[[float], np.ndarray] | None = None,
        snapshot_times: Sequence[float] = (),
        diagnostics: bool = True) -> Trajectory:
    """Start up, then advance with BDF-k to time T, recording diagnostics each step."""
    k, tau = config.k, config.tau
    n_steps = int(round(T / tau))
    if abs(n_steps * tau - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T = {T} is not an integer multiple of tau = {tau}")
    if n_steps < k:
        raise ValueError(f"T must cover at least k = {k} steps")
    config.check_step_constraint()
    solver = PFCSolver(grid, config)
    phi0 = np.asarray(phi0, dtype=float)
    levels, boot_iters = startup(grid, config, phi0, exact)
    traj = Trajectory()
    pending = sorted(snapshot_times)
    has_energy_law = k in SIGMA_L
    linf_limit = LINF_GROWTH * float(np.max(np.abs(phi0))) if np.any(phi0) else math.inf
    warned: list[int] = []

    def record(state: SolverState, iters: int) -> None:
        n, phi = state.n, state.current
        t = n * tau
        traj.steps.append(n)
        traj.times.append(t)
        traj.fp_iters.append(iters)
        traj.volume.append(grid.volume(phi))
        traj.linf.append(float(np.max(np.abs(phi))))
        if traj.linf[-1] > linf_limit and not warned:
            warned.append(n)
            warnings.warn(f"max|phi| = {traj.linf[-1]:.4g} at step {n} exceeds {LINF_GROWTH:g}x "
                          f"its initial value", GrowthWarning, stacklevel=3)
        if diagnostics:
            traj.energy.append(energy(grid, phi, config.epsilon))
            mu = chemical_potential(grid, phi, config.epsilon)
            traj.dissipation_rate.append(dissipation_rate(grid, mu))
            if has_energy_law and n >= k - 1:
                traj.modified_energy.append(solver.modified_energy(list(state.history)))
            else:
                traj.modified_energy.append(math.nan)
        while pending and t >= pending[0] - 0.5 * tau:
            traj.snapshots[pending.pop(0)] = phi.copy()

    start = [phi0] + levels
    for n in range(k):
        record(SolverState.from_levels(start[: n + 1], k, tau), boot_iters if n == k - 1 else 0)
    state = SolverState.from_levels(start, k, tau)
    while state.n < n_steps:
        _, iters = solver.advance(state)
        record(state, iters)
    traj.final = state.current
    return traj

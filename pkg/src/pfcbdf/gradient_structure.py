"""Discrete gradient structures of the BDF-3, BDF-4 and BDF-5 formulas.

For n >= k the BDF-k quadratic quantity splits as

    v_n * sum_j b_{n-j} v_j = G[v_n..] - G[v_{n-1}..] + (sigma/2) v_n**2 + R[v_n..]

with G and R nonnegative.  Both functionals are stored as sums of weighted
squares of linear stencils over a window ``(v_n, v_{n-1}, ...)`` (newest
first), so nonnegativity holds by construction and the rational coefficients
can be expanded exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .kernels import InvalidOrderError, bdf_kernels
from .matrix_analysis import build_B_lower, symmetric_eigs

F = Fraction
Term = tuple[Fraction, tuple[Fraction, ...]]

__all__ = [
    "SIGMA_L",
    "GradientStructure",
    "NoCounterexampleError",
    "structure",
    "coefficient_form",
    "expand",
    "eval_G",
    "eval_R",
    "verify_identity",
    "verify_identity_exact",
    "quadratic_form_lower_bound",
    "first_indefinite_size",
    "bdf6_counterexample",
]

SIGMA_L: dict[int, Fraction] = {3: F(95, 48), 4: F(4919, 3072), 5: F(646631, 1920000)}


class NoCounterexampleError(RuntimeError):
    """No indefinite BDF quadratic form was found within the searched sizes."""


def _delta(m: int, i: int = 0) -> dict[int, Fraction]:
    """Stencil of delta_1^m v_{n-i} as {lag: coefficient}."""
    out = {i: F(1)}
    for _ in range(m):
        nxt: dict[int, Fraction] = {}
        for lag, c in out.items():
            nxt[lag] = nxt.get(lag, F(0)) + c
            nxt[lag + 1] = nxt.get(lag + 1, F(0)) - c
        out = nxt
    return out


def _v(i: int) -> dict[int, Fraction]:
    return {i: F(1)}


def _lin(*parts: tuple[Fraction | int, dict[int, Fraction]]) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for c, vec in parts:
        for lag, a in vec.items():
            out[lag] = out.get(lag, F(0)) + F(c) * a
    return out


def _pack(terms: list[tuple[Fraction, dict[int, Fraction]]]) -> tuple[Term, ...]:
    depth = max(max(vec) for _, vec in terms)
    packed = []
    for w, vec in terms:
        stencil = tuple(vec.get(lag, F(0)) for lag in range(depth + 1))
        packed.append((F(w), stencil))
    return tuple(packed)


def _depth(terms: tuple[Term, ...]) -> int:
    depth = 0
    for _, s in terms:
        nz = [i for i, c in enumerate(s) if c != 0]
        if nz:
            depth = max(depth, nz[-1])
    return depth


@dataclass(frozen=True)
class GradientStructure:
    k: int
    sigma_L: Fraction
    g_terms: tuple[Term, ...]
    r_terms: tuple[Term, ...]

    @property
    def g_depth(self) -> int:
        return _depth(self.g_terms)

    @property
    def r_depth(self) -> int:
        return _depth(self.r_terms)

    @property
    def window_depth(self) -> int:
        return max(self.g_depth, self.r_depth)


def _g_sos(k: int):
    if k == 3:
        return [(F(1, 6), _v(0)), (F(1, 6), _lin((F(7, 4), _v(0)), (-1, _v(1))))]
    if k == 4:
        return [
            (F(13627, 43008), _v(0)),
            (F(7, 24), _lin((F(65, 56), _v(0)), (-1, _v(1)))),
            (F(1, 8), _lin((F(3, 2), _delta(1)), (1, _v(2)))),
        ]
    return [
        (F(1198850903, 1678080000), _v(0)),
        (F(437, 900), _lin((F(4931, 6992), _v(0)), (-1, _v(1)))),
        (F(9, 40), _lin((F(23, 18), _delta(1)), (1, _v(2)))),
        (F(1, 10), _lin((2, _delta(1)), (2, _v(2)), (-1, _v(3)))),
    ]


def _r_sos(k: int):
    if k == 3:
        return [(F(1, 6), _lin((1, _delta(2)), (F(1, 4), _v(1))))]
    if k == 4:
        return [
            (F(1, 8), _lin((1, _delta(3)), (F(3, 2), _delta(1, 1)))),
            (F(1, 6), _lin((1, _delta(2)), (F(35, 32), _v(1)))),
        ]
    return [
        (F(1, 10), _lin((1, _delta(4)), (2, _delta(2, 1)))),
        (F(1, 8), _lin((1, _delta(3)), (F(23, 10), _delta(1, 1)))),
        (F(1, 6), _lin((1, _delta(2)), (F(1787, 800), _v(1)))),
    ]


def _g_coeff(k: int):
    # Coefficient form of G_k: signed weights on squares of v and its differences.
    if k == 3:
        return [(F(37, 96), _v(0)), (F(-1, 8), _v(1)), (F(7, 24), _delta(1))]
    if k == 4:
        return [
            (F(3433, 6144), _v(0)), (F(-15, 64), _v(1)), (F(1, 8), _v(2)),
            (F(47, 192), _delta(1)), (F(-3, 16), _delta(1, 1)), (F(3, 16), _delta(2)),
        ]
    return [
        (F(4227769, 3840000), _v(0)), (F(-551, 1600), _v(1)), (F(17, 40), _v(2)),
        (F(-1, 10), _v(3)), (F(1607, 4800), _delta(1)), (F(-39, 80), _delta(1, 1)),
        (F(2, 5), _delta(1, 2)), (F(7, 80), _delta(2)), (F(-2, 5), _delta(2, 1)),
        (F(1, 5), _delta(3)),
    ]


def _check_k(k: int) -> None:
    if k not in SIGMA_L:
        raise InvalidOrderError(f"gradient structures exist only for k = 3, 4, 5; got {k!r}")


def structure(k: int) -> GradientStructure:
    _check_k(k)
    return GradientStructure(k=k, sigma_L=SIGMA_L[k], g_terms=_pack(_g_sos(k)), r_terms=_pack(_r_sos(k)))


def coefficient_form(k: int) -> tuple[Term, ...]:
    """G_k in its signed coefficient form (not a sum of squares)."""
    _check_k(k)
    return _pack(_g_coeff(k))


def expand(terms: Sequence[Term], width: int | None = None) -> list[list[Fraction]]:
    """Symmetric rational matrix Q with sum_i w_i (s_i . x)**2 == x^T Q x."""
    if width is None:
        width = max(len(s) for _, s in terms)
    Q = [[F(0)] * width for _ in range(width)]
    for w, s in terms:
        for a, ca in enumerate(s):
            if ca == 0:
                continue
            for b, cb in enumerate(s):
                Q[a][b] += w * ca * cb
    return Q


def _float_terms(terms: tuple[Term, ...], depth: int) -> tuple[np.ndarray, np.ndarray]:
    w = np.array([float(t[0]) for t in terms])
    S = np.array([[float(c) for c in t[1][: depth + 1]] + [0.0] * (depth + 1 - len(t[1]))
                  for t in terms])
    return w, S


def _eval(terms: tuple[Term, ...], depth: int, window) -> float:
    window = np.asarray(window, dtype=float)
    if window.shape[-1] < depth + 1:
        raise ValueError(f"window needs at least {depth + 1} entries, got {window.shape[-1]}")
    w, S = _float_terms(terms, depth)
    proj = window[..., : depth + 1] @ S.T
    return (proj**2) @ w


def eval_G(s: GradientStructure, window) -> float:
    """G_k at a window (v_n, v_{n-1}, ...), newest first."""
    return _eval(s.g_terms, s.g_depth, window)


def eval_R(s: GradientStructure, window) -> float:
    return _eval(s.r_terms, s.r_depth, window)


def _windows(v: np.ndarray, depth: int, n_lo: int, n_hi: int) -> np.ndarray:
    """Rows (v_n, v_{n-1}, ..., v_{n-depth}) for n_lo <= n <= n_hi, zero-padded below index 0."""
    padded = np.concatenate([np.zeros(depth), v])
    n = np.arange(n_lo, n_hi + 1)[:, None]
    lags = np.arange(depth + 1)[None, :]
    return padded[n - lags + depth]


def verify_identity(k: int, v, n_max: int | None = None) -> float:
    """Largest relative residual of the gradient-structure identity over k <= n <= n_max.

    ``v`` holds v_0 .. v_{n_max}; entries below index 0 are taken as zero.
    The residual at each n is scaled by the sum of the magnitudes of the terms.
    """
    s = structure(k)
    v = np.asarray(v, dtype=float)
    if n_max is None:
        n_max = len(v) - 1
    if n_max < k or len(v) < n_max + 1:
        raise ValueError(f"need n_max >= k and len(v) >= n_max + 1 (k={k}, n_max={n_max}, len={len(v)})")
    v = v[: n_max + 1]
    b = bdf_kernels(k).as_array()
    d = s.window_depth
    depth = max(d, k - 1) + 1
    W = _windows(v, depth, k, n_max)
    lhs = W[:, 0] * (W[:, :k] @ b)
    g_now = eval_G(s, W)
    g_old = eval_G(s, W[:, 1:])
    half = 0.5 * float(s.sigma_L) * W[:, 0] ** 2
    r = eval_R(s, W)
    resid = np.abs(lhs - (g_now - g_old + half + r))
    scale = np.abs(lhs) + g_now + g_old + half + r
    rel = np.where(scale > 0, resid / np.where(scale > 0, scale, 1.0), resid)
    return float(rel.max()) if len(rel) else 0.0


def verify_identity_exact(k: int, v: Sequence[Fraction]) -> Fraction:
    """Exact-rational residual of the identity, maximised over n; oracle for tests."""
    s = structure(k)
    b = bdf_kernels(k).b
    v = [F(x) for x in v]

    def at(i: int) -> Fraction:
        return v[i] if i >= 0 else F(0)

    def quad(terms, n):
        total = F(0)
        for w, st in terms:
            total += w * sum((c * at(n - lag) for lag, c in enumerate(st)), F(0)) ** 2
        return total

    worst = F(0)
    for n in range(k, len(v)):
        lhs = at(n) * sum((b[j] * at(n - j) for j in range(k)), F(0))
        rhs = quad(s.g_terms, n) - quad(s.g_terms, n - 1) + s.sigma_L / 2 * at(n) ** 2 + quad(s.r_terms, n)
        worst = max(worst, abs(lhs - rhs))
    return worst


def quadratic_form_lower_bound(k: int, n: int) -> float:
    """lambda_min of B_k = B_l + B_l^T of order n - k + 1, checked against sigma_Lk."""
    _check_k(k)
    if n < k:
        raise ValueError(f"n={n} must be >= k={k}")
    lam, _ = symmetric_eigs(build_B_lower(k, n - k + 1).symmetric())
    if lam < float(SIGMA_L[k]) - 1e-8:
        raise AssertionError(f"lambda_min(B_{k}) = {lam!r} fell below sigma_L{k} = {float(SIGMA_L[k])!r}")
    return lam


def first_indefinite_size(k: int, max_size: int, below: float = 0.0) -> tuple[int, float] | None:
    """Smallest order m <= max_size with lambda_min(B_k) < ``below``, or None."""
    for m in range(1, max_size + 1):
        lam, _ = symmetric_eigs(build_B_lower(k, m).symmetric())
        if lam < below:
            return m, lam
    return None


def bdf6_counterexample(n_max: int = 200) -> tuple[int, float]:
    """Smallest matrix order at which the BDF-6 quadratic form turns indefinite."""
    if n_max < 6:
        raise ValueError("n_max must be >= 6")
    found = first_indefinite_size(6, n_max)
    if found is None:
        raise NoCounterexampleError(f"B_6 stayed positive semi-definite up to order {n_max}")
    return found

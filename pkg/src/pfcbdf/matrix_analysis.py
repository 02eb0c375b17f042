"""Toeplitz matrices of the BDF and DOC kernels, their extremal eigenvalues,
and Young-type convolution inequalities checked on random data."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .kernels import RHO, bdf_kernels, doc_kernels, InvalidOrderError

__all__ = [
    "M1",
    "ShapeError",
    "BoundViolationError",
    "BandedLowerToeplitz",
    "EigReport",
    "build_B_lower",
    "build_Theta_lower",
    "symmetric_eigs",
    "jacobi_eigenvalues",
    "m2_constant",
    "m3_constant",
    "eig_report",
    "young_slacks",
    "check_young_inequalities",
]

# Lower bounds of lambda_min(B_k) over all orders.
M1: dict[int, float] = {3: 95 / 48, 4: 1.628, 5: 0.3711}


class ShapeError(ValueError):
    pass


class BoundViolationError(AssertionError):
    pass


@dataclass(frozen=True)
class BandedLowerToeplitz:
    m: int
    band: tuple[float, ...]

    def dense(self) -> np.ndarray:
        A = np.zeros((self.m, self.m))
        for j, c in enumerate(self.band[: self.m]):
            idx = np.arange(self.m - j)
            A[idx + j, idx] = c
        return A

    def symmetric(self) -> np.ndarray:
        L = self.dense()
        return L + L.T


def build_B_lower(k: int, m: int) -> BandedLowerToeplitz:
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    return BandedLowerToeplitz(m=m, band=tuple(bdf_kernels(k).as_array()))


def build_Theta_lower(k: int, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError(f"matrix order must be >= 1, got {m}")
    theta = doc_kernels(k, m).theta
    i, j = np.indices((m, m))
    return np.where(i >= j, theta[np.clip(i - j, 0, m - 1)], 0.0)


def _check_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    if A.size and np.max(np.abs(A - A.T)) > 1e-12:
        raise ShapeError("matrix is not symmetric")
    return A


def symmetric_eigs(A: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a real symmetric matrix."""
    A = _check_symmetric(A)
    w = np.linalg.eigvalsh(A)
    return float(w[0]), float(w[-1])


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60) -> np.ndarray:
    """Sorted eigenvalues by cyclic Jacobi rotations.

    Independent of LAPACK; used to cross-check ``symmetric_eigs`` on modest sizes.
    """
    A = _check_symmetric(A).copy()
    n = A.shape[0]
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))


def m2_constant(k: int, m: int) -> float:
    """lambda_max(B_l^T B_l) at order m."""
    L = build_B_lower(k, m).dense()
    return symmetric_eigs(L.T @ L)[1]


def m3_constant(k: int) -> float:
    """Gerschgorin bound 7 rho_k / (2 (7 - k)) on lambda_max of the DOC matrix."""
    return 7.0 * float(RHO[k]) / (2.0 * (7 - k))


@dataclass(frozen=True)
class EigReport:
    k: int
    m: int
    lambda_min_Bk: float
    lambda_max_BlTBl: float
    lambda_min_Theta: float
    lambda_max_Theta: float
    m1: float
    m2: float
    m3: float

    def as_dict(self) -> dict:
        return asdict(self)


def eig_report(k: int, m: int) -> EigReport:
    if k not in M1:
        raise InvalidOrderError(f"eigenvalue bounds are available for k = 3, 4, 5; got {k!r}")
    lmin_b, _ = symmetric_eigs(build_B_lower(k, m).symmetric())
    m2 = m2_constant(k, m)
    T = build_Theta_lower(k, m)
    lmin_t, lmax_t = symmetric_eigs(T + T.T)
    rep = EigReport(k, m, lmin_b, m2, lmin_t, lmax_t, M1[k], m2, m3_constant(k))
    if lmin_b < rep.m1 - 1e-8:
        raise BoundViolationError(f"lambda_min(B_{k}) = {lmin_b!r} < m1 = {rep.m1!r}")
    if lmax_t > rep.m3:
        raise BoundViolationError(f"lambda_max(Theta_{k}) = {lmax_t!r} > m3 = {rep.m3!r}")
    if lmin_t < rep.m1 / m2 - 1e-8:
        raise BoundViolationError(f"lambda_min(Theta_{k}) = {lmin_t!r} < m1/m2 = {rep.m1 / m2!r}")
    return rep


def young_slacks(k: int, v: np.ndarray, w: np.ndarray, eps: float,
                 theta_lower: np.ndarray | None = None, m2: float | None = None) -> np.ndarray:
    """RHS - LHS for each link of the two Young-type inequality chains.

    Returns four slacks: the two inequalities of the DOC-weighted chain, then
    the two of the chain with plain l2 terms on v.
    """
    m = len(v)
    T = build_Theta_lower(k, m) if theta_lower is None else theta_lower
    m1 = M1[k]
    m2 = m2_constant(k, m) if m2 is None else m2
    m3 = m3_constant(k)
    cross = w @ T @ v
    vv = v @ T @ v
    ww = w @ T @ w
    v2 = v @ v
    w2 = w @ w
    mid1 = eps * vv + w2 / (2 * m1 * eps)
    right1 = eps * vv + m2 / (m1**2 * eps) * ww
    mid2 = eps * v2 + m3 / (4 * m1 * eps) * w2
    right2 = eps * v2 + m2 * m3 / (2 * m1**2 * eps) * ww
    return np.array([mid1 - cross, right1 - mid1, mid2 - cross, right2 - mid2])


def check_young_inequalities(k: int, trials: int = 500, length: int = 40,
                             rng: np.random.Generator | int | None = 0,
                             eps_values=(0.1, 1.0, 10.0)) -> float:
    """Worst slack over random standard-normal sequences; must be >= -1e-10."""
    if length < 1:
        raise ValueError("length must be positive")
    rng = np.random.default_rng(rng)
    T = build_Theta_lower(k, length)
    m2 = m2_constant(k, length)
    worst = math.inf
    for _ in range(trials):
        v = rng.standard_normal(length)
        w = rng.standard_normal(length)
        for eps in eps_values:
            worst = min(worst, float(young_slacks(k, v, w, eps, T, m2).min()))
    return worst

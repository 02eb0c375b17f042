"""BDF-k convolution kernels and their discrete orthogonal convolution (DOC) kernels.

The BDF-k difference quotient is written as a convolution of the backward
differences with the kernels ``b_0 .. b_{k-1}``; the DOC kernels ``theta_j``
invert that convolution.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

__all__ = [
    "InvalidOrderError",
    "BdfKernels",
    "DocKernels",
    "RHO",
    "TABLE",
    "bdf_kernels",
    "generated_kernels",
    "doc_kernels",
    "doc_kernels_exact",
    "verify_orthogonality",
    "doc_decay_bound",
]


class InvalidOrderError(ValueError):
    """Raised for a BDF order (or kernel length) outside the supported range."""


F = Fraction

# Tabulated kernels b_j^(k), k = 3..6.
TABLE: dict[int, tuple[Fraction, ...]] = {
    3: (F(11, 6), F(-7, 6), F(1, 3)),
    4: (F(25, 12), F(-23, 12), F(13, 12), F(-1, 4)),
    5: (F(137, 60), F(-163, 60), F(137, 60), F(-21, 20), F(1, 5)),
    6: (F(147, 60), F(-213, 60), F(237, 60), F(-163, 60), F(62, 60), F(-1, 6)),
}

# Decay constants of the DOC kernels, |theta_j| <= rho/4 * (k/7)**j.
RHO: dict[int, Fraction] = {3: F(10, 3), 4: F(6), 5: F(96, 5)}


@dataclass(frozen=True)
class BdfKernels:
    k: int
    b: tuple[Fraction, ...]

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.b])


@dataclass(frozen=True)
class DocKernels:
    k: int
    theta: np.ndarray

    @property
    def m(self) -> int:
        return len(self.theta)


def _check_order(k: int, lo: int = 1, hi: int = 6) -> None:
    if not isinstance(k, (int, np.integer)) or not lo <= k <= hi:
        raise InvalidOrderError(f"BDF order must be an integer in {lo}..{hi}, got {k!r}")


def generated_kernels(k: int) -> tuple[Fraction, ...]:
    """Expand sum_{l=1}^k (1 - z)^(l-1) / l in powers of z with exact binomials."""
    _check_order(k)
    coeffs = [F(0)] * k
    for ell in range(1, k + 1):
        for p in range(ell):
            coeffs[p] += F((-1) ** p * comb(ell - 1, p), ell)
    return tuple(coeffs)


def bdf_kernels(k: int) -> BdfKernels:
    _check_order(k)
    b = generated_kernels(k)
    if k in TABLE and TABLE[k] != b:
        raise AssertionError(f"tabulated BDF-{k} kernels disagree with the generating function")
    return BdfKernels(k=k, b=b)


def doc_kernels_exact(k: int, m: int, b: tuple[Fraction, ...] | None = None) -> list[Fraction]:
    """Exact-rational DOC kernels; used as a test oracle."""
    if b is None:
        b = bdf_kernels(k).b
    if m < 1:
        raise InvalidOrderError(f"kernel length must be >= 1, got {m}")
    theta = [F(1) / b[0]]
    for j in range(1, m):
        acc = sum((theta[j - i] * b[i] for i in range(1, min(j, len(b) - 1) + 1)), F(0))
        theta.append(-acc / b[0])
    return theta


def doc_kernels(k: int, m: int) -> DocKernels:
    """First ``m`` DOC kernels of BDF-k in double precision.

    theta_0 = 1/b_0 and theta_j = -(1/b_0) sum_{i=1}^{min(j,k-1)} theta_{j-i} b_i,
    which is the backward recursion written in terms of the lag j.
    """
    _check_order(k, 1, 6)
    if m < 1:
        raise InvalidOrderError(f"kernel length must be >= 1, got {m}")
    kern = bdf_kernels(k)
    b = kern.as_array()
    theta = np.empty(m)
    theta[0] = float(1 / kern.b[0])
    for j in range(1, m):
        i = np.arange(1, min(j, k - 1) + 1)
        theta[j] = -np.dot(theta[j - i], b[i]) / b[0]
    return DocKernels(k=k, theta=theta)


def verify_orthogonality(k: int, n: int, theta: np.ndarray | None = None) -> float:
    """Max over k <= j <= n of |sum_{l=j}^n theta_{n-l} b_{l-j} - delta_{nj}|.

    ``theta`` may be supplied to check a perturbed kernel sequence.
    """
    _check_order(k)
    if n < k:
        raise InvalidOrderError(f"horizon n={n} must be >= k={k}")
    b = bdf_kernels(k).as_array()
    span = n - k + 1
    if theta is None:
        theta = doc_kernels(k, span).theta
    theta = np.asarray(theta, dtype=float)
    worst = 0.0
    for d in range(span):  # d = n - j
        i = np.arange(0, min(d, k - 1) + 1)
        s = float(np.dot(theta[d - i], b[i]))
        worst = max(worst, abs(s - (1.0 if d == 0 else 0.0)))
    return worst


def doc_decay_bound(k: int, j: int | np.ndarray) -> float | np.ndarray:
    """(rho_k / 4) (k/7)^j, the decay envelope of |theta_j| for k = 3, 4, 5."""
    _check_order(k, 3, 5)
    out = float(RHO[k]) / 4.0 * (k / 7.0) ** np.asarray(j, dtype=float)
    return float(out) if np.ndim(out) == 0 else out

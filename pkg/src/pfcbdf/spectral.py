"""Fourier pseudo-spectral operators on a doubly periodic rectangle.

Fields are real ``(nx, ny)`` arrays with ``f[i, j] = f(x_i, y_j)``,
``x_i = i * lx / nx``.  Spectra use the real-to-complex layout of
``numpy.fft.rfft2`` (last axis halved).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DomainError", "GridMismatchError", "Grid2D", "convolution_h2_slacks"]


class DomainError(ValueError):
    """Input outside the operator's domain (e.g. nonzero mean for the inverse Laplacian)."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float
    ly: float
    _ksq: np.ndarray = field(init=False, repr=False, compare=False)
    _alias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 4 or n % 2:
                raise ValueError(f"mode counts must be even and >= 4, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")
        kx = 2 * np.pi * np.fft.fftfreq(self.nx, d=self.lx / self.nx)
        ky = 2 * np.pi * np.fft.rfftfreq(self.ny, d=self.ly / self.ny)
        ksq = kx[:, None] ** 2 + ky[None, :] ** 2
        mx = np.abs(np.fft.fftfreq(self.nx, d=1.0 / self.nx))[:, None]
        my = np.abs(np.fft.rfftfreq(self.ny, d=1.0 / self.ny))[None, :]
        mask = (mx < self.nx / 3) & (my < self.ny / 3)
        object.__setattr__(self, "_ksq", ksq)
        object.__setattr__(self, "_alias_mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def cell(self) -> float:
        return self.area / (self.nx * self.ny)

    @property
    def ksq(self) -> np.ndarray:
        """|kappa|^2 on the rfft2 layout."""
        return self._ksq

    @property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask keeping modes below two thirds of the Nyquist index."""
        return self._alias_mask

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * (self.lx / self.nx)
        y = np.arange(self.ny) * (self.ly / self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def _check(self, *fields: np.ndarray) -> None:
        for f in fields:
            if np.shape(f) != self.shape:
                raise GridMismatchError(f"field of shape {np.shape(f)} does not live on a {self.shape} grid")

    # transforms
    def fft(self, f: np.ndarray) -> np.ndarray:
        self._check(f)
        return np.fft.rfft2(f)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(fh, s=self.shape)

    def apply(self, f: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        return self.ifft(self.fft(f) * multiplier)

    def dealias(self, f: np.ndarray) -> np.ndarray:
        return self.apply(f, self._alias_mask)

    # operators
    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.apply(f, -self._ksq)

    def one_plus_lap(self, f: np.ndarray) -> np.ndarray:
        return self.apply(f, 1.0 - self._ksq)

    def one_plus_lap_sq(self, f: np.ndarray) -> np.ndarray:
        """(1 + Laplacian)^2 f."""
        return self.apply(f, (1.0 - self._ksq) ** 2)

    def inv_neg_laplacian(self, f: np.ndarray, atol: float = 0.0) -> np.ndarray:
        """(-Laplacian)^{-1} f on mean-zero fields; the result has zero mean."""
        f = np.asarray(f, dtype=float)
        self._check(f)
        mean = f.mean()
        rms = np.sqrt(np.mean(f**2))
        if abs(mean) > 1e-10 * rms + atol:
            raise DomainError(f"inverse Laplacian needs a mean-zero field, mean = {mean:.3e}")
        fh = np.fft.rfft2(f)
        inv = np.zeros_like(self._ksq)
        np.divide(1.0, self._ksq, out=inv, where=self._ksq > 0)
        return self.ifft(fh * inv)

    # quadrature
    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        self._check(f, g)
        return float(self.cell * np.sum(f * g))

    def norm_l2(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f)))

    def norm_hm1(self, f: np.ndarray, atol: float = 0.0) -> float:
        return float(np.sqrt(max(self.inner(self.inv_neg_laplacian(f, atol), f), 0.0)))

    def mean(self, f: np.ndarray) -> float:
        self._check(f)
        return float(np.mean(f))

    def volume(self, f: np.ndarray) -> float:
        """Integral of f over the domain."""
        return self.inner(f, np.ones(self.shape))

    def _parseval(self, fh: np.ndarray, gh: np.ndarray, weight: np.ndarray) -> float:
        # rfft2 stores half of the last axis; interior columns count twice.
        w = np.full(self._ksq.shape[1], 2.0)
        w[0] = 1.0
        if self.ny % 2 == 0:
            w[-1] = 1.0
        s = np.sum(w[None, :] * weight * (fh * np.conj(gh)).real)
        return float(self.area * s / (self.nx * self.ny) ** 2)

    def grad_inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """<grad f, grad g> evaluated with the |kappa|^2 multiplier."""
        self._check(f, g)
        return self._parseval(np.fft.rfft2(f), np.fft.rfft2(g), self._ksq)

    def gradient_norm_sq(self, f: np.ndarray) -> float:
        return self.grad_inner(f, f)


def convolution_h2_slacks(grid: Grid2D, fields, eps: float, theta_lower: np.ndarray,
                          m1: float, m2: float) -> float:
    """RHS - LHS of the DOC-weighted H2/H3 interpolation inequality for a field sequence.

        sum_{l>=j} theta_{l-j} <Lap v^j, Lap v^l>
            <= eps sum_{l>=j} theta_{l-j} <grad Lap v^j, grad Lap v^l>
               + 8 m2^2 / (m1^5 eps^2) sum_l ||v^l||^2
    """
    V = np.asarray(fields, dtype=float)
    if V.ndim != 3 or V.shape[1:] != grid.shape:
        raise GridMismatchError(f"expected a stack of {grid.shape} fields, got shape {V.shape}")
    m = V.shape[0]
    Vh = np.fft.rfft2(V)
    lap_h = -grid.ksq * Vh
    # Parseval weights for the half spectrum (interior rfft columns count twice).
    w = np.full(grid.ksq.shape[1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    norm = grid.area / (grid.nx * grid.ny) ** 2
    A = (lap_h * w).reshape(m, -1)
    B = lap_h.reshape(m, -1)
    lap_gram = norm * (A @ B.conj().T).real
    grad_gram = norm * ((A * grid.ksq.ravel()) @ B.conj().T).real
    T = theta_lower[:m, :m]
    lhs = float(np.sum(T * lap_gram))
    l2 = grid.cell * float(np.sum(V * V))
    rhs = eps * float(np.sum(T * grad_gram)) + 8 * m2**2 / (m1**5 * eps**2) * l2
    return rhs - lhs

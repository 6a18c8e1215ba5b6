"""Periodic N x N lattice on the flat torus [0, L)^2.

Arrays are indexed ``f[ix, iy]``; lattice axis 1 is numpy axis 0 and lattice
axis 2 is numpy axis 1.  All inner products carry the cell weight ``h**2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    """Thread count for FFTs, capped by the YMH_THREADS environment variable."""
    try:
        return max(1, int(os.environ.get("YMH_THREADS", "1")))
    except ValueError:
        return 1


class NonZeroMean(ValueError):
    """Right-hand side of a periodic Poisson problem is not mean-zero."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n!r}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValueError(f"grid length must be positive, got {self.length!r}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (x, y), each of shape (n, n)."""
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    def periodic_offset(self, center: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
        """Shortest periodic displacement from ``center`` to every node."""
        x, y = self.coords()
        L = self.length
        dx = (x - center[0] + 0.5 * L) % L - 0.5 * L
        dy = (y - center[1] + 0.5 * L) % L - 0.5 * L
        return dx, dy

    def zeros(self, *trailing: int) -> np.ndarray:
        return np.zeros((self.n, self.n, *trailing))


def _np_axis(axis: int) -> int:
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    return axis - 1


def forward_diff(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """(f[i + e_axis] - f[i]) / h with periodic wraparound.

    Extra trailing dimensions (vector-valued fields) are carried along.
    """
    ax = _np_axis(axis)
    return (np.roll(f, -1, axis=ax) - f) / h


def backward_diff_adjoint(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Backward difference (f[i] - f[i - e_axis]) / h.

    This is the negative adjoint of :func:`forward_diff` under the
    ``h**2``-weighted inner product, so ``d* = -(bd_1 w_1 + bd_2 w_2)``.
    """
    ax = _np_axis(axis)
    return (f - np.roll(f, 1, axis=ax)) / h


def inner(u: np.ndarray, v: np.ndarray, h: float) -> float:
    return float(h * h * np.sum(u * v))


def norm(u: np.ndarray, h: float) -> float:
    return float(np.sqrt(inner(u, u, h)))


def discrete_laplacian(f: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian, equal to sum_axis bd_axis(fd_axis(f))."""
    return (
        np.roll(f, -1, 0) + np.roll(f, 1, 0) + np.roll(f, -1, 1) + np.roll(f, 1, 1) - 4.0 * f
    ) / (h * h)


def codifferential(w1: np.ndarray, w2: np.ndarray, h: float) -> np.ndarray:
    """d* of a one-form: the exact adjoint of the lattice gradient."""
    return -(backward_diff_adjoint(w1, 1, h) + backward_diff_adjoint(w2, 2, h))


def laplacian_symbol(n: int, h: float) -> np.ndarray:
    """Fourier symbol of :func:`discrete_laplacian` on an n x n grid (<= 0)."""
    k = 2.0 * np.pi * np.fft.fftfreq(n)
    s = (2.0 * np.cos(k) - 2.0) / (h * h)
    return s[:, None] + s[None, :]


def solve_periodic_poisson(rhs: np.ndarray, h: float, rtol: float = 1e-10) -> np.ndarray:
    """Mean-zero solution of ``discrete_laplacian(theta) = rhs``.

    Solved exactly in Fourier space with the five-point symbol, so the
    residual is at rounding level.  Raises :class:`NonZeroMean` when the
    right side violates the torus solvability condition.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    scale = np.sqrt(np.mean(rhs * rhs))
    if abs(rhs.mean()) > rtol * max(scale, np.finfo(float).tiny):
        raise NonZeroMean(f"mean of right side is {rhs.mean():.3e}; torus Poisson problem needs mean zero")
    sym = laplacian_symbol(n, h)
    sym[0, 0] = 1.0
    w = fft_workers()
    rhat = sfft.fft2(rhs, workers=w)
    rhat[0, 0] = 0.0
    theta = np.real(sfft.ifft2(rhat / sym, workers=w))
    return theta - theta.mean()

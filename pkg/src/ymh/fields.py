"""Field containers and the abelian gauge action on them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fiber import FiberModel
from .grid import GridSpec, forward_diff

TWO_PI = 2.0 * np.pi


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FlowState:
    """Connection ``a`` (shape (2, n, n): components A1, A2) and section ``phi``.

    The reference connection is zero, so ``a`` is the connection itself.
    """

    grid: GridSpec
    fiber: FiberModel
    a: np.ndarray
    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        n, d = self.grid.n, self.fiber.ambient_dim
        if self.a.shape != (2, n, n):
            raise ShapeMismatch(f"connection has shape {self.a.shape}, expected {(2, n, n)}")
        if self.phi.shape != (n, n, d):
            raise ShapeMismatch(f"section has shape {self.phi.shape}, expected {(n, n, d)}")

    def with_fields(self, a=None, phi=None, time=None) -> FlowState:
        return replace(
            self,
            a=self.a if a is None else a,
            phi=self.phi if phi is None else phi,
            time=self.time if time is None else time,
        )

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.phi)))

    def export_arrays(self) -> list[np.ndarray]:
        """Contiguous row-major arrays: A1, A2, then each fiber coordinate."""
        out = [np.ascontiguousarray(self.a[0]), np.ascontiguousarray(self.a[1])]
        out += [np.ascontiguousarray(self.phi[..., k]) for k in range(self.phi.shape[-1])]
        return out


@dataclass(frozen=True)
class GaugeTransform:
    """s = exp(i theta) with theta = angle + 2 pi (w1 x + w2 y) / L.

    ``angle`` is the periodic (single-valued) part; ``winding`` counts the
    large-gauge windings along the two generators of the torus.
    """

    angle: np.ndarray
    winding: tuple[int, int] = field(default=(0, 0))

    @classmethod
    def identity(cls, grid: GridSpec) -> GaugeTransform:
        return cls(grid.zeros())

    def total_angle(self, grid: GridSpec) -> np.ndarray:
        x, y = grid.coords()
        w1, w2 = self.winding
        return self.angle + TWO_PI * (w1 * x + w2 * y) / grid.length

    def differential(self, grid: GridSpec) -> np.ndarray:
        """d(theta) taken on the smooth branch, shape (2, n, n)."""
        h = grid.spacing
        w1, w2 = self.winding
        return np.stack(
            [
                forward_diff(self.angle, 1, h) + TWO_PI * w1 / grid.length,
                forward_diff(self.angle, 2, h) + TWO_PI * w2 / grid.length,
            ]
        )

    def inverse(self) -> GaugeTransform:
        return GaugeTransform(-self.angle, (-self.winding[0], -self.winding[1]))


def compose_gauge(s1: GaugeTransform, s2: GaugeTransform) -> GaugeTransform:
    if s1.angle.shape != s2.angle.shape:
        raise ShapeMismatch(f"gauge shapes differ: {s1.angle.shape} vs {s2.angle.shape}")
    return GaugeTransform(
        s1.angle + s2.angle,
        (s1.winding[0] + s2.winding[0], s1.winding[1] + s2.winding[1]),
    )


def apply_gauge(s: GaugeTransform, state: FlowState) -> FlowState:
    """Gauge action: A -> A + d(theta), phi -> exp(-theta X) phi.

    The section rotates by -theta so that the link covariant derivative
    transforms covariantly and every energy term is exactly invariant.
    """
    n = state.grid.n
    if s.angle.shape != (n, n):
        raise ShapeMismatch(f"gauge angle has shape {s.angle.shape}, expected {(n, n)}")
    theta = s.total_angle(state.grid)
    return state.with_fields(
        a=state.a + s.differential(state.grid),
        phi=state.fiber.rotate(state.phi, -theta),
    )


def wrap_angle(x):
    """Representative of x modulo 2 pi in [0, 2 pi)."""
    return np.mod(x, TWO_PI)


def angle_distance(x, y=0.0):
    """Distance between two angles on the circle."""
    d = np.mod(np.asarray(x) - y + np.pi, TWO_PI) - np.pi
    return np.abs(d)


def holonomy(a: np.ndarray, grid: GridSpec) -> tuple[float, float]:
    """Period integrals of A around the two torus generators, mod 2 pi.

    Row and column sums are averaged over the transverse index; for flat
    connections every loop carries the same value.
    """
    h = grid.spacing
    hol1 = h * np.sum(a[0], axis=0).mean()
    hol2 = h * np.sum(a[1], axis=1).mean()
    return float(wrap_angle(hol1)), float(wrap_angle(hol2))

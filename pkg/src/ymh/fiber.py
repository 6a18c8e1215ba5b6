"""Fiber models with a Hamiltonian circle action.

Two models are provided:

* ``sphere``: the unit sphere in R^3, rotated about the third axis, with the
  height function ``p3`` as moment map.
* ``plane``: R^2 rotated about the origin, with moment map ``|p|^2 / 2``.

Every function is vectorised over leading axes; the last axis holds the
ambient coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPHERE = "sphere"
PLANE = "plane"

_MIN_NORM = 1e-8


class DegeneratePoint(ValueError):
    """A sphere point collapsed to the origin (usually: time step too large)."""


@dataclass(frozen=True)
class FiberModel:
    kind: str = SPHERE
    central_element: float | None = None

    def __post_init__(self):
        if self.kind not in (SPHERE, PLANE):
            raise ValueError(f"unknown fiber kind {self.kind!r}; expected 'sphere' or 'plane'")
        if self.central_element is None:
            object.__setattr__(self, "central_element", 1.0 if self.kind == SPHERE else 0.5)

    @property
    def ambient_dim(self) -> int:
        return 3 if self.kind == SPHERE else 2

    @property
    def c(self) -> float:
        return float(self.central_element)

    def project(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == PLANE:
            return p.copy()
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(r < _MIN_NORM):
            raise DegeneratePoint("sphere point within 1e-8 of the origin")
        return p / r

    def tangent_project(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.kind == PLANE:
            return v.copy()
        return v - np.sum(v * p, axis=-1, keepdims=True) * p

    def action_field(self, p: np.ndarray) -> np.ndarray:
        """Infinitesimal generator X(p) of the circle action."""
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        out[..., 0] = -p[..., 1]
        out[..., 1] = p[..., 0]
        return out

    def rotate(self, p: np.ndarray, angle) -> np.ndarray:
        """exp(angle * X) applied pointwise; ``angle`` broadcasts over leading axes."""
        p = np.asarray(p, dtype=float)
        c = np.cos(angle)
        s = np.sin(angle)
        out = p.copy()
        out[..., 0] = c * p[..., 0] - s * p[..., 1]
        out[..., 1] = s * p[..., 0] + c * p[..., 1]
        return out

    def moment(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == SPHERE:
            return p[..., 2].copy()
        return 0.5 * np.sum(p * p, axis=-1)

    def ambient_moment_gradient(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == SPHERE:
            g = np.zeros_like(p)
            g[..., 2] = 1.0
            return g
        return p.copy()

    def moment_gradient(self, p: np.ndarray) -> np.ndarray:
        """Riemannian gradient of :meth:`moment` on the fiber."""
        return self.tangent_project(p, self.ambient_moment_gradient(p))

    def exp_map(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Geodesic step from p along tangent v (straight line for the plane)."""
        if self.kind == PLANE:
            return p + v
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(nv > 0, nv, 1.0)
        return np.cos(nv) * p + np.sin(nv) * v / safe

    def random_points(self, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        p = rng.standard_normal((*shape, self.ambient_dim))
        return self.project(p)

"""Lattice Yang-Mills-Higgs energy and its exact gradient.

The section is coupled to the connection through link rotations,

    D_a phi(x) = (exp(h A_a(x) X) phi(x + e_a) - phi(x)) / h,

which agrees with ``d phi + A X(phi)`` to first order in h and makes every
energy term exactly invariant under the lattice gauge action.  Curvature is
the non-compact plaquette ``F = d1 A2 - d2 A1``.

The tension pair is the gradient of *half* the energy in the h^2-weighted
inner product, so the flow ``d/dt (A, phi) = -tension`` dissipates the energy
at rate ``2 (|tau1|^2 + |tau2|^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fiber import SPHERE
from .fields import FlowState
from .grid import GridSpec, backward_diff_adjoint, forward_diff


class BadRadius(ValueError):
    pass


@dataclass(frozen=True)
class EnergyBreakdown:
    curvature_term: float
    kinetic_term: float
    potential_term: float

    @property
    def total(self) -> float:
        return self.curvature_term + self.kinetic_term + self.potential_term


@dataclass(frozen=True)
class TensionPair:
    tau1: np.ndarray  # (2, n, n)
    tau2: np.ndarray  # (n, n, d), tangent to phi

    def norms(self, h: float) -> tuple[float, float]:
        return (
            float(h * np.sqrt(np.sum(self.tau1**2))),
            float(h * np.sqrt(np.sum(self.tau2**2))),
        )


def curvature(a: np.ndarray, h: float) -> np.ndarray:
    return forward_diff(a[1], 1, h) - forward_diff(a[0], 2, h)


def _transported_neighbours(state: FlowState) -> list[np.ndarray]:
    """exp(h A_a X) phi(x + e_a) for a = 1, 2."""
    h = state.grid.spacing
    fib = state.fiber
    return [fib.rotate(np.roll(state.phi, -1, axis=ax), h * state.a[ax]) for ax in (0, 1)]


def covariant_derivative(state: FlowState) -> np.ndarray:
    """Link covariant differences, shape (2, n, n, d)."""
    h = state.grid.spacing
    return np.stack([(psi - state.phi) / h for psi in _transported_neighbours(state)])


def density_field(state: FlowState) -> np.ndarray:
    """Pointwise energy density |F|^2 + |D phi|^2 + (mu - c)^2."""
    h = state.grid.spacing
    f = curvature(state.a, h)
    dphi = covariant_derivative(state)
    pot = state.fiber.moment(state.phi) - state.fiber.c
    return f**2 + np.sum(dphi**2, axis=(0, 3)) + pot**2


def energy(state: FlowState) -> EnergyBreakdown:
    h = state.grid.spacing
    w = h * h
    f = curvature(state.a, h)
    dphi = covariant_derivative(state)
    pot = state.fiber.moment(state.phi) - state.fiber.c
    return EnergyBreakdown(
        curvature_term=float(w * np.sum(f**2)),
        kinetic_term=float(w * np.sum(dphi**2)),
        potential_term=float(w * np.sum(pot**2)),
    )


def concentration_density(state: FlowState) -> np.ndarray:
    """|F| + |D phi|^2, the quantity controlled by epsilon-regularity."""
    h = state.grid.spacing
    return np.abs(curvature(state.a, h)) + np.sum(covariant_derivative(state) ** 2, axis=(0, 3))


def bochner_density(state: FlowState) -> tuple[np.ndarray, np.ndarray]:
    """(sqrt(1 + |F|^2) + |D phi|^2, 1 + |F| + |D phi|^2)."""
    h = state.grid.spacing
    f = curvature(state.a, h)
    kin = np.sum(covariant_derivative(state) ** 2, axis=(0, 3))
    return np.sqrt(1.0 + f**2) + kin, 1.0 + np.abs(f) + kin


def ball_mask(grid: GridSpec, center: tuple[int, int], radius: float) -> np.ndarray:
    """Nodes within periodic distance ``radius`` of node ``center``."""
    dx, dy = grid.periodic_offset((center[0] * grid.spacing, center[1] * grid.spacing))
    return dx * dx + dy * dy <= radius * radius * (1.0 + 1e-12)


def local_energy(state: FlowState, center: tuple[int, int], radius: float) -> float:
    if not 0 < radius <= state.grid.length / 2:
        raise BadRadius(f"radius must lie in (0, L/2], got {radius!r}")
    mask = ball_mask(state.grid, center, radius)
    return float(state.grid.cell_area * np.sum(density_field(state)[mask]))


def tension(state: FlowState) -> TensionPair:
    """Exact gradient of half the lattice energy (compiled assembly)."""
    tau1, tau2 = _kernels.tension_arrays(
        state.a, state.phi, state.grid.spacing, state.fiber.kind == SPHERE, state.fiber.c
    )
    return TensionPair(tau1, tau2)


def tension_reference(state: FlowState) -> TensionPair:
    """Vectorised numpy assembly of :func:`tension` (slower, same result)."""
    h = state.grid.spacing
    fib = state.fiber
    phi, a = state.phi, state.a

    f = curvature(a, h)
    # d*F written as a one-form: (bd_2 F, -bd_1 F)
    tau1 = np.stack([backward_diff_adjoint(f, 2, h), -backward_diff_adjoint(f, 1, h)])

    lap = -4.0 * phi
    for ax in (0, 1):
        psi = fib.rotate(np.roll(phi, -1, axis=ax), h * a[ax])
        # current <D phi, X(psi)> from differentiating the link angle
        tau1[ax] += np.sum((psi - phi) * fib.action_field(psi), axis=-1) / h
        back = np.roll(fib.rotate(phi, -h * a[ax]), 1, axis=ax)
        lap = lap + psi + back
    grad_amb = -lap / (h * h)
    pot = fib.moment(phi) - fib.c
    grad_amb += pot[..., None] * fib.ambient_moment_gradient(phi)
    tau2 = fib.tangent_project(phi, grad_amb)
    return TensionPair(tau1, tau2)

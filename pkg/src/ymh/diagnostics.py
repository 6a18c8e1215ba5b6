"""Run monitors and the energy bookkeeping for singular events."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .energy import (
    bochner_density,
    concentration_density,
    density_field,
    energy,
    tension,
)
from .fiber import SPHERE
from .fields import FlowState
from .grid import GridSpec, discrete_laplacian, fft_workers
from .presets import BadScale, make_bubble_fixture  # noqa: F401  (re-exported)

ALPHA_SPHERE = 8.0 * math.pi


class MonotonicityViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class MonitorConfig:
    epsilon0: float = 1.0
    # radii in physical units, smallest first; None -> default_radii(grid)
    ball_radii: tuple[float, ...] | None = None
    alpha_M: float | None = None
    check_every: int = 25
    # an episode counts as blow-up only if max density grows by this factor
    blowup_factor: float = 4.0

    def __post_init__(self):
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")
        if not self.blowup_factor >= 1:
            raise ValueError("blowup_factor must be >= 1")
        if self.ball_radii is not None:
            object.__setattr__(self, "ball_radii", tuple(sorted(float(r) for r in self.ball_radii)))

    def radii(self, grid: GridSpec) -> tuple[float, ...]:
        radii = self.ball_radii or default_radii(grid)
        if any(not 0 < r <= grid.length / 2 for r in radii):
            raise ValueError(f"ball radii must lie in (0, L/2], got {radii}")
        return radii

    def alpha(self, fiber_kind: str) -> float:
        if self.alpha_M is not None:
            return float(self.alpha_M)
        # the plane carries no nonconstant harmonic spheres
        return ALPHA_SPHERE if fiber_kind == SPHERE else math.inf


def default_radii(grid: GridSpec) -> tuple[float, ...]:
    """2h, 4h, ... up to min(32h, L/8)."""
    h = grid.spacing
    out = []
    r = 2 * h
    while r <= min(32 * h, grid.length / 8) * (1 + 1e-12):
        out.append(r)
        r *= 2
    return tuple(out) or (min(2 * h, grid.length / 2),)


@dataclass(frozen=True)
class SingularEvent:
    time: float
    location: tuple[int, int]
    scale: float
    energy_before: float
    energy_after: float
    alpha_M: float
    start_time: float = 0.0
    end_time: float = 0.0

    @property
    def bubble_energy(self) -> float:
        return self.energy_before - self.energy_after

    @property
    def quanta(self) -> float:
        return self.bubble_energy / self.alpha_M


TIME_SERIES_COLUMNS = (
    "time",
    "total_energy",
    "curvature_term",
    "kinetic_term",
    "potential_term",
    "max_density",
    "tension_norm1",
    "tension_norm2",
    "dissipation_rate",
    "bochner_ratio",
)


@dataclass(frozen=True)
class TimeSeriesRow:
    time: float
    total_energy: float
    curvature_term: float
    kinetic_term: float
    potential_term: float
    max_density: float
    tension_norm1: float
    tension_norm2: float
    dissipation_rate: float
    bochner_ratio: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in TIME_SERIES_COLUMNS)


def make_row(state: FlowState, prev: FlowState | None = None) -> TimeSeriesRow:
    h = state.grid.spacing
    e = energy(state)
    n1, n2 = tension(state).norms(h)
    ratio = bochner_ratio(state, prev) if prev is not None and prev.time < state.time else 0.0
    return TimeSeriesRow(
        time=state.time,
        total_energy=e.total,
        curvature_term=e.curvature_term,
        kinetic_term=e.kinetic_term,
        potential_term=e.potential_term,
        max_density=float(density_field(state).max()),
        tension_norm1=n1,
        tension_norm2=n2,
        dissipation_rate=2.0 * (n1 * n1 + n2 * n2),
        bochner_ratio=ratio,
    )


# -- energy inequality ---------------------------------------------------------


@dataclass(frozen=True)
class DissipationReport:
    max_increase: float
    relative_defects: tuple[float, ...]

    @property
    def max_relative_defect(self) -> float:
        return max(self.relative_defects, default=0.0)


def check_dissipation(history: list[FlowState], tol: float = 1e-10) -> DissipationReport:
    """Energy monotonicity and the per-step defect of dE = -2 dt |tau|^2.

    ``history`` holds states at consecutive accepted steps of the direct flow.
    """
    if len(history) < 2:
        raise ValueError("need at least two consecutive states")
    energies = [energy(s).total for s in history]
    scale = max(1.0, energies[0])
    defects = []
    max_inc = 0.0
    for k in range(len(history) - 1):
        s0, s1 = history[k], history[k + 1]
        inc = energies[k + 1] - energies[k]
        max_inc = max(max_inc, inc)
        if inc > tol * scale:
            raise MonotonicityViolation(
                f"energy rose by {inc:.3e} between t = {s0.time!r} and t = {s1.time!r}"
            )
        dt = s1.time - s0.time
        n1, n2 = tension(s0).norms(s0.grid.spacing)
        predicted = 2.0 * dt * (n1 * n1 + n2 * n2)
        defect = abs(-inc - predicted)
        defects.append(defect / predicted if predicted > 0 else 0.0)
    return DissipationReport(max_inc, tuple(defects))


# -- concentration -----------------------------------------------------------------


class _BallSums:
    """Ball integrals centred at every node via circular FFT convolution."""

    def __init__(self, grid: GridSpec, radii):
        self.grid = grid
        self.radii = tuple(radii)
        dx, dy = grid.periodic_offset((0.0, 0.0))
        r2 = dx * dx + dy * dy
        self._kernels = {
            r: np.conj(sfft.rfft2((r2 <= r * r * (1 + 1e-12)).astype(float))) for r in self.radii
        }

    def __call__(self, dens: np.ndarray, radius: float) -> np.ndarray:
        k = self._kernels.get(radius)
        if k is None:
            self._kernels.update(_BallSums(self.grid, (radius,))._kernels)
            k = self._kernels[radius]
        w = fft_workers()
        out = sfft.irfft2(sfft.rfft2(dens, workers=w) * k, s=dens.shape, workers=w)
        return self.grid.cell_area * out


_ball_cache: dict = {}


def ball_sums(grid: GridSpec, dens: np.ndarray, radius: float) -> np.ndarray:
    key = (grid, radius)
    if key not in _ball_cache:
        if len(_ball_cache) > 64:
            _ball_cache.clear()
        _ball_cache[key] = _BallSums(grid, (radius,))
    return _ball_cache[key](dens, radius)


@dataclass(frozen=True)
class Concentration:
    location: tuple[int, int]
    radius: float
    mass: float


def detect_concentration(state: FlowState, cfg: MonitorConfig) -> Concentration | None:
    """First ball (smallest radius first) with integral of |F| + |D phi|^2 >= epsilon0.

    States whose total energy is below epsilon0 are never flagged.
    """
    if energy(state).total < cfg.epsilon0:
        return None
    dens = concentration_density(state)
    for r in cfg.radii(state.grid):
        sums = ball_sums(state.grid, dens, r)
        idx = int(np.argmax(sums))
        if sums.flat[idx] >= cfg.epsilon0:
            loc = np.unravel_index(idx, sums.shape)
            return Concentration((int(loc[0]), int(loc[1])), r, float(sums.flat[idx]))
    return None


# -- Bochner ratio ---------------------------------------------------------------


def bochner_ratio(state: FlowState, prev: FlowState) -> float:
    """max over nodes of (d/dt - laplacian) e1 / ((1 + |F| + |D phi|^2) e1).

    The time derivative is the backward difference between ``prev`` and
    ``state``; the result is the empirical constant of the Bochner bound.
    """
    dt = state.time - prev.time
    if dt <= 0:
        raise ValueError("states must be consecutive in time")
    e_now, weight = bochner_density(state)
    e_prev, _ = bochner_density(prev)
    lhs = (e_now - e_prev) / dt - discrete_laplacian(e_now, state.grid.spacing)
    return float(np.max(lhs / (weight * e_now)))


# -- local energy inequality -----------------------------------------------------


class LocalEnergyMonitor:
    """Smallest C with E(t, B_R(x)) <= E(0, B_2R(x)) + C t E(0) / R^2."""

    def __init__(self, initial: FlowState, radii):
        self.grid = initial.grid
        self.radii = tuple(r for r in radii if 2 * r <= self.grid.length / 2)
        self.e0 = energy(initial).total
        dens0 = density_field(initial)
        self._outer = {r: ball_sums(self.grid, dens0, 2 * r) for r in self.radii}
        self.constant = 0.0

    def update(self, state: FlowState) -> float:
        if state.time <= 0 or self.e0 <= 0:
            return self.constant
        dens = density_field(state)
        for r in self.radii:
            inner = ball_sums(self.grid, dens, r)
            excess = float(np.max(inner - self._outer[r]))
            if excess > 0:
                self.constant = max(self.constant, excess * r * r / (state.time * self.e0))
        return self.constant


# -- bubble accounting -------------------------------------------------------------


@dataclass(frozen=True)
class BubbleAccount:
    bubble_energies: tuple[float, ...]
    quanta: tuple[int, ...]
    quantization_defects: tuple[float, ...]
    initial_energy: float
    final_energy: float
    dissipated: float
    converged: bool

    @property
    def total_bubble_energy(self) -> float:
        return float(sum(self.bubble_energies))

    @property
    def accounting_residual(self) -> float:
        return self.initial_energy - self.dissipated - self.total_bubble_energy - self.final_energy

    @property
    def accounting_defect(self) -> float:
        return abs(self.accounting_residual) / max(self.initial_energy, 1e-300)


def bubble_account(
    events: list[SingularEvent],
    initial_energy: float,
    final_energy: float,
    dissipated: float,
    converged: bool,
) -> BubbleAccount:
    """Energy identity bookkeeping for a finished run.

    ``dissipated`` is the smooth dissipation 2 sum dt |tau|^2 accumulated
    outside singular windows.
    """
    energies, quanta, defects = [], [], []
    for ev in events:
        e = ev.bubble_energy
        n = int(round(e / ev.alpha_M)) if math.isfinite(ev.alpha_M) else 0
        energies.append(e)
        quanta.append(n)
        defects.append(abs(e - n * ev.alpha_M) / ev.alpha_M if math.isfinite(ev.alpha_M) else math.nan)
    return BubbleAccount(
        tuple(energies), tuple(quanta), tuple(defects), initial_energy, final_energy, dissipated, converged
    )


def quanta_bound(initial_energy: float, alpha: float) -> int:
    """floor(E(0) / alpha(M)), the maximal number of bubbles."""
    return int(math.floor(initial_energy / alpha)) if math.isfinite(alpha) else 0


def harmonic_sphere_energy(scale: float = 1.0, radius: float = math.inf) -> float:
    """Quadrature of |grad phi|^2 for the degree-one inverse stereographic map.

    Integrates 2 pi (theta'^2 + sin^2 theta / r^2) r over [0, radius] with
    theta(r) = 2 arctan(scale / r); the full-plane value is the classical
    degree-one energy.
    """
    from scipy.integrate import quad

    def integrand(r):
        u = scale / r
        dtheta = -2.0 * scale / (r * r + scale * scale)
        s = 2.0 * u / (1.0 + u * u)
        return (dtheta * dtheta + s * s / (r * r)) * r

    # substitute r = scale * tan(s) to map [0, inf) to [0, pi/2)
    upper = math.pi / 2 if math.isinf(radius) else math.atan(radius / scale)
    val, _ = quad(lambda s: integrand(scale * math.tan(s)) * scale / math.cos(s) ** 2, 1e-12, upper, limit=200)
    return 2.0 * math.pi * val

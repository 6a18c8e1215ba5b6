"""Coulomb gauge fixing and pure-gauge analysis on the torus.

On the flat torus every connection splits as

    A = exact + harmonic + co-exact,

with the harmonic part a constant one-form.  Coulomb fixing removes the exact
part with one periodic Poisson solve; the harmonic part is reported and kept,
since removing it needs a large gauge transformation and is only possible
when its holonomy lies on the 2 pi lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import curvature
from .fields import TWO_PI, GaugeTransform, angle_distance, holonomy
from .grid import GridSpec, codifferential, forward_diff, norm, solve_periodic_poisson


@dataclass(frozen=True)
class CoulombResult:
    transform: GaugeTransform
    fixed: np.ndarray
    harmonic_part: tuple[float, float]
    residual: float

    def h1_constant(self, a: np.ndarray, grid: GridSpec) -> float:
        """‖fixed - harmonic‖_{H^1} / ‖F‖, or 0 for flat input."""
        h = grid.spacing
        b = self.fixed - np.array(self.harmonic_part)[:, None, None]
        grad = sum(norm(forward_diff(b[k], ax, h), h) ** 2 for k in (0, 1) for ax in (1, 2))
        h1 = np.sqrt(norm(b, h) ** 2 + grad)
        f = norm(curvature(a, h), h)
        return float(h1 / f) if f > 0 else 0.0


def coulomb_fix(a: np.ndarray, grid: GridSpec) -> CoulombResult:
    h = grid.spacing
    div = codifferential(a[0], a[1], h)
    # d*(A + d theta) = 0  <=>  laplacian(theta) = d*A
    rhs = div - div.mean()
    theta = solve_periodic_poisson(rhs, h)
    s = GaugeTransform(theta)
    fixed = a + s.differential(grid)
    residual = norm(codifferential(fixed[0], fixed[1], h), h)
    harmonic = (float(fixed[0].mean()), float(fixed[1].mean()))
    return CoulombResult(s, fixed, harmonic, residual)


@dataclass(frozen=True)
class PureGaugeReport:
    is_pure: bool
    witness: GaugeTransform | None
    curvature_norm: float
    holonomy: tuple[float, float]
    winding: tuple[int, int] | None


def is_pure_gauge(a: np.ndarray, grid: GridSpec, tol: float = 1e-8) -> PureGaugeReport:
    """A is gauge-trivial iff F = 0 and both holonomies vanish mod 2 pi.

    When it is, the witness ``s`` satisfies ``apply_gauge(s, A = 0).a == A``.
    """
    h = grid.spacing
    fnorm = norm(curvature(a, h), h)
    hol = holonomy(a, grid)
    flat_trivial = fnorm <= tol and all(angle_distance(v) <= tol for v in hol)
    if not flat_trivial:
        return PureGaugeReport(False, None, fnorm, hol, None)
    res = coulomb_fix(a, grid)
    raw = [res.harmonic_part[k] * grid.length for k in (0, 1)]
    winding = (int(round(raw[0] / TWO_PI)), int(round(raw[1] / TWO_PI)))
    witness = GaugeTransform(-res.transform.angle, winding)
    return PureGaugeReport(True, witness, fnorm, hol, winding)

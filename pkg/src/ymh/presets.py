"""Closed-form initial data.

ground        A = 0, phi = north pole (sphere) or (1, 0) (plane).
south-pole    A = 0, phi = south pole.
equator       A = 0, phi = (cos 2 pi x / L, sin 2 pi x / L, 0).
bubble        degree-one inverse stereographic profile of scale lam at
              ``center``: the north-chart coordinate lam / (x + i y) times
              the cutoff exp(-rho^2 / (1 - rho^2)), rho = r / (8 lam), so phi
              is exactly the north pole outside 8 lam and C-infinity.
two-bubbles   two bubbles of scale lam centred at (L/4, L/2) and (3L/4, L/2).
random-smooth A and the section perturbation are random Fourier series with
              modes |k| <= cutoff; sphere: phi = P(e3 + amplitude * noise),
              plane: phi = (1, 0) + amplitude * noise.
vortex        plane fiber, A = 0, vortex-antivortex pair of winding +-n
              with tanh(r / core) amplitude profiles.
"""

from __future__ import annotations

import numpy as np

from .fiber import PLANE, SPHERE, FiberModel
from .fields import FlowState
from .grid import GridSpec


class BadScale(ValueError):
    pass


def _north(fiber: FiberModel) -> np.ndarray:
    return np.array([0.0, 0.0, 1.0]) if fiber.kind == SPHERE else np.array([1.0, 0.0])


def ground(grid: GridSpec, fiber: FiberModel) -> FlowState:
    phi = np.broadcast_to(_north(fiber), (grid.n, grid.n, fiber.ambient_dim)).copy()
    return FlowState(grid, fiber, grid.zeros(2).transpose(2, 0, 1).copy(), phi)


def south_pole(grid: GridSpec, fiber: FiberModel) -> FlowState:
    if fiber.kind != SPHERE:
        raise ValueError("south-pole preset needs the sphere fiber")
    st = ground(grid, fiber)
    phi = st.phi.copy()
    phi[..., 2] = -1.0
    return st.with_fields(phi=phi)


def equator(grid: GridSpec, fiber: FiberModel) -> FlowState:
    x, _ = grid.coords()
    arg = 2.0 * np.pi * x / grid.length
    if fiber.kind == SPHERE:
        phi = np.stack([np.cos(arg), np.sin(arg), np.zeros_like(arg)], axis=-1)
    else:
        phi = np.stack([np.cos(arg), np.sin(arg)], axis=-1)
    return ground(grid, fiber).with_fields(phi=phi)


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


def _bump(rho: np.ndarray) -> np.ndarray:
    """exp(-rho^2 / (1 - rho^2)) on rho < 1, zero beyond; C-infinity."""
    out = np.zeros_like(rho)
    m = rho < 1.0
    out[m] = np.exp(-rho[m] ** 2 / (1.0 - rho[m] ** 2))
    return out


def bubble_profile(grid: GridSpec, scale: float, center: tuple[float, float]) -> np.ndarray:
    dx, dy = grid.periodic_offset(center)
    r2 = dx * dx + dy * dy
    cut = _bump(np.sqrt(r2) / (8.0 * scale))
    phi = np.zeros((grid.n, grid.n, 3))
    phi[..., 2] = -1.0
    m = r2 > 0
    # north-chart coordinate z = lam * cut / (x + i y)
    zx = scale * cut[m] * dx[m] / r2[m]
    zy = -scale * cut[m] * dy[m] / r2[m]
    z2 = zx * zx + zy * zy
    phi[m, 0] = 2.0 * zx / (1.0 + z2)
    phi[m, 1] = 2.0 * zy / (1.0 + z2)
    phi[m, 2] = (1.0 - z2) / (1.0 + z2)
    return phi


def _check_scale(grid: GridSpec, scale: float):
    if not (4.0 * grid.spacing <= scale * (1 + 1e-12) and scale <= grid.length / 32 * (1 + 1e-12)):
        raise BadScale(
            f"bubble scale {scale!r} outside [4h, L/32] = [{4 * grid.spacing!r}, {grid.length / 32!r}]"
        )


def make_bubble_fixture(
    grid: GridSpec,
    scale: float,
    center: tuple[float, float] | None = None,
    fiber: FiberModel | None = None,
) -> FlowState:
    fiber = fiber or FiberModel(SPHERE)
    if fiber.kind != SPHERE:
        raise ValueError("bubble fixtures need the sphere fiber")
    _check_scale(grid, scale)
    if center is None:
        center = (grid.length / 2, grid.length / 2)
    return ground(grid, fiber).with_fields(phi=bubble_profile(grid, scale, center))


def two_bubbles(grid: GridSpec, scale: float, fiber: FiberModel | None = None) -> FlowState:
    fiber = fiber or FiberModel(SPHERE)
    _check_scale(grid, scale)
    L = grid.length
    p1 = bubble_profile(grid, scale, (L / 4, L / 2))
    p2 = bubble_profile(grid, scale, (3 * L / 4, L / 2))
    # supports are disjoint: outside its cap each profile is the north pole
    phi = p1 + p2
    phi[..., 2] -= 1.0
    return ground(grid, fiber).with_fields(phi=fiber.project(phi))


def _random_series(grid: GridSpec, rng: np.random.Generator, cutoff: int) -> np.ndarray:
    x, y = grid.coords()
    k = 2.0 * np.pi / grid.length
    out = np.zeros_like(x)
    for k1 in range(-cutoff, cutoff + 1):
        for k2 in range(-cutoff, cutoff + 1):
            if k1 * k1 + k2 * k2 > cutoff * cutoff:
                continue
            c, s = rng.standard_normal(2)
            out += c * np.cos(k * (k1 * x + k2 * y)) + s * np.sin(k * (k1 * x + k2 * y))
    return out / np.sqrt(np.mean(out**2))


def random_smooth(
    grid: GridSpec,
    fiber: FiberModel,
    seed: int = 0,
    amplitude: float = 0.5,
    cutoff: int = 3,
) -> FlowState:
    """Random band-limited data with unit-rms Fourier series scaled by ``amplitude``."""
    rng = np.random.default_rng(seed)
    a = np.stack([amplitude * _random_series(grid, rng, cutoff) for _ in range(2)])
    noise = np.stack(
        [amplitude * _random_series(grid, rng, cutoff) for _ in range(fiber.ambient_dim)], axis=-1
    )
    phi = fiber.project(_north(fiber) + noise)
    return FlowState(grid, fiber, a, phi)


def vortex(grid: GridSpec, fiber: FiberModel, winding: int = 1, core: float | None = None) -> FlowState:
    """Vortex of winding n at (3L/8, L/2) and antivortex at (5L/8, L/2).

    The pair phase ``arg((z - z1) / (z - z2))`` is small away from the pair,
    so it is tapered to zero before the cell boundary to make phi periodic.
    """
    if fiber.kind != PLANE:
        raise ValueError("vortex preset needs the plane fiber")
    L = grid.length
    core = core or L / 32
    dx1, dy1 = grid.periodic_offset((3 * L / 8, L / 2))
    dx2, dy2 = grid.periodic_offset((5 * L / 8, L / 2))
    dxc, dyc = grid.periodic_offset((L / 2, L / 2))
    rc = np.hypot(dxc, dyc)
    taper = _smooth_step((0.45 * L - rc) / (0.2 * L))
    phase = np.angle((dx1 + 1j * dy1) / np.where(dx2 + 1j * dy2 == 0, 1.0, dx2 + 1j * dy2))
    angle = winding * taper * phase
    amp = np.tanh(np.hypot(dx1, dy1) / core) * np.tanh(np.hypot(dx2, dy2) / core)
    phi = np.stack([amp * np.cos(angle), amp * np.sin(angle)], axis=-1)
    return FlowState(grid, fiber, grid.zeros(2).transpose(2, 0, 1).copy(), phi)


PRESETS = ("ground", "south-pole", "equator", "bubble", "two-bubbles", "random-smooth", "vortex")


def build_preset(name: str, grid: GridSpec, fiber: FiberModel, **params) -> FlowState:
    if name == "ground":
        return ground(grid, fiber)
    if name == "south-pole":
        return south_pole(grid, fiber)
    if name == "equator":
        return equator(grid, fiber)
    if name == "bubble":
        scale = float(params.get("scale", grid.length / 32))
        center = params.get("center")
        return make_bubble_fixture(grid, scale, center, fiber)
    if name == "two-bubbles":
        return two_bubbles(grid, float(params.get("scale", grid.length / 32)), fiber)
    if name == "random-smooth":
        return random_smooth(
            grid,
            fiber,
            seed=int(params.get("seed", 0)),
            amplitude=float(params.get("amplitude", 0.5)),
            cutoff=int(params.get("cutoff", 3)),
        )
    if name == "vortex":
        return vortex(grid, fiber, winding=int(params.get("winding", 1)))
    raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")

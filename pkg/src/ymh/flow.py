"""Explicit time integration of the lattice YMH flow.

Two formulations are provided:

* the direct flow ``d/dt (A, phi) = -tension(A, phi)``;
* the DeTurck-gauged flow for (abar, phibar) together with the gauge angle
  theta, from which the direct solution is recovered by
  ``A = abar + d theta``, ``phi = exp(-theta X) phibar``.

In the gauged flow the connection gains the term ``-d d* abar`` (making its
equation strictly parabolic), the section gains ``(d* abar) X(phibar)`` and
the angle obeys ``d theta / dt = d* abar``; the extra terms cancel exactly
under reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import curvature, energy, tension
from .fields import FlowState, GaugeTransform, apply_gauge
from .grid import codifferential, forward_diff

EULER = "euler"
RK4 = "rk4"
MIN_DT = 1e-12
MAX_REJECTIONS = 20


class StepRejected(RuntimeError):
    """Adaptive stepping could not decrease the energy with 20 halvings."""

    def __init__(self, message: str, dt: float):
        super().__init__(message)
        self.dt = dt


class NonFiniteField(FloatingPointError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    scheme: str = EULER
    max_time: float = 1.0
    cfl_safety: float = 0.9
    adapt: bool = False
    # stop once |tau1| + |tau2| falls below this (0 disables)
    stop_tension: float = 0.0

    def __post_init__(self):
        if self.scheme not in (EULER, RK4):
            raise ValueError(f"unknown scheme {self.scheme!r}; expected 'euler' or 'rk4'")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")

    def stable_dt(self, h: float) -> float:
        return self.cfl_safety * h * h / 4.0

    def check_stability(self, h: float):
        if not self.adapt and self.dt > self.stable_dt(h) * (1 + 1e-12):
            raise ValueError(
                f"dt = {self.dt!r} exceeds the parabolic bound cfl_safety*h^2/4 = {self.stable_dt(h)!r}"
            )


def _direct_rhs(state: FlowState) -> tuple[np.ndarray, np.ndarray]:
    t = tension(state)
    return -t.tau1, -t.tau2


def _advance(state, a_rate, phi_rate, dt):
    return state.with_fields(
        a=state.a + dt * a_rate,
        phi=state.fiber.project(state.phi + dt * phi_rate),
    )


def _integrate(state: FlowState, rhs, dt: float, scheme: str) -> FlowState:
    if scheme == EULER:
        da, dp = rhs(state)
        new = _advance(state, da, dp, dt)
    else:
        k1 = rhs(state)
        k2 = rhs(_advance(state, *k1, dt / 2))
        k3 = rhs(_advance(state, *k2, dt / 2))
        k4 = rhs(_advance(state, *k3, dt))
        da = (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        dp = (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
        new = _advance(state, da, dp, dt)
    return new.with_fields(time=state.time + dt)


def step_direct(state: FlowState, cfg: IntegratorConfig, dt: float | None = None) -> FlowState:
    """One step of the direct flow with the configured scheme.

    In adaptive mode the step is retried with halved dt while the energy
    rises by more than 1e-10 * max(1, E); after 20 halvings
    :class:`StepRejected` is raised.  The accepted dt is ``new.time - state.time``.
    """
    dt = cfg.dt if dt is None else dt
    if not cfg.adapt:
        return _integrate(state, _direct_rhs, dt, cfg.scheme)
    e0 = energy(state).total
    tol = 1e-10 * max(1.0, e0)
    for attempt in range(MAX_REJECTIONS + 1):
        new = _integrate(state, _direct_rhs, dt, cfg.scheme)
        if new.is_finite() and energy(new).total <= e0 + tol:
            return new
        if attempt == MAX_REJECTIONS or dt / 2 < MIN_DT:
            break
        dt /= 2
    raise StepRejected(f"energy increased at t = {state.time!r} down to dt = {dt!r}", dt)


@dataclass(frozen=True)
class DeTurckState:
    abar: FlowState
    theta: np.ndarray

    @classmethod
    def start(cls, state: FlowState) -> DeTurckState:
        """Gauged data at t = 0: abar = A, phibar = phi, S(0) = id."""
        return cls(state, np.zeros((state.grid.n, state.grid.n)))

    @property
    def time(self) -> float:
        return self.abar.time


def _deturck_rhs(st: FlowState) -> tuple[np.ndarray, np.ndarray]:
    h = st.grid.spacing
    t = tension(st)
    div = codifferential(st.a[0], st.a[1], h)
    da = -t.tau1 - np.stack([forward_diff(div, 1, h), forward_diff(div, 2, h)])
    dp = -t.tau2 + st.fiber.tangent_project(st.phi, div[..., None] * st.fiber.action_field(st.phi))
    return da, dp, div


def step_deturck(state: DeTurckState, cfg: IntegratorConfig, dt: float | None = None) -> DeTurckState:
    """One step of the gauged system; theta is advanced with the same scheme."""
    dt = cfg.dt if dt is None else dt
    st, theta = state.abar, state.theta

    def advance(s, th, k, step):
        return (
            s.with_fields(a=s.a + step * k[0], phi=s.fiber.project(s.phi + step * k[1])),
            th + step * k[2],
        )

    if cfg.scheme == EULER:
        k = _deturck_rhs(st)
        new, th = advance(st, theta, k, dt)
    else:
        k1 = _deturck_rhs(st)
        k2 = _deturck_rhs(advance(st, theta, k1, dt / 2)[0])
        k3 = _deturck_rhs(advance(st, theta, k2, dt / 2)[0])
        k4 = _deturck_rhs(advance(st, theta, k3, dt)[0])
        k = tuple((a + 2 * b + 2 * c + d) / 6.0 for a, b, c, d in zip(k1, k2, k3, k4))
        new, th = advance(st, theta, k, dt)
    return DeTurckState(new.with_fields(time=st.time + dt), th)


def reconstruct(state: DeTurckState) -> FlowState:
    """(A, phi) = S(t)^* (abar, phibar)."""
    return apply_gauge(GaugeTransform(state.theta), state.abar)


# -- run driver ------------------------------------------------------------------


@dataclass
class RunReport:
    initial_energy: float
    series: list = field(default_factory=list)
    events: list = field(default_factory=list)
    final: FlowState | None = None
    steps: int = 0
    # 2 sum dt |tau|^2 outside singular windows, and over the whole run
    dissipated: float = 0.0
    dissipated_total: float = 0.0
    converged: bool = False
    local_energy_constant: float = 0.0
    max_bochner_ratio: float = float("-inf")
    max_curvature_residual: float = 0.0
    max_energy_increase: float = 0.0
    false_alarms: int = 0

    def account(self):
        from .diagnostics import bubble_account

        return bubble_account(
            self.events,
            self.initial_energy,
            self.series[-1].total_energy if self.series else self.initial_energy,
            self.dissipated,
            self.converged,
        )


@dataclass
class _Episode:
    start_time: float
    start_energy: float
    location: tuple
    scale: float
    last_time: float
    last_energy: float
    start_density: float
    peak_density: float
    peak_rate: float = 0.0
    peak_time: float = 0.0
    dissipated: float = 0.0


def _norm_sq(x: np.ndarray, h: float) -> float:
    return float(h * h * np.sum(x * x))


def run(
    initial: FlowState,
    cfg: IntegratorConfig,
    monitor_cfg=None,
    monitors=(),
) -> RunReport:
    """Integrate the direct flow to ``cfg.max_time``, logging singular events.

    A singular event is declared for a concentration episode: it opens when
    the epsilon-regularity detector fires at the smallest ball radius, and
    it closes when no ball of any radius carries epsilon0 any more.  If the
    energy released over the episode is at least alpha(M) / 2 and the peak
    energy density grew by ``blowup_factor`` over its value at the opening
    check, the episode is recorded as a :class:`~ymh.diagnostics.SingularEvent`, its dissipation is
    booked as bubble energy, and the flow restarts from the Coulomb-gauge
    representative of the current state with dt reset.  Persistent step
    rejection at the minimal dt while the detector fires (adaptive mode) is
    declared singular in the same way.

    ``monitors`` are callables ``f(state, row)`` invoked at every check.
    """
    from .diagnostics import (
        LocalEnergyMonitor,
        MonitorConfig,
        SingularEvent,
        detect_concentration,
        make_row,
    )
    from .gauge import coulomb_fix

    mcfg = monitor_cfg or MonitorConfig()
    grid = initial.grid
    h = grid.spacing
    radii = mcfg.radii(grid)
    alpha = mcfg.alpha(initial.fiber.kind)
    cfg.check_stability(h)
    if not initial.is_finite():
        raise NonFiniteField("initial data contains NaN or Inf")

    state = initial
    e_init = energy(state).total
    report = RunReport(initial_energy=e_init)
    local = LocalEnergyMonitor(initial, radii)
    episode: _Episode | None = None
    prev: FlowState | None = None
    dt = cfg.dt
    step = 0
    t_end = cfg.max_time
    tiny = 1e-12 * max(1.0, abs(t_end))

    def restart(st: FlowState) -> FlowState:
        return apply_gauge(coulomb_fix(st.a, st.grid).transform, st)

    def close_episode(ep: _Episode, st: FlowState, e_now: float, forced: bool):
        nonlocal dt
        released = ep.start_energy - e_now
        sharpened = ep.peak_density >= mcfg.blowup_factor * ep.start_density
        if forced or (released >= 0.5 * alpha and sharpened):
            report.events.append(
                SingularEvent(
                    time=ep.peak_time if ep.peak_rate > 0 else st.time,
                    location=ep.location,
                    scale=ep.scale,
                    energy_before=ep.start_energy,
                    energy_after=e_now,
                    alpha_M=alpha,
                    start_time=ep.start_time,
                    end_time=st.time,
                )
            )
            dt = cfg.dt
            return restart(st)
        report.dissipated += ep.dissipated
        report.false_alarms += 1
        return st

    def check(st: FlowState, prev_st):
        nonlocal episode
        row = make_row(st, prev_st)
        report.series.append(row)
        if prev_st is not None and row.bochner_ratio > report.max_bochner_ratio:
            report.max_bochner_ratio = row.bochner_ratio
        report.local_energy_constant = local.update(st)
        for mon in monitors:
            mon(st, row)
        hit = detect_concentration(st, mcfg)
        e_now = row.total_energy
        if episode is None:
            if hit is not None and hit.radius == radii[0]:
                md = row.max_density
                episode = _Episode(st.time, e_now, hit.location, hit.radius, st.time, e_now, md, md)
            return st, row
        if st.time > episode.last_time:
            rate = (episode.last_energy - e_now) / (st.time - episode.last_time)
            if rate > episode.peak_rate:
                episode.peak_rate, episode.peak_time = rate, st.time
        episode.last_time, episode.last_energy = st.time, e_now
        episode.peak_density = max(episode.peak_density, row.max_density)
        if hit is not None:
            if hit.radius == radii[0]:
                episode.location = hit.location
            return st, row
        ep, episode = episode, None
        return close_episode(ep, st, e_now, forced=False), row

    state, row = check(state, None)
    while state.time < t_end - tiny:
        step_dt = min(dt, t_end - state.time)
        tau = tension(state)
        rate = 2.0 * (_norm_sq(tau.tau1, h) + _norm_sq(tau.tau2, h))
        try:
            if cfg.scheme == EULER and not cfg.adapt:
                new = _advance(state, -tau.tau1, -tau.tau2, step_dt).with_fields(time=state.time + step_dt)
            else:
                new = step_direct(state, cfg, step_dt)
        except StepRejected:
            hit = detect_concentration(state, mcfg)
            if hit is None:
                raise
            e_now = energy(state).total
            ep = episode or _Episode(state.time, e_now, hit.location, hit.radius, state.time, e_now, 0.0, 0.0)
            episode = None
            state = close_episode(ep, state, e_now, forced=True)
            # step through the singular time without the energy test
            new = _integrate(state, _direct_rhs, cfg.dt, cfg.scheme)
        if not new.is_finite():
            raise NonFiniteField(f"non-finite field after step at t = {state.time!r}")
        taken = new.time - state.time
        inc = rate * taken
        report.dissipated_total += inc
        if episode is not None:
            episode.dissipated += inc
        else:
            report.dissipated += inc
        df = curvature(new.a, h) - curvature(state.a, h)
        da = new.a - state.a
        lin = forward_diff(da[1], 1, h) - forward_diff(da[0], 2, h)
        scale = max(1.0, float(np.max(np.abs(curvature(state.a, h)))))
        report.max_curvature_residual = max(
            report.max_curvature_residual, float(np.max(np.abs(df - lin))) / scale
        )
        prev, state = state, new
        step += 1
        last = state.time >= t_end - tiny
        if step % mcfg.check_every == 0 or last:
            e_prev = report.series[-1].total_energy
            state, row = check(state, prev)
            report.max_energy_increase = max(report.max_energy_increase, row.total_energy - e_prev)
            if cfg.stop_tension > 0 and row.tension_norm1 + row.tension_norm2 <= cfg.stop_tension:
                report.converged = True
                break

    if episode is not None:
        report.dissipated += episode.dissipated
    last_row = report.series[-1]
    if last_row.tension_norm1 + last_row.tension_norm2 <= max(cfg.stop_tension, 1e-6):
        report.converged = True
    if not np.isfinite(report.max_bochner_ratio):
        report.max_bochner_ratio = 0.0
    report.final = state
    report.steps = step
    return report

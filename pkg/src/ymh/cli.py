"""Command line: ``ymh run``, ``ymh gauge-fix`` and ``ymh render``.

Exit codes: 0 success, 1 bad config / snapshot / arguments, 2 non-finite field.

``run`` writes into the configured output directory:

* ``series.csv``: one row per check, columns ``TIME_SERIES_COLUMNS``;
* ``events.txt``: one line per singular event (see ``EVENT_COLUMNS``);
* ``final.ymh`` and, with ``snapshot_every = k``, ``snap_NNNNNN.ymh`` every k checks;
* ``summary.txt``: dissipation totals and monitor constants;
* ``energy.png`` and ``density.png`` unless ``figures = false``.

All floats are printed with 17 significant digits.  YMH_THREADS caps the
FFT worker count (default 1); the compiled kernels are serial.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import TIME_SERIES_COLUMNS, quanta_bound
from .energy import curvature, density_field
from .fields import apply_gauge, holonomy
from .flow import NonFiniteField, run
from .gauge import coulomb_fix, is_pure_gauge
from .presets import build_preset
from .snapshot import BadSnapshot, atomic_write, read_snapshot, write_snapshot

EVENT_COLUMNS = (
    "time",
    "i",
    "j",
    "x1",
    "x2",
    "scale",
    "energy_before",
    "energy_after",
    "bubble_energy",
    "quanta",
    "start_time",
    "end_time",
)
FIELDS = ("density", "curvature", "moment")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def series_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIME_SERIES_COLUMNS)
    for row in series:
        w.writerow([fmt(v) for v in row.values()])
    return buf.getvalue()


def events_text(events, grid) -> str:
    lines = ["# " + " ".join(EVENT_COLUMNS)]
    for ev in events:
        i, j = ev.location
        quanta = round(ev.quanta) if np.isfinite(ev.alpha_M) else 0
        vals = (ev.time, i, j, i * grid.spacing, j * grid.spacing, ev.scale, ev.energy_before,
                ev.energy_after, ev.bubble_energy, int(quanta), ev.start_time, ev.end_time)
        lines.append(" ".join(fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def initial_state(cfg: RunConfig):
    if cfg.snapshot is not None:
        st = read_snapshot(cfg.snapshot)
        if st.grid != cfg.grid or st.fiber.kind != cfg.fiber.kind:
            raise BadSnapshot("snapshot grid or fiber does not match the config")
        return st.with_fields(time=0.0)
    params = dict(cfg.preset_params)
    params.setdefault("seed", cfg.seed)
    return build_preset(cfg.preset, cfg.grid, cfg.fiber, **params)


def cmd_run(config_path: str) -> int:
    cfg = load_config(config_path)
    state = initial_state(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    count = [0]

    def snapshots(st, row):
        if cfg.snapshot_every and count[0] % cfg.snapshot_every == 0:
            write_snapshot(out / f"snap_{count[0]:06d}.ymh", st)
        count[0] += 1

    try:
        rep = run(state, cfg.integrator, cfg.monitors, [snapshots])
    except NonFiniteField as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    atomic_write(out / "series.csv", series_csv(rep.series))
    atomic_write(out / "events.txt", events_text(rep.events, cfg.grid))
    write_snapshot(out / "final.ymh", rep.final)
    acc = rep.account()
    alpha = cfg.monitors.alpha(cfg.fiber.kind)
    summary = {
        "steps": rep.steps,
        "final_time": rep.final.time,
        "initial_energy": rep.initial_energy,
        "final_energy": acc.final_energy,
        "smooth_dissipation": rep.dissipated,
        "total_dissipation": rep.dissipated_total,
        "bubble_energy": acc.total_bubble_energy,
        "accounting_defect": acc.accounting_defect,
        "events": len(rep.events),
        "quanta": sum(acc.quanta),
        "quanta_bound": quanta_bound(rep.initial_energy, alpha),
        "converged": int(rep.converged),
        "false_alarms": rep.false_alarms,
        "local_energy_constant": rep.local_energy_constant,
        "max_bochner_ratio": rep.max_bochner_ratio,
        "max_curvature_residual": rep.max_curvature_residual,
    }
    atomic_write(out / "summary.txt", "".join(f"{k} = {fmt(v)}\n" for k, v in summary.items()))
    if cfg.figures:
        from .plotting import density_figure, energy_figure

        energy_figure(rep.series, rep.events, out / "energy.png")
        density_figure(rep.final, out / "density.png")
    print(f"wrote {out}: {rep.steps} steps, {len(rep.events)} events")
    return 0


def cmd_gauge_fix(src: str, dst: str) -> int:
    st = read_snapshot(src)
    h = st.grid.spacing
    res = coulomb_fix(st.a, st.grid)
    fixed = apply_gauge(res.transform, st)
    write_snapshot(dst, fixed)
    hol = holonomy(fixed.a, st.grid)
    pure = is_pure_gauge(st.a, st.grid)
    winding = " ".join(str(w) for w in pure.winding) if pure.is_pure else "none"
    report = (
        f"residual = {fmt(res.residual)}\n"
        f"holonomy = {fmt(hol[0])} {fmt(hol[1])}\n"
        f"harmonic = {fmt(res.harmonic_part[0])} {fmt(res.harmonic_part[1])}\n"
        f"curvature_change = {fmt(np.max(np.abs(curvature(fixed.a, h) - curvature(st.a, h))))}\n"
        f"pure_gauge = {int(pure.is_pure)}\n"
        f"winding = {winding}\n"
    )
    atomic_write(Path(str(dst) + ".txt"), report)
    sys.stdout.write(report)
    return 0


def field_values(state, which: str) -> np.ndarray:
    if which == "density":
        return density_field(state)
    if which == "curvature":
        return curvature(state.a, state.grid.spacing)
    return state.fiber.moment(state.phi)


def pgm_bytes(values: np.ndarray) -> bytes:
    """P5 graymap, min-max normalised; image row i is grid row i."""
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(values)
    rows, cols = values.shape
    return f"P5\n{cols} {rows}\n255\n".encode() + scaled.astype(np.uint8).tobytes()


def cmd_render(src: str, dst: str, which: str) -> int:
    if which not in FIELDS:
        raise ValueError(f"unknown field {which!r}; expected one of {', '.join(FIELDS)}")
    st = read_snapshot(src)
    atomic_write(dst, pgm_bytes(field_values(st, which)))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ymh", description="U(1) Yang-Mills-Higgs flow on the flat torus")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="integrate the flow described by a config file")
    r.add_argument("config")
    g = sub.add_parser("gauge-fix", help="Coulomb-fix a snapshot")
    g.add_argument("input")
    g.add_argument("output")
    v = sub.add_parser("render", help="render a snapshot field to a PGM image")
    v.add_argument("input")
    v.add_argument("output")
    v.add_argument("--field", default="density")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return cmd_run(args.config)
        if args.cmd == "gauge-fix":
            return cmd_gauge_fix(args.input, args.output)
        return cmd_render(args.input, args.output, args.field)
    except (ConfigError, BadSnapshot, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonFiniteField as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

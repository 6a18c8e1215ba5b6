"""Run configuration: flat ``key = value`` pairs grouped in ``[section]`` headers.

Example::

    [grid]
    n = 64
    length = 1.0

    [fiber]
    kind = sphere

    [integrator]
    dt = 5e-5
    scheme = euler
    max_time = 0.1

    [monitors]
    epsilon0 = 1.0
    check_every = 25

    [initial]
    preset = random-smooth
    amplitude = 0.5

    [run]
    seed = 7
    output_dir = out

Recognised keys are listed in ``SCHEMA``; anything else is an error.  In
``[initial]`` every key other than ``preset``/``snapshot`` is a preset
parameter.  Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import MonitorConfig
from .fiber import FiberModel
from .flow import IntegratorConfig
from .grid import GridSpec
from .presets import PRESETS


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line else f"{path or '<config>'}: "
        super().__init__(where + message)
        self.line = line


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _radii(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.replace(",", " ").split())


SCHEMA = {
    "grid": {"n": int, "length": float},
    "fiber": {"kind": str, "central_element": float},
    "integrator": {
        "dt": float,
        "scheme": str,
        "max_time": float,
        "cfl_safety": float,
        "adapt": _bool,
        "stop_tension": float,
    },
    "monitors": {"epsilon0": float, "ball_radii": _radii, "alpha_m": float, "check_every": int, "blowup_factor": float},
    "initial": None,  # open: preset parameters
    "run": {"seed": int, "output_dir": str, "snapshot_every": int, "figures": _bool},
}
PRESET_PARAMS = {"scale": float, "amplitude": float, "cutoff": int, "winding": int, "seed": int}


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    fiber: FiberModel
    integrator: IntegratorConfig
    monitors: MonitorConfig
    preset: str | None
    preset_params: dict = field(default_factory=dict)
    snapshot: Path | None = None
    seed: int = 0
    output_dir: Path = Path("out")
    # write a snapshot every this many checks (0: final only)
    snapshot_every: int = 0
    figures: bool = True


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            out[(section, None)] = no
        elif "=" in line and not line.startswith(("#", ";")):
            out[(section, line.split("=", 1)[0].strip().lower())] = no
    return out


def parse_config(text: str, path: str | Path | None = None) -> RunConfig:
    src = str(path) if path is not None else None
    base = Path(path).resolve().parent if path is not None else Path.cwd()
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=src or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if isinstance(exc, configparser.MissingSectionHeaderError):
            msg = "entry outside any [section]"
        elif isinstance(exc, configparser.DuplicateSectionError):
            msg = f"duplicate section [{exc.section}]"
        elif isinstance(exc, configparser.DuplicateOptionError):
            msg = f"duplicate key {exc.option!r} in [{exc.section}]"
        elif isinstance(exc, configparser.ParsingError):
            line = exc.errors[0][0]
            msg = "expected 'key = value' or '[section]'"
        else:
            msg = str(exc)
        raise ConfigError(msg, line, src) from None
    lines = _line_index(text)
    vals: dict = {}
    for sec in cp.sections():
        key = sec.lower()
        if key not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", lines.get((key, None)), src)
        schema = SCHEMA[key]
        vals[key] = {}
        for k, raw in cp.items(sec):
            conv = schema.get(k) if schema is not None else PRESET_PARAMS.get(k, str)
            if key == "initial" and k in ("preset", "snapshot"):
                conv = str
            if conv is None:
                raise ConfigError(f"unknown key {k!r} in [{sec}]", lines.get((key, k)), src)
            try:
                vals[key][k] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {k}: {exc}", lines.get((key, k)), src) from None

    def build(section, ctor, **kw):
        try:
            return ctor(**kw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{section}] {exc}", lines.get((section, None)), src) from None

    g = vals.get("grid", {})
    if "n" not in g:
        raise ConfigError("missing [grid] n", lines.get(("grid", None)), src)
    grid = build("grid", GridSpec, n=g["n"], length=g.get("length", 1.0))
    f = vals.get("fiber", {})
    fiber = build("fiber", FiberModel, kind=f.get("kind", "sphere"), central_element=f.get("central_element"))
    i = dict(vals.get("integrator", {}))
    if "dt" not in i:
        raise ConfigError("missing [integrator] dt", lines.get(("integrator", None)), src)
    integ = build("integrator", IntegratorConfig, **i)
    try:
        integ.check_stability(grid.spacing)
    except ValueError as exc:
        raise ConfigError(str(exc), lines.get(("integrator", "dt")), src) from None
    m = dict(vals.get("monitors", {}))
    if "alpha_m" in m:
        m["alpha_M"] = m.pop("alpha_m")
    mon = build("monitors", MonitorConfig, **m)
    try:
        mon.radii(grid)
    except ValueError as exc:
        raise ConfigError(str(exc), lines.get(("monitors", "ball_radii")), src) from None

    init = dict(vals.get("initial", {}))
    preset = init.pop("preset", None)
    snap = init.pop("snapshot", None)
    if (preset is None) == (snap is None):
        raise ConfigError("[initial] needs exactly one of 'preset' or 'snapshot'", lines.get(("initial", None)), src)
    snap_path = None
    if preset is not None and preset not in PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}", lines.get(("initial", "preset")), src
        )
    if snap is not None:
        snap_path = (base / snap).resolve()
        if not snap_path.is_file():
            raise ConfigError(f"snapshot {snap!r} not found", lines.get(("initial", "snapshot")), src)
    r = vals.get("run", {})
    return RunConfig(
        grid=grid,
        fiber=fiber,
        integrator=integ,
        monitors=mon,
        preset=preset,
        preset_params=init,
        snapshot=snap_path,
        seed=r.get("seed", 0),
        output_dir=(base / r.get("output_dir", "out")).resolve(),
        snapshot_every=r.get("snapshot_every", 0),
        figures=r.get("figures", True),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, path)

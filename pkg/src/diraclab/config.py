"""Sectioned key-value run configuration.

Layout (all sections optional except ``[model.0]`` and ``[ic]``)::

    [run]        name
    [grid]       x_min, x_max, dx
    [solver]     eps, dt, t_end, snapshot_stride, density_floor, u_floor
    [psi]        value | coeffs
    [model.N]    form = quadratic (r, g, theta) | polynomial (coeffs)
    [schedule]   segments = t0:model, t1:model, ... ; period
    [ic]         kind = box (b, c, mass) | gaussian (center, mass, eps_scaled)
                 | ground_state (g, center, mass, eps_scaled) | mixture (components)
    [ic.K]       one mixture component each, plus an optional weight
    [hj]         x0, M0, dt, t_end
    [sweep]      param, values, burn_in_periods, min_burn_in_time, extinct_below
    [classify]   margin
    [output]     dir

Lists are comma separated. Numbers are written with ``repr`` so a
serialized config parses back to identical floats.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

from .model import (
    Box,
    ConsumptionWeight,
    EnvironmentSchedule,
    Gaussian,
    GroundStateGaussian,
    GrowthModel,
    Mixture,
    ModelError,
    TraitGrid,
    sample_initial,
)
from .solver import SolverConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending section/field."""


@dataclass(frozen=True)
class HJSettings:
    x0: float = 0.0
    M0: float = 1.0
    dt: float = 1e-3
    t_end: float = 5.0


@dataclass(frozen=True)
class SweepSettings:
    param: str = "T"
    values: tuple[float, ...] = ()
    burn_in_periods: int = 10
    min_burn_in_time: float = 5.0
    extinct_below: float | None = None  # default: eps


@dataclass(frozen=True)
class RunConfig:
    name: str
    schedule: EnvironmentSchedule
    ic: object
    solver: SolverConfig
    hj: HJSettings = HJSettings()
    sweep: SweepSettings = SweepSettings()
    margin: float = 1e-6
    renormalize: bool = True
    out_dir: str | None = None

    @property
    def grid(self) -> TraitGrid:
        return self.solver.grid

    @property
    def model(self) -> GrowthModel:
        """Growth model active at ``t = 0``."""
        return self.schedule.model_at(0.0)

    def validate(self) -> None:
        for k, model in enumerate(self.schedule.models):
            try:
                self.solver.check_stable(model)
            except ValueError as exc:
                raise ConfigError(f"[model.{k}] {exc}") from None
        try:
            sample_initial(self.ic, self.grid, self.solver.eps)
        except ModelError as exc:
            raise ConfigError(f"[ic] {exc}") from None


# parsing ------------------------------------------------------------------

def _num(section, key, default=None, *, cast=float, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{section.name}] missing required field '{key}'")
        return default
    raw = section[key].strip()
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r}: expected {cast.__name__}") from None


def _floats(section, key, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{section.name}] missing required field '{key}'")
        return None
    raw = section[key]
    try:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r}: expected comma-separated numbers") from None


def _bool(section, key, default=False):
    if key not in section:
        return default
    try:
        return section.getboolean(key)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key}: expected true/false") from None


def _check_keys(section, allowed):
    extra = set(section.keys()) - set(allowed)
    if extra:
        raise ConfigError(f"[{section.name}] unknown field(s): {', '.join(sorted(extra))}")


def _model(section) -> GrowthModel:
    form = section.get("form", "polynomial").strip()
    if form == "quadratic":
        _check_keys(section, {"form", "r", "g", "theta"})
        return GrowthModel.quadratic(_num(section, "r", required=True),
                                     _num(section, "g", required=True),
                                     _num(section, "theta", 0.0))
    if form == "polynomial":
        _check_keys(section, {"form", "coeffs"})
        return GrowthModel.polynomial(_floats(section, "coeffs", required=True))
    raise ConfigError(f"[{section.name}] form = {form!r}: expected quadratic or polynomial")


def _ic(parser, name: str, allow_mixture=True):
    if name not in parser:
        raise ConfigError(f"missing section [{name}]")
    sec = parser[name]
    kind = sec.get("kind", "").strip()
    if kind == "box":
        _check_keys(sec, {"kind", "b", "c", "mass", "weight"})
        return Box(_num(sec, "b", required=True), _num(sec, "c", required=True),
                   _num(sec, "mass", required=True))
    if kind == "gaussian":
        _check_keys(sec, {"kind", "center", "mass", "eps_scaled", "weight"})
        return Gaussian(_num(sec, "center", required=True), _num(sec, "mass", required=True),
                        _bool(sec, "eps_scaled"))
    if kind == "ground_state":
        _check_keys(sec, {"kind", "g", "center", "mass", "eps_scaled", "weight"})
        return GroundStateGaussian(_num(sec, "g", required=True), _num(sec, "center", 0.0),
                                   _num(sec, "mass", required=True), _bool(sec, "eps_scaled"))
    if kind == "mixture" and allow_mixture:
        _check_keys(sec, {"kind", "components"})
        count = _num(sec, "components", cast=int, required=True)
        parts, weights = [], []
        for k in range(count):
            parts.append(_ic(parser, f"{name}.{k}", allow_mixture=False))
            weights.append(_num(parser[f"{name}.{k}"], "weight", 1.0))
        weights = tuple(weights) if any(w != 1.0 for w in weights) else None
        return Mixture(tuple(parts), weights)
    raise ConfigError(f"[{name}] kind = {kind!r}: expected box, gaussian, ground_state or mixture")


def _segments(sec):
    raw = sec.get("segments", "0:0")
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            start, k = item.split(":")
            out.append((float(start), int(k)))
        except ValueError:
            raise ConfigError(f"[schedule] segments: bad entry {item!r}, expected t:model") from None
    return tuple(out)


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    """Apply ``section.key=value`` strings; the key is the text after the last dot."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        path, value = item.split("=", 1)
        section, _, key = path.strip().rpartition(".")
        if not section or not key:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser[section][key] = value.strip()


def parse_config(text: str, overrides=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    apply_overrides(parser, overrides)
    try:
        return _from_parser(parser)
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


def _from_parser(parser) -> RunConfig:
    known = {"run", "grid", "solver", "psi", "schedule", "ic", "hj", "sweep", "classify", "output"}
    for name in parser.sections():
        if name in known or name.startswith("model.") or name.startswith("ic."):
            continue
        raise ConfigError(f"unknown section [{name}]")

    def sec(name):
        return parser[name] if parser.has_section(name) else parser[parser.default_section]

    g = sec("grid")
    _check_keys(g, {"x_min", "x_max", "dx"})
    try:
        grid = TraitGrid.from_spacing(_num(g, "x_min", -3.0), _num(g, "x_max", 3.0),
                                      _num(g, "dx", 1e-3))
    except ModelError as exc:
        raise ConfigError(f"[grid] {exc}") from None

    p = sec("psi")
    _check_keys(p, {"value", "coeffs"})
    coeffs = _floats(p, "coeffs")
    try:
        psi = ConsumptionWeight(_num(p, "value", 1.0), coeffs)
        psi.on_grid(grid)
    except ModelError as exc:
        raise ConfigError(f"[psi] {exc}") from None

    s = sec("solver")
    _check_keys(s, {"eps", "dt", "t_end", "snapshot_stride", "density_floor", "u_floor"})
    try:
        solver = SolverConfig(
            grid=grid, eps=_num(s, "eps", 1e-3), dt=_num(s, "dt", 1e-4),
            t_end=_num(s, "t_end", 10.0), psi=psi,
            snapshot_stride=_num(s, "snapshot_stride", 0, cast=int),
            density_floor=_num(s, "density_floor", 0.0), u_floor=_num(s, "u_floor", -2.0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[solver] {exc}") from None

    model_ids = sorted(int(name.split(".", 1)[1]) for name in parser.sections()
                       if name.startswith("model.") and name.split(".", 1)[1].isdigit())
    if not model_ids:
        raise ConfigError("missing section [model.0]")
    if model_ids != list(range(len(model_ids))):
        raise ConfigError("model sections must be numbered model.0, model.1, ... without gaps")
    models = []
    for k in model_ids:
        try:
            models.append(_model(parser[f"model.{k}"]))
        except ModelError as exc:
            raise ConfigError(f"[model.{k}] {exc}") from None

    sch = sec("schedule")
    _check_keys(sch, {"segments", "period"})
    try:
        schedule = EnvironmentSchedule(tuple(models), _segments(sch), _num(sch, "period"))
    except ModelError as exc:
        raise ConfigError(f"[schedule] {exc}") from None

    try:
        ic = _ic(parser, "ic")
    except ModelError as exc:
        raise ConfigError(f"[ic] {exc}") from None

    h = sec("hj")
    _check_keys(h, {"x0", "M0", "dt", "t_end"})
    hj = HJSettings(_num(h, "x0", 0.0), _num(h, "M0", 1.0), _num(h, "dt", 1e-3),
                    _num(h, "t_end", 5.0))
    if not (hj.M0 > 0 and hj.dt > 0 and hj.t_end >= 0):
        raise ConfigError("[hj] need M0 > 0, dt > 0 and t_end >= 0")

    w = sec("sweep")
    _check_keys(w, {"param", "values", "burn_in_periods", "min_burn_in_time", "extinct_below"})
    sweep = SweepSettings(w.get("param", "T").strip(), _floats(w, "values") or (),
                          _num(w, "burn_in_periods", 10, cast=int),
                          _num(w, "min_burn_in_time", 5.0), _num(w, "extinct_below"))
    if sweep.param != "T":
        raise ConfigError(f"[sweep] param = {sweep.param!r}: only the period T can be swept")
    if any(v <= 0 for v in sweep.values):
        raise ConfigError("[sweep] values must be positive periods")

    c = sec("classify")
    _check_keys(c, {"margin"})
    margin = _num(c, "margin", 1e-6)
    if not margin > 0:
        raise ConfigError("[classify] margin must be positive")

    r = sec("run")
    _check_keys(r, {"name", "renormalize"})
    o = sec("output")
    _check_keys(o, {"dir"})
    cfg = RunConfig(name=r.get("name", "run").strip(), schedule=schedule, ic=ic, solver=solver,
                    hj=hj, sweep=sweep, margin=margin, renormalize=_bool(r, "renormalize", True),
                    out_dir=o.get("dir"))
    cfg.validate()
    return cfg


# serialization ------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_list(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def _ic_lines(ic) -> list[str]:
    if isinstance(ic, Box):
        return ["kind = box", f"b = {ic.b!r}", f"c = {ic.c!r}", f"mass = {ic.mass!r}"]
    if isinstance(ic, Gaussian):
        return ["kind = gaussian", f"center = {ic.center!r}", f"mass = {ic.mass!r}",
                f"eps_scaled = {_fmt(ic.eps_scaled)}"]
    if isinstance(ic, GroundStateGaussian):
        return ["kind = ground_state", f"g = {ic.g!r}", f"center = {ic.center!r}",
                f"mass = {ic.mass!r}", f"eps_scaled = {_fmt(ic.eps_scaled)}"]
    raise ConfigError(f"cannot serialize initial condition {ic!r}")


def to_text(cfg: RunConfig) -> str:
    s = cfg.solver
    lines = ["[run]", f"name = {cfg.name}", f"renormalize = {_fmt(cfg.renormalize)}", "",
             "[grid]", f"x_min = {s.grid.x_min!r}", f"x_max = {s.grid.x_max!r}",
             f"dx = {s.grid.dx!r}", "",
             "[solver]", f"eps = {s.eps!r}", f"dt = {s.dt!r}", f"t_end = {float(s.t_end)!r}",
             f"snapshot_stride = {s.snapshot_stride}", f"density_floor = {float(s.density_floor)!r}",
             f"u_floor = {float(s.u_floor)!r}", "", "[psi]"]
    if s.psi.coeffs is None:
        lines.append(f"value = {float(s.psi.value)!r}")
    else:
        lines.append(f"coeffs = {_fmt_list(s.psi.coeffs)}")
    lines.append("")
    for k, model in enumerate(cfg.schedule.models):
        lines.append(f"[model.{k}]")
        if model.form == "quadratic":
            lines += ["form = quadratic", f"r = {model.r!r}", f"g = {model.g!r}",
                      f"theta = {model.theta!r}"]
        else:
            lines += ["form = polynomial", f"coeffs = {_fmt_list(model.coeffs)}"]
        lines.append("")
    segs = ", ".join(f"{float(t)!r}:{k}" for t, k in cfg.schedule.segments)
    lines += ["[schedule]", f"segments = {segs}"]
    if cfg.schedule.period is not None:
        lines.append(f"period = {float(cfg.schedule.period)!r}")
    lines.append("")
    if isinstance(cfg.ic, Mixture):
        lines += ["[ic]", "kind = mixture", f"components = {len(cfg.ic.components)}", ""]
        for k, (w, comp) in enumerate(cfg.ic.weighted()):
            lines += [f"[ic.{k}]", *_ic_lines(comp), f"weight = {float(w)!r}", ""]
    else:
        lines += ["[ic]", *_ic_lines(cfg.ic), ""]
    h = cfg.hj
    lines += ["[hj]", f"x0 = {float(h.x0)!r}", f"M0 = {float(h.M0)!r}", f"dt = {float(h.dt)!r}",
              f"t_end = {float(h.t_end)!r}", ""]
    w = cfg.sweep
    lines += ["[sweep]", f"param = {w.param}", f"values = {_fmt_list(w.values)}",
              f"burn_in_periods = {w.burn_in_periods}",
              f"min_burn_in_time = {float(w.min_burn_in_time)!r}"]
    if w.extinct_below is not None:
        lines.append(f"extinct_below = {float(w.extinct_below)!r}")
    lines += ["", "[classify]", f"margin = {float(cfg.margin)!r}", ""]
    if cfg.out_dir:
        lines += ["[output]", f"dir = {cfg.out_dir}", ""]
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Re-parse ``cfg`` with ``section.key=value`` overrides applied."""
    if not overrides:
        return cfg
    return parse_config(to_text(cfg), overrides)


__all__ = [
    "ConfigError", "HJSettings", "RunConfig", "SweepSettings", "apply_overrides",
    "load_config", "parse_config", "to_text", "with_overrides",
]

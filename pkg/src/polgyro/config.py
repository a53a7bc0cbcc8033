"""Run configurations: YAML text <-> nested dataclasses <-> simulation objects.

A config file has the sections ``grid``, ``units``, ``params``,
``landscape`` (``potential`` and ``pump``, each a ``kind`` plus parameters),
``seed``, ``solver``, ``analysis`` and ``output``.  Every field has a default,
so an empty file is a valid (if dull) run.  Validation errors name the
offending field path and, when the config came from a file, its line.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from polgyro.field import Boundary, ComplexField, GridSpec, SimParams, UnitSystem, read_snapshot
from polgyro.landscape import (
    DisorderSpec,
    Landscape,
    potential_disorder,
    potential_flat,
    potential_kagome,
    potential_mexican_hat,
    potential_periodic_1d,
    pump_gaussian,
    pump_periodic,
    pump_ring,
    pump_uniform,
)
from polgyro.oam import LGParams, ModeSpec, sample_superposition
from polgyro.solver import (
    TAYLOR_ORDERS,
    Scheme,
    SolverConfig,
    seed_momentum_mixture,
    seed_ring_superposition,
    seed_vortex_superposition,
    stable_dt,
)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted field path, ``line`` 1-based if known."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or "<config>"
        if line is not None:
            where = f"line {line}: {where}"
        super().__init__(f"{where}: {message}")


# Parameter names and defaults for each component kind.
POTENTIAL_KINDS = {
    "flat": {},
    "disorder": {"rms": 0.5, "corr_len": 2.0, "seed": 0},
    "mexican_hat": {"V0": 1.0, "r_min": 5.0},
    "kagome": {"V0": 1.0, "k0": 6.0, "p_param": 1.5},
    "periodic_1d": {"V0": 1.0, "k0": 2 * np.pi / 10},
}
PUMP_KINDS = {
    "gaussian": {"P0": 2.0, "r0": 5.35},
    "uniform": {"P0": 2.0},
    "periodic": {"P0": 2.0, "k0": 2 * np.pi / 10},
    "ring": {"P0": 2.0, "l": 1, "V0": 1.0, "r_min": 5.0},
}
SEED_KINDS = {
    "vortex_superposition": {"l": 1, "w0": 3.0},
    "ring_superposition": {"l": 1, "V0": 1.0, "r_min": 5.0},
    "momentum_mixture": {"components": [{"k": [0.0, 0.0], "amp": 1.0}]},
    "uniform": {"re": 1.0, "im": 0.0},
    "lg_modes": {"w0": 3.0, "z": 0.0, "modes": [{"l": 1, "p": 0, "re": 1.0, "im": 0.0}]},
    "snapshot": {"path": ""},
}
OBSERVERS = ("norm", "peak_density", "lobes", "momentum")


@dataclass
class GridSection:
    nx: int = 256
    ny: int = 256
    lx: float = 32.0
    ly: float = 32.0
    boundary: str = "dirichlet"


@dataclass
class UnitsSection:
    kind: str = "dimensionless"
    length_scale: float = 1e-6
    mass_ratio: float = 1e-4


@dataclass
class ParamsSection:
    g: float = 1.0
    gamma: float = 1.0
    eta: float = 1.0


@dataclass
class Component:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class LandscapeSection:
    potential: Component = field(default_factory=lambda: Component("flat"))
    pump: Component = field(default_factory=lambda: Component("gaussian", dict(PUMP_KINDS["gaussian"])))


@dataclass
class SolverSection:
    scheme: str = "rk4-fd4"
    dt: float | None = None
    safety: float = 0.8
    t_end: float = 10.0
    snapshot_every: int = 200
    taylor_order: int = 4
    allow_unstable_dt: bool = False


@dataclass
class AnalysisSection:
    observers: list = field(default_factory=lambda: ["norm", "peak_density", "lobes"])
    nbins: int = 360
    lobe_radius: float | None = None  # None: radius of the densest ring
    steady_eps: float = 1e-3
    steady_window: float = 2.0
    steady_channel: str = "peak_density"
    momentum_targets: dict = field(default_factory=dict)  # name -> [kx, ky]


@dataclass
class OutputSection:
    dir: str = "out"
    snapshots: bool = True
    heatmaps: bool = True


@dataclass
class RunConfig:
    name: str = "custom"
    grid: GridSection = field(default_factory=GridSection)
    units: UnitsSection = field(default_factory=UnitsSection)
    params: ParamsSection = field(default_factory=ParamsSection)
    landscape: LandscapeSection = field(default_factory=LandscapeSection)
    seed: Component = field(default_factory=lambda: Component("vortex_superposition",
                                                              dict(SEED_KINDS["vortex_superposition"])))
    solver: SolverSection = field(default_factory=SolverSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    # ------------------------------------------------------------ serialization

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_dict(cls, data: dict | None, lines: dict | None = None) -> "RunConfig":
        cfg = _build(cls, data or {}, "", lines or {})
        cfg.validate(lines or {})
        _fill_defaults(cfg)
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        data, lines = _load_with_lines(text)
        return cls.from_dict(data, lines)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_yaml(text)

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())

    # ------------------------------------------------------------ validation

    def validate(self, lines: dict | None = None) -> None:
        """Construct every runtime object once so bad values surface as ConfigError."""
        lines = lines or {}

        def check(path, fn):
            try:
                return fn()
            except ConfigError:
                raise
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError(str(exc), path, _line_for(lines, path)) from None

        for path, ok, msg in self._field_rules():
            if not ok:
                raise ConfigError(msg, path, _line_for(lines, path))
        check("grid", self.grid_spec)
        check("units", self.unit_system)
        check("params", self.sim_params)
        _check_component(self.landscape.potential, POTENTIAL_KINDS, "landscape.potential", lines)
        _check_component(self.landscape.pump, PUMP_KINDS, "landscape.pump", lines)
        _check_component(self.seed, SEED_KINDS, "seed", lines)
        check("solver", self.solver_config)
        a = self.analysis
        for i, name in enumerate(a.observers):
            if name not in OBSERVERS:
                raise ConfigError(f"unknown observer {name!r}; choose from {list(OBSERVERS)}",
                                  f"analysis.observers.{i}", _line_for(lines, f"analysis.observers.{i}"))
        if a.nbins < 8:
            raise ConfigError("need at least 8 bins", "analysis.nbins", _line_for(lines, "analysis.nbins"))
        if not (a.steady_eps > 0 and a.steady_window > 0):
            raise ConfigError("steady-state eps and window must be positive", "analysis",
                              _line_for(lines, "analysis"))
        for name, k in a.momentum_targets.items():
            path = f"analysis.momentum_targets.{name}"
            if np.ndim(k) != 1 or len(k) != 2:
                raise ConfigError("momentum target must be [kx, ky]", path, _line_for(lines, path))
        grid = self.grid_spec()
        land = check("landscape", lambda: self.build_landscape(grid))
        check("landscape.pump", lambda: land.sample_pump(grid))
        check("landscape.potential", lambda: land.sample_potential(grid))
        s = self.solver
        if s.dt is not None and not s.allow_unstable_dt:
            bound = stable_dt(grid, self.sim_params(), land, 1.0, s.scheme, s.taylor_order)
            if s.dt > bound:
                raise ConfigError(f"dt={s.dt:.4g} exceeds the explicit stability bound {bound:.4g} "
                                  "(set solver.allow_unstable_dt to force it)", "solver.dt",
                                  _line_for(lines, "solver.dt"))

    def _field_rules(self):
        g, u, p, s = self.grid, self.units, self.params, self.solver
        schemes = [m.value for m in Scheme]
        yield "grid.nx", g.nx >= 8, f"need at least 8 points, got {g.nx}"
        yield "grid.ny", g.ny >= 8, f"need at least 8 points, got {g.ny}"
        yield "grid.lx", g.lx > 0, f"domain length must be positive, got {g.lx}"
        yield "grid.ly", g.ly > 0, f"domain length must be positive, got {g.ly}"
        yield ("grid.boundary", _parses(Boundary.parse, g.boundary),
               f"unknown boundary {g.boundary!r}; expected 'periodic' or 'dirichlet'")
        yield "units.kind", u.kind in ("dimensionless", "mev"), f"unknown unit system {u.kind!r}"
        yield "units.length_scale", u.length_scale > 0, "must be positive"
        yield "units.mass_ratio", u.mass_ratio > 0, "must be positive"
        yield "params.g", bool(np.isfinite(p.g)), f"must be finite, got {p.g}"
        yield "params.gamma", p.gamma >= 0, f"must be non-negative, got {p.gamma}"
        yield "params.eta", p.eta >= 0, f"must be non-negative, got {p.eta}"
        yield "solver.scheme", _parses(Scheme.parse, s.scheme), f"unknown scheme {s.scheme!r}; expected one of {schemes}"
        yield "solver.taylor_order", s.taylor_order in TAYLOR_ORDERS, f"must be one of {TAYLOR_ORDERS}"
        yield "solver.dt", s.dt is None or s.dt > 0, f"must be positive, got {s.dt}"
        yield "solver.safety", 0 < s.safety <= 1, f"must lie in (0, 1], got {s.safety}"
        yield "solver.t_end", s.t_end >= 0, f"must be non-negative, got {s.t_end}"
        yield "solver.snapshot_every", s.snapshot_every >= 1, f"must be at least 1, got {s.snapshot_every}"

    # ------------------------------------------------------------ builders

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(g.nx, g.ny, g.lx, g.ly, Boundary.parse(g.boundary))

    def unit_system(self) -> UnitSystem:
        u = self.units
        return UnitSystem(u.kind, u.length_scale, u.mass_ratio)

    def sim_params(self) -> SimParams:
        p = self.params
        return SimParams(p.g, p.gamma, p.eta, self.unit_system())

    def solver_config(self) -> SolverConfig:
        s = self.solver
        if s.taylor_order not in TAYLOR_ORDERS:
            raise ValueError(f"taylor_order must be one of {TAYLOR_ORDERS}")
        return SolverConfig(dt=s.dt, scheme=Scheme.parse(s.scheme), safety=s.safety, t_end=s.t_end,
                            snapshot_every=s.snapshot_every, taylor_order=s.taylor_order,
                            allow_unstable_dt=s.allow_unstable_dt)

    def build_landscape(self, grid: GridSpec | None = None) -> Landscape:
        grid = grid or self.grid_spec()
        pot, pump = self.landscape.potential, self.landscape.pump
        pv = {**POTENTIAL_KINDS[pot.kind], **pot.params}
        pp = {**PUMP_KINDS[pump.kind], **pump.params}
        if pot.kind == "flat":
            V = potential_flat()
        elif pot.kind == "disorder":
            V = potential_disorder(DisorderSpec(pv["rms"], pv["corr_len"], int(pv["seed"])), grid)
        elif pot.kind == "mexican_hat":
            V = potential_mexican_hat(pv["V0"], pv["r_min"])
        elif pot.kind == "kagome":
            V = potential_kagome(pv["V0"], pv["k0"], pv["p_param"])
        else:
            V = potential_periodic_1d(pv["V0"], pv["k0"], grid)
        if pump.kind == "gaussian":
            P = pump_gaussian(pp["P0"], pp["r0"])
        elif pump.kind == "uniform":
            P = pump_uniform(pp["P0"])
        elif pump.kind == "periodic":
            P = pump_periodic(pp["P0"], pp["k0"], self.params.eta, self.params.gamma, grid)
        else:
            P = pump_ring(pp["P0"], int(pp["l"]), pp["V0"], pp["r_min"])
        return Landscape(V, P, {"potential": pot.kind, "pump": pump.kind})

    def build_seed(self, grid: GridSpec, landscape: Landscape, params: SimParams) -> ComplexField:
        s = {**SEED_KINDS[self.seed.kind], **self.seed.params}
        kind = self.seed.kind
        if kind == "vortex_superposition":
            return seed_vortex_superposition(int(s["l"]), grid, landscape, params, LGParams.from_waist(s["w0"]))
        if kind == "ring_superposition":
            return seed_ring_superposition(int(s["l"]), s["V0"], s["r_min"], grid)
        if kind == "momentum_mixture":
            xi = {}
            for c in s["components"]:
                k = tuple(float(v) for v in np.atleast_1d(c["k"]))
                k = k if len(k) == 2 else (k[0], 0.0)
                xi[k] = xi.get(k, 0) + complex(c.get("amp", 1.0))
            return seed_momentum_mixture(xi, grid)
        if kind == "uniform":
            return ComplexField(grid, np.full(grid.shape, complex(s["re"], s["im"])))
        if kind == "lg_modes":
            spec = ModeSpec.from_config(s["modes"])
            return sample_superposition(spec, LGParams.from_waist(s["w0"]), s["z"], grid)
        f = read_snapshot(s["path"])
        if f.grid.shape != grid.shape:
            raise ValueError(f"snapshot grid {f.grid.shape} does not match config grid {grid.shape}")
        return ComplexField(grid, f.values)


# ---------------------------------------------------------------- helpers


def _plain(obj):
    """Turn numpy scalars and tuples into plain YAML-safe Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _load_with_lines(text: str) -> tuple[Any, dict]:
    """Parse YAML and record the source line of every mapping key / list item."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    lines: dict[str, int] = {}

    def walk(n, path):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(n, yaml.SequenceNode):
            for i, v in enumerate(n.value):
                p = f"{path}.{i}"
                lines[p] = v.start_mark.line + 1
                walk(v, p)

    if node is not None:
        walk(node, "")
    return data, lines


def _line_for(lines: dict, path: str) -> int | None:
    while path:
        if path in lines:
            return lines[path]
        path = path.rpartition(".")[0]
    return None


_SCALAR_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(value, annotation: str, path: str, lines: dict):
    ann = annotation.replace(" ", "")
    optional = ann.endswith("|None")
    base = ann.removesuffix("|None")
    if value is None:
        if optional:
            return None
        raise ConfigError("value may not be null", path, _line_for(lines, path))
    if base in ("dict", "list"):
        want = dict if base == "dict" else list
        if not isinstance(value, want):
            raise ConfigError(f"expected a {base}, got {type(value).__name__}", path, _line_for(lines, path))
        return copy.deepcopy(value)
    typ = _SCALAR_TYPES[base]
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path, _line_for(lines, path))
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", path, _line_for(lines, path))
        return int(value)
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path, _line_for(lines, path))
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"expected text, got {value!r}", path, _line_for(lines, path))
    return value


def _parses(parse, value) -> bool:
    try:
        parse(value)
    except ValueError:
        return False
    return True


def _build(cls, data, path: str, lines: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping, got {type(data).__name__}", path, _line_for(lines, path))
    names = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in names:
            p = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown field; expected one of {sorted(names)}", p, _line_for(lines, p))
    kwargs = {}
    for name, f in names.items():
        if name not in data:
            continue
        p = f"{path}.{name}" if path else name
        value = data[name]
        sub = _SECTIONS.get(f.type)
        if f.type == "Component":
            kwargs[name] = _build_component(value, p, lines)
        elif sub is not None:
            kwargs[name] = _build(sub, value, p, lines)
        else:
            kwargs[name] = _coerce(value, f.type, p, lines)
    return cls(**kwargs)


def _build_component(data, path: str, lines: dict) -> Component:
    if isinstance(data, str):
        return Component(data, {})
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("expected a mapping with a 'kind'", path, _line_for(lines, path))
    kind = data["kind"]
    params = {k: copy.deepcopy(v) for k, v in data.items() if k not in ("kind", "params")}
    nested = data.get("params")
    if isinstance(nested, dict):
        params.update(copy.deepcopy(nested))
    elif nested is not None:
        raise ConfigError("'params' must be a mapping", f"{path}.params", _line_for(lines, f"{path}.params"))
    return Component(str(kind), params)


def _fill_defaults(cfg: RunConfig) -> None:
    """Write every component's default parameters into the config explicitly."""
    for comp, table in ((cfg.landscape.potential, POTENTIAL_KINDS), (cfg.landscape.pump, PUMP_KINDS),
                        (cfg.seed, SEED_KINDS)):
        comp.params = {**copy.deepcopy(table[comp.kind]), **comp.params}


def _check_component(comp: Component, table: dict, path: str, lines: dict) -> None:
    if comp.kind not in table:
        raise ConfigError(f"unknown kind {comp.kind!r}; choose from {sorted(table)}", f"{path}.kind",
                          _line_for(lines, f"{path}.kind"))
    allowed = table[comp.kind]
    for key, value in comp.params.items():
        p = f"{path}.params.{key}"
        line = _line_for(lines, p) or _line_for(lines, f"{path}.{key}")
        if key not in allowed:
            raise ConfigError(f"unknown parameter for {comp.kind!r}; expected one of {sorted(allowed)}", p, line)
        default = allowed[key]
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
                raise ConfigError(f"expected a finite number, got {value!r}", p, line)
            if isinstance(default, int) and int(value) != value:
                raise ConfigError(f"expected an integer, got {value!r}", p, line)


_SECTIONS = {
    "GridSection": GridSection,
    "UnitsSection": UnitsSection,
    "ParamsSection": ParamsSection,
    "LandscapeSection": LandscapeSection,
    "SolverSection": SolverSection,
    "AnalysisSection": AnalysisSection,
    "OutputSection": OutputSection,
}


def set_path(data: dict, path: str, value) -> None:
    """Set ``a.b.c = value`` inside nested dicts, creating sections as needed.

    Inside a component (``landscape.potential``, ``landscape.pump``, ``seed``)
    a bare parameter name goes under ``params`` when the component is in
    nested form.
    """
    parts = path.split(".")
    if not all(parts):
        raise ConfigError("malformed override path", path)
    node = data
    for i, key in enumerate(parts[:-1]):
        here = ".".join(parts[: i + 1])
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"'{here}' is not a section", path)
        node = nxt
    leaf = parts[-1]
    parent = ".".join(parts[:-1])
    if parent in ("landscape.potential", "landscape.pump", "seed") and leaf not in ("kind", "params"):
        if isinstance(node.get("params"), dict):
            node = node["params"]
    node[leaf] = value


def merge_dicts(base: dict, *patches: dict) -> dict:
    """Recursive merge; a patch value carrying a ``kind`` replaces the whole component."""
    out = copy.deepcopy(base)
    for patch in patches:
        for key, value in patch.items():
            if isinstance(value, dict) and isinstance(out.get(key), dict) and "kind" not in value:
                out[key] = merge_dicts(out[key], value)
            else:
                out[key] = copy.deepcopy(value)
    return out


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` strings; values are parsed as YAML scalars or lists."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}", key.strip()) from None
        set_path(data, key.strip(), value)
    return data

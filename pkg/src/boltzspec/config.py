"""Flat ``section.key = value`` run configuration with validation and canonical dump."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

AUTO = "auto"


@dataclass
class KernelConfig:
    d: int = 2
    gamma: float = 0.0
    C_gamma: float = 1.0
    L: float = math.pi
    R: float = math.sqrt(2.0) * math.pi


@dataclass
class DiscretizationConfig:
    N: int = 8
    method: str = "classical"  # classical | fast; default by N when absent
    M: int = 64
    n_phys: object = AUTO


@dataclass
class QuadratureConfig:
    radial: object = AUTO
    angular: object = AUTO
    tol: float = 1e-8
    max_doublings: int = 5


@dataclass
class TimeConfig:
    dt: object = AUTO
    cfl_safety: float = 0.5
    t_end: float = 0.05
    scheme: str = "rk4"
    force: bool = False


@dataclass
class InitialConfig:
    mass: float = 1.0
    bumps: list = field(default_factory=lambda: [[1.0, [-0.6, 0.15], 0.08],
                                                 [0.6, [0.7, -0.2], 0.05]])


@dataclass
class OutputConfig:
    dir: str = "out"
    csv: str = "diagnostics.csv"
    snapshot_times: list = field(default_factory=list)
    cache_dir: str = "cache"
    auto_precompute: bool = True


@dataclass
class DiagnosticsConfig:
    cadence: int = 10
    entropy_every: int = 0


@dataclass
class BudgetConfig:
    table_entries: object = AUTO
    physical_oracle: float = 5e8


@dataclass
class ConsistencyConfig:
    N_ref: int = 64
    Ns: list = field(default_factory=lambda: [4, 8, 16, 32])
    p: list = field(default_factory=lambda: [0, 1, 2])
    temperature: float = 0.1


@dataclass
class SpreadingConfig:
    radii: list = field(default_factory=lambda: [0.3, 0.6])  # in units of L
    two_pass: bool = False


@dataclass
class OracleConfig:
    N: int = 4
    M: int = 128


@dataclass
class Config:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    discretization: DiscretizationConfig = field(default_factory=DiscretizationConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    consistency: ConsistencyConfig = field(default_factory=ConsistencyConfig)
    spreading: SpreadingConfig = field(default_factory=SpreadingConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)


SECTIONS = [f.name for f in fields(Config)]


def parse_value(text: str):
    """int, float, bool, JSON list, or bare string."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if t.startswith("["):
        try:
            return json.loads(t)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed list {t!r}: {exc.msg}") from None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    if len(t) >= 2 and t[0] == t[-1] == '"':
        return t[1:-1]
    return t


def _coerce(key: str, default, value):
    kind = type(default)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a JSON list, got {value!r}")
        return value
    if default == AUTO:
        if value == AUTO:
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number or 'auto', got {value!r}")
        return value
    if kind is str:
        return str(value)
    return value


def parse_text(text: str, source: str = "<config>") -> Config:
    cfg = Config()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key}")
        seen.add(key)
        sect, _, name = key.partition(".")
        if sect not in SECTIONS or not name:
            raise ConfigError(f"{source}:{lineno}: unknown key {key}")
        sub = getattr(cfg, sect)
        if name not in {f.name for f in fields(sub)}:
            raise ConfigError(f"{source}:{lineno}: unknown key {key}")
        try:
            parsed = parse_value(val)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        setattr(sub, name, _coerce(key, getattr(type(sub)(), name), parsed))
    if "discretization.method" not in seen:
        cfg.discretization.method = default_method(cfg.discretization.N)
    validate(cfg)
    return cfg


def parse_config(path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    return parse_text(path.read_text(), str(path))


def default_method(N: int) -> str:
    return "classical" if N <= 8 else "fast"


def validate(cfg: Config):
    k = cfg.kernel
    if k.d not in (2, 3):
        raise ConfigError(f"kernel.d: d={k.d} not supported (2 or 3)")
    if not 0.0 <= k.gamma <= 1.0:
        raise ConfigError(f"kernel.gamma: {k.gamma} outside [0, 1]")
    if not k.C_gamma > 0:
        raise ConfigError("kernel.C_gamma: must be positive")
    if not (k.L > 0 and k.R > 0):
        raise ConfigError("kernel.L, kernel.R: must be positive")
    if k.R < math.sqrt(2.0) * k.L * (1 - 1e-14):
        raise ConfigError(f"kernel.R: R < sqrt(2)*L violates dealiasing (R={k.R}, L={k.L})")
    dz = cfg.discretization
    if dz.N < 1:
        raise ConfigError("discretization.N: must be >= 1")
    if dz.method not in ("classical", "fast"):
        raise ConfigError(f"discretization.method: {dz.method!r} is not classical|fast")
    if dz.method == "fast":
        if k.d != 2 or k.gamma != k.d - 2:
            raise ConfigError("discretization.method: fast path needs d=2 and gamma=0")
        if dz.M < 1:
            raise ConfigError("discretization.M: must be >= 1")
    if dz.n_phys != AUTO and (not isinstance(dz.n_phys, int) or dz.n_phys < 2 * dz.N + 1):
        raise ConfigError(f"discretization.n_phys: must be an integer >= 2N+1 = {2 * dz.N + 1}")
    q = cfg.quadrature
    for name in ("radial", "angular"):
        v = getattr(q, name)
        if v != AUTO and (not isinstance(v, int) or v < 2):
            raise ConfigError(f"quadrature.{name}: must be an integer >= 2 or auto")
    if q.angular != AUTO and q.angular % 2:
        raise ConfigError("quadrature.angular: must be even")
    if not q.tol > 0:
        raise ConfigError("quadrature.tol: must be positive")
    t = cfg.time
    if t.dt != AUTO and not t.dt > 0:
        raise ConfigError("time.dt: must be positive or auto")
    if not t.cfl_safety > 0:
        raise ConfigError("time.cfl_safety: must be positive")
    if t.t_end < 0:
        raise ConfigError("time.t_end: must be non-negative")
    if t.scheme not in ("euler", "rk2", "rk4"):
        raise ConfigError(f"time.scheme: {t.scheme!r} is not euler|rk2|rk4")
    ini = cfg.initial
    if not ini.mass > 0:
        raise ConfigError("initial.mass: must be positive")
    if not ini.bumps:
        raise ConfigError("initial.bumps: need at least one bump")
    for b in ini.bumps:
        ok = (isinstance(b, list) and len(b) == 3 and isinstance(b[1], list)
              and len(b[1]) == k.d and b[0] > 0 and b[2] > 0)
        if not ok:
            raise ConfigError(f"initial.bumps: entry {b!r} is not [weight>0, [u1..u{k.d}], T>0]")
    if cfg.diagnostics.cadence < 1:
        raise ConfigError("diagnostics.cadence: must be >= 1")
    if cfg.diagnostics.entropy_every < 0:
        raise ConfigError("diagnostics.entropy_every: must be >= 0")
    if cfg.consistency.N_ref < 2 * max(cfg.consistency.Ns):
        raise ConfigError("consistency.N_ref: must be at least twice the largest N")
    for r in cfg.spreading.radii:
        if not r > 0:
            raise ConfigError("spreading.radii: radii must be positive")
    if cfg.oracle.N < 1 or cfg.oracle.M < 1:
        raise ConfigError("oracle.N, oracle.M: must be >= 1")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def dump(cfg: Config) -> str:
    """Canonical text: every key, in declaration order, one per line."""
    lines = []
    for sect in fields(cfg):
        sub = getattr(cfg, sect.name)
        for f in fields(sub):
            lines.append(f"{sect.name}.{f.name} = {_fmt(getattr(sub, f.name))}")
        lines.append("")
    return "\n".join(lines[:-1]) + "\n"


def with_overrides(cfg: Config, **sections) -> Config:
    """Copy with per-section overrides, e.g. with_overrides(cfg, time={'t_end': 1.0})."""
    out = Config(**{s: replace(getattr(cfg, s)) for s in SECTIONS})
    for sect, vals in sections.items():
        sub = getattr(out, sect)
        for k, v in vals.items():
            setattr(sub, k, v)
    validate(out)
    return out

"""Explicit time integration of df_N/dt = P_N Q^R(f_N, f_N), initial data and snapshots."""

from __future__ import annotations

import math
import struct
import warnings
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .collision import CollisionOperator
from .diagnostics import DiagnosticsRecord, record
from .errors import FormatError, NumericalFailure
from .spectral_core import SpectralField, TorusGrid, l1_proxy, values_to_coeffs

SCHEMES = ("euler", "rk2", "rk4")
DEFAULT_CFL = 0.5


class SupportWarning(UserWarning):
    pass


def safe_radius(L: float) -> float:
    """Largest S with supp f in B_S keeping |v - v_*| <= R = sqrt(2) L alias-free."""
    return 2.0 * L / (3.0 + math.sqrt(2.0))


@dataclass(frozen=True)
class Bump:
    weight: float
    center: tuple
    temperature: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"bump weight {self.weight} must be positive")
        if not self.temperature > 0:
            raise ValueError(f"bump temperature {self.temperature} must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class InitialSpec:
    """Sum of Gaussian bumps rescaled to total mass ``mass`` (None keeps the raw mass)."""

    bumps: tuple
    mass: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if not self.bumps:
            raise ValueError("initial datum needs at least one bump")
        if self.mass is not None and not self.mass > 0:
            raise ValueError("target mass must be positive")

    def values(self, mesh: np.ndarray, L: float) -> np.ndarray:
        """Periodised samples: each Gaussian is summed over the nearest images."""
        d = mesh.shape[-1]
        out = np.zeros(mesh.shape[:-1])
        shifts = np.stack(np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij"),
                          axis=-1).reshape(-1, d) * 2 * L
        for b in self.bumps:
            if len(b.center) != d:
                raise ValueError(f"bump centre {b.center} is not {d}-dimensional")
            c = np.asarray(b.center)
            for s in shifts:
                r2 = np.sum((mesh - c - s) ** 2, axis=-1)
                out += b.weight * np.exp(-r2 / (2 * b.temperature))
        return out


def build_initial(init: InitialSpec, grid: TorusGrid, warn: bool = True) -> SpectralField:
    """P_N of the bump sum, mass mode rescaled so that rho = init.mass exactly."""
    mesh = grid.mesh()
    vals = init.values(mesh, grid.L)
    total = float(vals.sum())
    if not total > 0:
        raise ValueError("initial datum has zero total weight")
    if warn:
        outside = vals[np.linalg.norm(mesh, axis=-1) > safe_radius(grid.L)].sum() / total
        if outside > 1e-10:
            warnings.warn(f"fraction {outside:.2e} of the initial mass lies outside the "
                          f"dealiasing-safe ball |v| <= {safe_radius(grid.L):.4f}",
                          SupportWarning, stacklevel=2)
    c = values_to_coeffs(vals, grid.N)
    c = 0.5 * (c + np.conj(c[(slice(None, None, -1),) * grid.d]))
    if init.mass is not None:
        c *= init.mass / (grid.volume * c[(grid.N,) * grid.d].real)
    return SpectralField(grid, c)


def dt_max(op: CollisionOperator, f: SpectralField, cfl_safety: float = DEFAULT_CFL) -> float:
    """cfl_safety / (||f||_{L1-proxy} beta(0,0) / (2L)^d), a bound on the loss rate."""
    rate = l1_proxy(f) * op.beta00 / f.grid.volume
    return math.inf if rate == 0 else cfl_safety / rate


@dataclass(frozen=True)
class SimulationState:
    t: float
    field: SpectralField
    step_count: int = 0
    config: object = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("time must be non-negative")


def _advance(rhs: Callable, c: np.ndarray, dt: float, scheme: str) -> np.ndarray:
    if scheme == "euler":
        return c + dt * rhs(c)
    if scheme == "rk2":
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        return c + dt * k2
    if scheme == "rk4":
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        return c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def step(state: SimulationState, dt: float, op: CollisionOperator, scheme: str = "rk4",
         force: bool = False, cfl_safety: float = DEFAULT_CFL) -> SimulationState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    limit = dt_max(op, state.field, cfl_safety)
    if dt > limit and not force:
        raise ValueError(f"dt={dt:.4e} exceeds the stability bound dt_max={limit:.4e}; "
                         "pass force=True to override")
    c = _advance(op.rhs_coeffs, state.field.coeffs, dt, scheme)
    return SimulationState(state.t + dt, state.field.replace(c), state.step_count + 1,
                           state.config)


@dataclass(frozen=True)
class RunSettings:
    t_end: float
    dt: float | None = None
    cfl_safety: float = DEFAULT_CFL
    scheme: str = "rk4"
    force: bool = False
    cadence: int = 1
    entropy_every: int = 0  # D(f) on every n-th record; 0 disables
    sobolev_p: float | None = None
    snapshot_times: tuple = ()
    snapshot_dir: str | None = None
    D_resolution: object = None

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")


@dataclass
class RunResult:
    records: list
    final: SimulationState
    snapshots: list = field(default_factory=list)
    dt: float = 0.0
    n_steps: int = 0


def step_plan(settings: RunSettings, op: CollisionOperator, f0: SpectralField) -> tuple[float, int]:
    """Fixed step dt <= requested (or CFL) dt that lands exactly on t_end."""
    if settings.t_end == 0:
        return 0.0, 0
    target = settings.dt if settings.dt is not None else dt_max(op, f0, settings.cfl_safety)
    n = max(1, math.ceil(settings.t_end / target - 1e-9))
    return settings.t_end / n, n


def run(op: CollisionOperator, f0: SpectralField, settings: RunSettings,
        on_record: Callable[[DiagnosticsRecord], None] | None = None) -> RunResult:
    dt, n_steps = step_plan(settings, op, f0)
    state = SimulationState(0.0, f0)
    records: list = []
    snaps: list = []
    pending = sorted(settings.snapshot_times)
    snap_dir = Path(settings.snapshot_dir) if settings.snapshot_dir else None

    def emit(st: SimulationState):
        idx = len(records)
        want_D = settings.entropy_every and idx % settings.entropy_every == 0
        rec = record(st.field, st.t, op.spec, compute_D=bool(want_D),
                     sobolev_p=settings.sobolev_p, D_resolution=settings.D_resolution)
        records.append(rec)
        if on_record:
            on_record(rec)

    def snapshot(st: SimulationState, tag: str):
        if snap_dir is None:
            return
        snap_dir.mkdir(parents=True, exist_ok=True)
        path = snap_dir / f"snapshot_{tag}.bspc"
        save_snapshot(st, path, op.spec.R)
        snaps.append(path)

    emit(state)
    for i in range(n_steps):
        new = step(state, dt, op, settings.scheme, force=True)
        if not np.all(np.isfinite(new.field.coeffs)):
            snapshot(state, "last_good")
            raise NumericalFailure(f"non-finite coefficients at step {i + 1} (t={new.t:.6g})",
                                   last_state=state)
        state = new
        if i == n_steps - 1:
            # pin the final time to t_end to avoid round-off drift
            state = replace(state, t=float(settings.t_end))
        while pending and state.t >= pending[0] - 0.5 * dt:
            snapshot(state, f"t{pending.pop(0):.6g}")
        if (i + 1) % settings.cadence == 0 or i == n_steps - 1:
            emit(state)
    snapshot(state, "final")
    return RunResult(records, state, snaps, dt, n_steps)


# --------------------------------------------------------------------------
# BSPC snapshots

_BSPC_MAGIC = b"BSPC"
_BSPC_VERSION = 1
_BSPC_HEADER = struct.Struct("<4sIIIddd")


def snapshot_bytes(state: SimulationState, R: float) -> bytes:
    f = state.field
    head = _BSPC_HEADER.pack(_BSPC_MAGIC, _BSPC_VERSION, f.d, f.N, f.grid.L, R, state.t)
    body = head + np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def snapshot_from_bytes(data: bytes, expect_d: int | None = None,
                        n_phys: int | None = None) -> tuple[SimulationState, float]:
    if len(data) < _BSPC_HEADER.size + 4:
        raise FormatError("snapshot file truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    magic, version, d, N, L, R, t = _BSPC_HEADER.unpack_from(body)
    if magic != _BSPC_MAGIC:
        raise FormatError(f"bad magic {magic!r}; not a snapshot")
    if version != _BSPC_VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    if zlib.crc32(body) != crc:
        raise FormatError("snapshot CRC mismatch (file corrupt or truncated)")
    if expect_d is not None and d != expect_d:
        raise FormatError(f"snapshot has dimension d={d}, expected d={expect_d}")
    payload = body[_BSPC_HEADER.size:]
    n = (2 * N + 1) ** d
    if len(payload) != 16 * n:
        raise FormatError("snapshot payload has the wrong size")
    c = np.frombuffer(payload, dtype="<c16").astype(complex).reshape((2 * N + 1,) * d)
    grid = TorusGrid(d, N, L, n_phys)
    return SimulationState(t, SpectralField(grid, c)), R


def save_snapshot(state: SimulationState, path, R: float) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(state, R))
    return path


def load_snapshot(path, expect_d: int | None = None) -> SimulationState:
    state, _ = snapshot_from_bytes(Path(path).read_bytes(), expect_d)
    return state

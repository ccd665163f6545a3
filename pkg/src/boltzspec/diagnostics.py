"""Scalar functionals of a spectral state: moments, entropies, negativity, distances."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, NumericalFailure, UnsupportedKernel
from .kernels import KernelSpec
from .modes import Resolution, default_resolution, node_chunks, node_count
from .spectral_core import (SpectralField, embed, inverse_transform, project,
                            sobolev_norm)

FLOOR_FACTOR = 1e-14
MAX_CLIPPED_FRACTION = 0.01
DEFAULT_D_BUDGET = 5e8


def m_inf(field: SpectralField) -> float:
    return field.mass_mode.real


def physical_values(field: SpectralField, n_phys: int | None = None) -> np.ndarray:
    grid = field.grid if n_phys is None else field.grid.with_N(field.N, n_phys)
    return inverse_transform(field, grid)


def _axis_moment_integrals(N: int, L: float):
    """int_{-L}^{L} v^j e^{i pi k v / L} dv for j = 0, 1, 2 and k = -N..N."""
    k = np.arange(-N, N + 1)
    nz = k != 0
    sgn = (-1.0) ** np.abs(k)
    i0 = np.where(nz, 0.0, 2 * L).astype(complex)
    i1 = np.zeros(len(k), complex)
    i1[nz] = -2j * L * L * sgn[nz] / (np.pi * k[nz])
    i2 = np.full(len(k), 2 * L ** 3 / 3, complex)
    i2[nz] = 4 * L ** 3 * sgn[nz] / (np.pi * k[nz]) ** 2
    return i0, i1, i2


def _contract(c: np.ndarray, ops) -> complex:
    """sum_k c_k prod_a ops[a][k_a]."""
    t = c
    for op in ops:
        t = np.tensordot(op, t, axes=(0, 0))
    return complex(t)


def velocity_moments(field: SpectralField) -> tuple[float, np.ndarray, float]:
    """Exact box integrals (int f, int v f, int |v|^2 f) of the trigonometric polynomial."""
    d, N, L = field.d, field.N, field.grid.L
    c = field.coeffs
    i0, i1, i2 = _axis_moment_integrals(N, L)
    first = np.zeros(d)
    energy = 0.0
    for a in range(d):
        first[a] = _contract(c, [i1 if ax == a else i0 for ax in range(d)]).real
        energy += _contract(c, [i2 if ax == a else i0 for ax in range(d)]).real
    return field.mass, first, energy


def moments(field: SpectralField) -> tuple[float, np.ndarray, float]:
    """(rho, u, T) with T = (1/(d rho)) int |u - v|^2 f dv over the torus."""
    d = field.d
    rho, first, energy = velocity_moments(field)
    if not rho > 0:
        raise NumericalFailure(f"non-positive mass {rho:.3e}; moments undefined")
    u = first / rho
    T = (energy - rho * float(u @ u)) / (d * rho)
    return rho, u, T


def _floor(field: SpectralField, floor: float | None) -> float:
    if floor is None:
        return FLOOR_FACTOR * abs(m_inf(field))
    if not floor > 0:
        raise ValueError("entropy floor must be positive")
    return floor


def _clipped(values, floor):
    ft = np.maximum(values, floor)
    return ft, float(np.mean(values < floor))


def entropy(field: SpectralField, floor: float | None = None, n_phys: int | None = None,
            return_clipped: bool = False):
    """H = int f log f with f clipped below at ``floor`` (trapezoid rule on the grid)."""
    floor = _floor(field, floor)
    vals = physical_values(field, n_phys)
    ft, frac = _clipped(vals, floor)
    cell = field.grid.volume / vals.size
    H = float(np.sum(ft * np.log(ft)) * cell)
    return (H, frac) if return_clipped else H


def relative_entropy(field: SpectralField, floor: float | None = None,
                     n_phys: int | None = None, return_clipped: bool = False):
    """H(f | m_inf) = int f log(f / m_inf), m_inf from the field's own mass."""
    floor = _floor(field, floor)
    m = m_inf(field)
    vals = physical_values(field, n_phys)
    ft, frac = _clipped(vals, floor)
    cell = field.grid.volume / vals.size
    H = float(np.sum(ft * np.log(ft / m)) * cell)
    return (H, frac) if return_clipped else H


def negative_part(field: SpectralField, n_phys: int | None = None) -> tuple[float, float]:
    """(max f^-, int f^-) on the physical grid."""
    vals = physical_values(field, n_phys)
    neg = np.maximum(0.0, -vals)
    return float(neg.max()), float(neg.sum() * field.grid.volume / vals.size)


def l2_to_equilibrium(field: SpectralField) -> float:
    """||f - m_inf||_{L^2} by Parseval."""
    c = field.coeffs.copy()
    c[(field.N,) * field.d] = 0.0
    return float(np.sqrt(field.grid.volume * np.sum(np.abs(c) ** 2)))


def l1_to_equilibrium(field: SpectralField, n_phys: int | None = None) -> float:
    vals = physical_values(field, n_phys)
    return float(np.abs(vals - m_inf(field)).sum() * field.grid.volume / vals.size)


def entropy_production(field: SpectralField, spec: KernelSpec,
                       resolution: Resolution | None = None, floor: float | None = None,
                       strict: bool = False, budget: float = DEFAULT_D_BUDGET,
                       batch: int = 64) -> float:
    """D(f) = 1/4 int int (f'f'_* - f f_*) log(f'f'_* / (f f_*)) B^class over D_L x C_R.

    Evaluated on the field's physical grid with the classical node set at
    half the mode-precompute resolution. ``strict`` enforces gamma > 0.
    """
    from .collision import _sampler_spectral

    if spec.d != 2:
        raise UnsupportedKernel("entropy production implemented for d=2")
    if strict and not spec.gamma > 0:
        raise ValueError("strict entropy production requires gamma > 0")
    floor = _floor(field, floor)
    res = default_resolution(field.N).halved() if resolution is None else resolution
    n = field.grid.n_phys
    cost = float(n) ** spec.d * node_count(spec, "classical", res)
    if cost > budget:
        raise BudgetExceeded(f"entropy production cost {cost:.2e} exceeds budget {budget:.2e}")
    base = physical_values(field)
    if np.mean(base < floor) > MAX_CLIPPED_FRACTION:
        raise NumericalFailure(
            f"{100 * np.mean(base < floor):.1f}% of grid points below the entropy floor; "
            "D(f) is not meaningful"
        )
    sample = _sampler_spectral(field.coeffs, field.N, field.grid.L, n)
    fb = np.maximum(base, floor)
    total = 0.0
    for chunk in node_chunks(spec, "classical", res):
        for sub in chunk.split(batch):
            a = np.maximum(sample(sub.theta_p), floor) * np.maximum(sample(sub.theta_ps), floor)
            b = fb[None] * np.maximum(sample(sub.theta_s), floor)
            integrand = (a - b) * (np.log(a) - np.log(b))
            total += float(sub.weights @ integrand.reshape(len(sub), -1).sum(axis=1))
    return 0.25 * total * field.grid.volume / base.size


def consistency_norm(f_ref: SpectralField, N: int, p: float, op_ref) -> float:
    """||(Id - P_N) Q^R(P_N f, P_N f)||_{H^p}, with Q^R evaluated at the reference N."""
    if not N < f_ref.N:
        raise ValueError(f"N={N} must be below the reference N={f_ref.N}")
    if op_ref.N != f_ref.N:
        raise ValueError("reference operator and field disagree on N")
    g = embed(project(f_ref, N), f_ref.N, f_ref.grid.n_phys)
    q = op_ref.full(g)
    c = q.coeffs.copy()
    o = f_ref.N - N
    c[(slice(o, o + 2 * N + 1),) * f_ref.d] = 0.0
    return sobolev_norm(q.replace(c), p)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    u: tuple
    T: float
    H: float
    H_rel: float
    D: float | None
    neg_inf: float
    negL1: float
    l2_to_eq: float
    sobolev: float | None = None
    clipped: float = 0.0

    def row(self) -> list:
        return ([self.t, self.mass, *self.u, self.T, self.H, self.H_rel,
                 "" if self.D is None else self.D, self.neg_inf, self.negL1, self.l2_to_eq])


def record(field: SpectralField, t: float, spec: KernelSpec | None = None,
           compute_D: bool = False, sobolev_p: float | None = None,
           floor: float | None = None, D_resolution: Resolution | None = None) -> DiagnosticsRecord:
    mass, u, T = moments(field)
    H, frac = entropy(field, floor, return_clipped=True)
    H_rel = relative_entropy(field, floor)
    ninf, nl1 = negative_part(field)
    D = None
    if compute_D:
        if spec is None:
            raise ValueError("entropy production needs the kernel spec")
        # rows with heavy clipping keep D blank instead of aborting the run
        if frac <= MAX_CLIPPED_FRACTION:
            D = entropy_production(field, spec, D_resolution, floor)
    sob = None if sobolev_p is None else sobolev_norm(field, sobolev_p)
    return DiagnosticsRecord(float(t), mass, tuple(float(x) for x in u), T, H, H_rel, D,
                             ninf, nl1, l2_to_equilibrium(field), sob, frac)


def csv_header(d: int) -> list[str]:
    return (["t", "mass"] + [f"u{i + 1}" for i in range(d)]
            + ["T", "H", "H_rel", "D", "neg_inf", "negL1", "l2_to_eq"])


def _fmt(x):
    return x if isinstance(x, str) else repr(float(x))


def write_csv(records: Sequence[DiagnosticsRecord], path, d: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(d))
        for r in records:
            w.writerow([_fmt(x) for x in r.row()])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else math.nan) for k, v in r.items()} for r in rows]

"""Linearised spectrum, spreading constants and relaxation-rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .collision import q_physical_direct
from .diagnostics import read_csv
from .errors import NumericalFailure
from .kernels import KernelSpec
from .modes import (DEFAULT_MAX_DOUBLINGS, DEFAULT_TOL, Resolution, beta_entries, certify,
                    classical2d_factors, default_resolution, fast2d_factors, node_chunks)
from .spectral_core import SpectralField, TorusGrid, flat_wavevectors

CROSS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LinearSpectrum:
    spec: KernelSpec
    N: int
    method: str
    a: np.ndarray = field(repr=False)
    lambda_N: float
    argmin: tuple
    a_inf: float
    cross_defect: float
    imag_defect: float
    resolution: Resolution | None = None

    def at(self, k) -> float:
        return float(self.a[tuple(np.asarray(k) + self.N)])

    def shell(self, radius: int | None = None) -> np.ndarray:
        """a_k on |k|_inf = radius (default N)."""
        r = self.N if radius is None else radius
        ks = flat_wavevectors(self.N, self.spec.d)
        mask = np.max(np.abs(ks), axis=1) == r
        return self.a.reshape(-1)[mask]


def default_eigen_method(spec: KernelSpec) -> str:
    return "fast-direct" if spec.d == 2 and spec.fast_separable else "classical"


def _semi_analytic(spec: KernelSpec, method: str) -> bool:
    return method == "fast-direct" and spec.d == 2 and spec.fast_separable


def _a_direct(spec: KernelSpec, method: str, res: Resolution, ks: np.ndarray) -> np.ndarray:
    """-int_{C_R} [1 + e_k(Theta_*) - e_k(Theta') - e_k(Theta'_*)] B, unnormalised e_k."""
    ks = np.asarray(ks, dtype=float)
    zero = np.zeros((1, spec.d))
    if _semi_analytic(spec, method):
        wk, U, V = fast2d_factors(spec, res, np.concatenate([zero, ks]), exact_radial=True)
        U0, V0 = U[:, :1], V[:, :1]
        return -(wk[:, None] * (U0 - U[:, 1:]) * (V0 - V[:, 1:])).sum(axis=0)
    if method == "classical" and spec.d == 2 and spec.is_vhs:
        W, S = classical2d_factors(spec, res, np.concatenate([zero, -2 * ks, -ks, ks]))
        P = len(ks)
        S0 = S[:, :1]
        Sm2, Sm, Sp = S[:, 1:P + 1], S[:, P + 1:2 * P + 1], S[:, 2 * P + 1:]
        return -(W[:, None] * (S0 * S0 + Sm2 * S0 - Sm * Sp - Sm * Sm)).sum(axis=0)
    a = np.pi / spec.L
    out = np.zeros(len(ks), complex)
    for chunk in node_chunks(spec, method, res):
        for sub in chunk.split(max(256, (1 << 20) // max(1, len(ks)))):
            e = lambda th: np.exp(1j * a * (th @ ks.T))
            out -= sub.weights @ (1.0 + e(sub.theta_s) - e(sub.theta_p) - e(sub.theta_ps))
    return out


def _a_identity(spec: KernelSpec, method: str, res: Resolution, ks: np.ndarray) -> np.ndarray:
    """beta(0,k) + beta(k,0) - beta(k,k) - beta(0,0)."""
    P = len(ks)
    z = np.zeros_like(ks)
    ls = np.concatenate([z, ks, ks, z[:1]])
    ms = np.concatenate([ks, z, ks, z[:1]])
    b = beta_entries(spec, method, res, ls, ms, exact_radial=_semi_analytic(spec, method))
    return b[:P] + b[P:2 * P] - b[2 * P:3 * P] - b[-1]


def eigenvalues(spec: KernelSpec, N: int, method: str | None = None,
                resolution: Resolution | None = None, tol: float | None = DEFAULT_TOL,
                max_doublings: int = DEFAULT_MAX_DOUBLINGS) -> LinearSpectrum:
    """Linearised eigenvalues a_k around the constant state, |k|_inf <= N.

    Raises NumericalFailure when the direct quadrature and the beta
    combination disagree by more than 1e-9 |a_inf|.
    """
    method = default_eigen_method(spec) if method is None else method
    ks = flat_wavevectors(N, spec.d)
    res = default_resolution(N) if resolution is None else resolution
    if tol is None:
        a = _a_direct(spec, method, res, ks)
    else:
        a, res, _ = certify(lambda r: _a_direct(spec, method, r, ks), res, tol, max_doublings)
    ident = _a_identity(spec, method, res, ks)
    z = np.zeros((1, spec.d))
    beta00 = beta_entries(spec, method, res, z, z, exact_radial=_semi_analytic(spec, method))[0]
    a_inf = -float(beta00.real)
    scale = abs(a_inf)
    cross = float(np.max(np.abs(a - ident))) / scale
    if cross > CROSS_TOL:
        raise NumericalFailure(
            f"a_k cross-identity violated: max |direct - beta combination| = {cross:.3e} |a_inf|"
        )
    imag = float(np.max(np.abs(a.imag))) / scale
    a_real = a.real.reshape((2 * N + 1,) * spec.d)
    lam, arg = _gap(a_real, N, spec.d)
    return LinearSpectrum(spec, N, method, a_real, lam, arg, a_inf, cross, imag, res)


def _gap(a: np.ndarray, N: int, d: int):
    mag = np.abs(a).reshape(-1).copy()
    ks = flat_wavevectors(N, d)
    nonzero = np.any(ks != 0, axis=1)
    mag[~nonzero] = np.inf
    i = int(np.argmin(mag))
    return float(mag[i]), tuple(int(x) for x in ks[i])


def spectral_gap(spectrum: LinearSpectrum) -> tuple[float, tuple]:
    """(lambda_N, argmin k): min |a_k| over k != 0."""
    return spectrum.lambda_N, spectrum.argmin


def gap_trend(spec: KernelSpec, Ns, **kw) -> list[tuple[int, float]]:
    return [(N, eigenvalues(spec, N, **kw).lambda_N) for N in Ns]


def linear_decay_check(op, k, eps: float = 1e-6, dt: float | None = None,
                       spectrum: LinearSpectrum | None = None, mass: float = 1.0):
    """One explicit Euler step of m_inf + eps (e_k + e_-k); returns (observed, predicted, rel).

    observed = (fhat_k(dt) / fhat_k(0) - 1) / dt, predicted = m_inf a_k.
    """
    grid = TorusGrid(op.d, op.N, op.spec.L)
    m = mass / grid.volume
    k = np.asarray(k)
    c = np.zeros(grid.shape, complex)
    c[(op.N,) * op.d] = m
    c[tuple(k + op.N)] += eps * m
    c[tuple(-k + op.N)] += eps * m
    if spectrum is None:
        spectrum = eigenvalues(op.spec, op.N)
    pred = m * spectrum.at(k)
    dt = 1e-3 / abs(pred) if dt is None else dt
    new = c + dt * op.rhs_coeffs(c)
    obs = (new[tuple(k + op.N)] / c[tuple(k + op.N)] - 1.0).real / dt
    return float(obs), float(pred), abs(obs - pred) / abs(pred)


# --------------------------------------------------------------------------
# spreading


def mu0(R: float, L: float) -> tuple[float, float]:
    """mu_0 = sqrt(1 - y0^2) + y0 at y0 = R/(2 sqrt(2) L), and mu = (1 + mu_0)/2."""
    if not (R > 0 and L > 0):
        raise ValueError("R and L must be positive")
    y0 = R / (2.0 * math.sqrt(2.0) * L)
    if y0 > 1.0 / math.sqrt(2.0) * (1 + 1e-14):
        raise ValueError(f"R/(2 sqrt(2) L) = {y0:.6f} exceeds 1/sqrt(2); need R <= 2L")
    y0 = min(y0, 1.0 / math.sqrt(2.0))
    m0 = math.sqrt(1.0 - y0 * y0) + y0
    return m0, 0.5 * (1.0 + m0)


def _smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def mollified_indicator(r: float, width: float):
    """Smooth radial function equal to 1 on B(0, r - width), positive on B(0, r), 0 outside."""
    def fn(pts):
        rad = np.linalg.norm(pts, axis=-1)
        return _smoothstep((r - rad) / width)
    return fn


@dataclass(frozen=True)
class SpreadingReport:
    r: float
    mu: float
    mu_0: float
    skipped: bool
    min_on_ball: float
    C0: float
    radius_first: float = 0.0
    radius_second: float | None = None

    @property
    def passed(self) -> bool:
        return self.skipped or self.min_on_ball > 0

    def text(self) -> str:
        if self.skipped:
            return f"spreading r={self.r:.6g}: SKIP (r >= sqrt(2) L covers the torus) PASS"
        lines = [
            f"spreading r={self.r:.6g} mu0={self.mu_0:.12f} mu={self.mu:.12f}",
            f"  min gain on B(0, mu r = {self.mu * self.r:.6g}) = {self.min_on_ball:.6e}",
            f"  C0 estimate = {self.C0:.6e}",
            f"  positivity radius: one pass {self.radius_first:.6g}"
            + ("" if self.radius_second is None else f", two passes {self.radius_second:.6g}"),
            f"  {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def _torus_radius(mesh: np.ndarray) -> np.ndarray:
    return np.linalg.norm(mesh, axis=-1)


def _positivity_radius(values: np.ndarray, rad: np.ndarray, thresh: float) -> float:
    """Largest grid radius rho such that values > thresh at every node with |v| <= rho."""
    order = np.argsort(rad.reshape(-1), kind="stable")
    v = values.reshape(-1)[order]
    rr = rad.reshape(-1)[order]
    bad = np.nonzero(v <= thresh)[0]
    if len(bad) == 0:
        return float(rr[-1])
    return float(rr[bad[0] - 1]) if bad[0] > 0 else 0.0


def check_spreading(r: float, spec: KernelSpec, n_grid: int | None = None,
                    resolution: Resolution | None = None, two_pass: bool = False,
                    method: str = "classical") -> SpreadingReport:
    """Gain of the mollified indicator of B(0, r), checked positive on B(0, mu r)."""
    if spec.d != 2:
        raise ValueError("spreading check implemented for d=2")
    L = spec.L
    m0, mu = mu0(spec.R, L)
    if r >= math.sqrt(2.0) * L:
        return SpreadingReport(r, mu, m0, True, math.inf, math.inf)
    if not r > 0:
        raise ValueError("radius must be positive")
    if n_grid is None:
        # keeps the mollification (2 cells) below r/5
        n_grid = max(32, 2 * math.ceil(10 * L / r))
    h = 2 * L / n_grid
    width = 2 * h
    if width >= r / 4:
        raise ValueError(f"grid too coarse: mollification width {width:.4g} >= r/4")
    res = Resolution(16, 32) if resolution is None else resolution
    fn = mollified_indicator(r, width)
    q = q_physical_direct(fn, spec, gain_only=True, method=method, resolution=res,
                          n_phys=n_grid)
    nodes = -L + 2 * L * np.arange(n_grid) / n_grid
    mesh = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1)
    rad = _torus_radius(mesh)
    inside = rad <= mu * r
    mn = float(q[inside].min())
    thresh = 1e-12 * float(np.abs(q).max())
    r1 = _positivity_radius(q, rad, thresh)
    r2 = None
    if two_pass:
        q2 = q_physical_direct(np.maximum(q, 0.0) / q.max(), spec, gain_only=True,
                               method=method, resolution=res, interp="linear")
        r2 = _positivity_radius(q2, rad, 1e-12 * float(np.abs(q2).max()))
    return SpreadingReport(r, mu, m0, False, mn, mn, r1, r2)


# --------------------------------------------------------------------------
# relaxation fits


def fit_relaxation(rows, tail: float = 0.5, floor: float = 1e-12,
                   column: str = "l2_to_eq") -> tuple[float, float]:
    """Least-squares decay rate of log(l2_to_eq) against t over the tail window."""
    if isinstance(rows, (str, Path)):
        rows = read_csv(rows)
    t = np.array([r["t"] for r in rows], dtype=float)
    y = np.array([r[column] for r in rows], dtype=float)
    ok = y > floor
    t, y = t[ok], y[ok]
    if len(t) < 10:
        raise ValueError(f"need at least 10 rows above {floor:g}; got {len(t)}")
    start = int(len(t) * (1.0 - tail))
    t, y = t[start:], y[start:]
    fit = stats.linregress(t, np.log(y))
    if not fit.slope < 0:
        raise ValueError(f"trajectory does not decay (slope {fit.slope:.3e})")
    return float(-fit.slope), float(fit.rvalue ** 2)


def records_to_rows(records) -> list[dict]:
    return [{"t": r.t, "l2_to_eq": r.l2_to_eq, "H": r.H, "neg_inf": r.neg_inf} for r in records]


# --------------------------------------------------------------------------
# cross-path oracle and consistency sweep


@dataclass(frozen=True)
class OracleReport:
    N: int
    M: int
    fast_vs_direct: float
    direct_vs_physical: float
    fast_vs_physical: float
    tol_modes: float = 1e-6
    tol_physical: float = 1e-4

    @property
    def passed(self) -> bool:
        return (self.fast_vs_direct <= self.tol_modes
                and max(self.direct_vs_physical, self.fast_vs_physical) <= self.tol_physical)

    def text(self) -> str:
        return "\n".join([
            f"oracle N={self.N} M={self.M} (relative L2 deviation of the gain)",
            f"  fast vs direct-beta      {self.fast_vs_direct:.3e}  (tol {self.tol_modes:g})",
            f"  direct-beta vs physical  {self.direct_vs_physical:.3e}  (tol {self.tol_physical:g})",
            f"  fast vs physical         {self.fast_vs_physical:.3e}  (tol {self.tol_physical:g})",
            f"  max relative deviation   {self.max_deviation:.3e}",
            f"  {'PASS' if self.passed else 'FAIL'}",
        ])

    @property
    def max_deviation(self) -> float:
        return max(self.fast_vs_direct, self.direct_vs_physical, self.fast_vs_physical)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def cross_path_oracle(spec: KernelSpec, field: SpectralField, M: int = 128,
                      resolution: Resolution | None = None,
                      budget: float | None = None) -> OracleReport:
    """Gain of one band-limited field by the fast path, the dense fast-direct
    table and pointwise physical quadrature."""
    from .collision import CollisionOperator, oracle_resolution, physical_to_field
    from .modes import precompute_table

    N = field.N
    table = precompute_table(spec, N, "fast-direct")
    direct = CollisionOperator.from_table(table).gain(field).coeffs
    fast = CollisionOperator.fast(spec, N, M).gain(field).coeffs
    res = oracle_resolution(N) if resolution is None else resolution
    kw = {} if budget is None else {"budget": budget}
    phys = physical_to_field(q_physical_direct(field, spec, gain_only=True, resolution=res, **kw),
                             field.grid).coeffs
    return OracleReport(N, M, _rel(fast, direct), _rel(direct, phys), _rel(fast, phys))


@dataclass(frozen=True)
class ConsistencyResult:
    Ns: tuple
    ps: tuple
    norms: dict  # p -> list of norms, one per N
    slopes: dict  # p -> log-log slope

    def rows(self) -> list[list]:
        return [[N] + [self.norms[p][i] for p in self.ps] for i, N in enumerate(self.Ns)]


def gaussian_field(grid: TorusGrid, temperature: float, mass: float = 1.0,
                   center=None) -> SpectralField:
    from .dynamics import Bump, InitialSpec, build_initial

    c = (0.0,) * grid.d if center is None else center
    return build_initial(InitialSpec((Bump(1.0, c, temperature),), mass), grid, warn=False)


def consistency_sweep(spec: KernelSpec, Ns, N_ref: int = 64, ps=(0, 1, 2),
                      temperature: float = 0.1, M: int = 64, op_ref=None) -> ConsistencyResult:
    """||(Id - P_N) Q^R(P_N f, P_N f)||_{H^p} for a centred Gaussian, with slopes."""
    from .collision import CollisionOperator
    from .diagnostics import consistency_norm

    Ns = tuple(int(n) for n in Ns)
    ps = tuple(ps)
    grid = TorusGrid(spec.d, N_ref, spec.L)
    f_ref = gaussian_field(grid, temperature)
    if op_ref is None:
        op_ref = CollisionOperator.fast(spec, N_ref, M)
    norms = {p: [consistency_norm(f_ref, N, p, op_ref) for N in Ns] for p in ps}
    slopes = {}
    for p in ps:
        y = np.log(np.maximum(norms[p], np.finfo(float).tiny))
        slopes[p] = float(stats.linregress(np.log(Ns), y).slope)
    return ConsistencyResult(Ns, ps, norms, slopes)

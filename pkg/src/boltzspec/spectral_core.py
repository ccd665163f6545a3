"""Torus geometry and discrete Fourier representation on [-L, L]^d.

Coefficients follow the truncated series

    f_N(v) = sum_{|k|_inf <= N} fhat_k exp(i pi k.v / L),
    fhat_k = (2L)^-d  int_{[-L,L]^d} f(v) exp(-i pi k.v / L) dv,

so the mass is ``(2L)^d * fhat_0``.  Arrays of coefficients have shape
``(2N+1,)*d`` in C order; axis entry ``j`` holds wavenumber ``j - N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.signal

HERMITIAN_TOL = 1e-12
# above this many modes convolve() switches from direct summation to FFTs
DIRECT_CONV_MAX_MODES = 4096


@dataclass(frozen=True)
class TorusGrid:
    d: int
    N: int
    L: float
    n_phys: int | None = None

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension d={self.d} not supported (2 or 3)")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N={self.N} must be a positive integer")
        if not self.L > 0:
            raise ValueError(f"L={self.L} must be positive")
        if self.n_phys is None:
            object.__setattr__(self, "n_phys", 2 * (2 * self.N + 1))
        if self.n_phys < 2 * self.N + 1:
            raise ValueError(f"n_phys={self.n_phys} < 2N+1={2 * self.N + 1}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.N + 1,) * self.d

    @property
    def phys_shape(self) -> tuple[int, ...]:
        return (self.n_phys,) * self.d

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.d

    @property
    def cell_volume(self) -> float:
        return (2.0 * self.L / self.n_phys) ** self.d

    @property
    def wavenumber_scale(self) -> float:
        return np.pi / self.L

    @cached_property
    def nodes(self) -> np.ndarray:
        """Equispaced nodes v_j = -L + 2L j / n_phys along one axis."""
        return -self.L + 2.0 * self.L * np.arange(self.n_phys) / self.n_phys

    def mesh(self) -> np.ndarray:
        """Physical points, shape ``(n_phys,)*d + (d,)``."""
        axes = np.meshgrid(*([self.nodes] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def with_N(self, N: int, n_phys: int | None = None) -> "TorusGrid":
        return TorusGrid(self.d, N, self.L, n_phys)


def mode_range(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def wavevectors(N: int, d: int) -> np.ndarray:
    """Integer wavevectors, shape ``(2N+1,)*d + (d,)``."""
    axes = np.meshgrid(*([mode_range(N)] * d), indexing="ij")
    return np.stack(axes, axis=-1)


def flat_wavevectors(N: int, d: int) -> np.ndarray:
    """Wavevectors in row-major order, shape ``((2N+1)^d, d)``."""
    return wavevectors(N, d).reshape(-1, d)


def reflect(coeffs: np.ndarray) -> np.ndarray:
    """Array whose entry at k is the input's entry at -k."""
    return coeffs[(slice(None, None, -1),) * coeffs.ndim]


def hermitian_defect(coeffs: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(coeffs))), np.finfo(float).tiny)
    return float(np.max(np.abs(coeffs - np.conj(reflect(coeffs))))) / scale


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(reflect(coeffs)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: TorusGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "SpectralField":
        c = np.zeros(grid.shape, complex)
        c[(grid.N,) * grid.d] = value
        return cls(grid, c)

    @classmethod
    def single_mode(cls, grid: TorusGrid, k, amplitude: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.shape, complex)
        c[tuple(np.asarray(k) + grid.N)] = amplitude
        return cls(grid, c)

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def d(self) -> int:
        return self.grid.d

    def coeff(self, k) -> complex:
        k = np.asarray(k)
        if np.any(np.abs(k) > self.N):
            return 0.0 + 0.0j
        return complex(self.coeffs[tuple(k + self.N)])

    @property
    def mass_mode(self) -> complex:
        return complex(self.coeffs[(self.N,) * self.d])

    @property
    def mass(self) -> float:
        return self.grid.volume * self.mass_mode.real

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return hermitian_defect(self.coeffs) <= tol

    def replace(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def _check_same(self, other: "SpectralField"):
        if other.grid.shape != self.grid.shape or other.grid.L != self.grid.L:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.replace(-self.coeffs)


def _fft_index(N: int, n: int) -> np.ndarray:
    return mode_range(N) % n


def _shift_phase(N: int, d: int) -> np.ndarray:
    """(-1)^(k_1+...+k_d): the grid starts at -L rather than 0."""
    s = (-1.0) ** np.abs(mode_range(N))
    out = s
    for _ in range(d - 1):
        out = np.multiply.outer(out, s)
    return out


def coeffs_to_values(coeffs: np.ndarray, N: int, L: float, n: int) -> np.ndarray:
    """Sample a coefficient array on the n^d equispaced grid (complex output)."""
    d = coeffs.ndim
    buf = np.zeros((n,) * d, complex)
    idx = _fft_index(N, n)
    buf[np.ix_(*([idx] * d))] = coeffs * _shift_phase(N, d)
    return scipy.fft.ifftn(buf, norm="forward")


def values_to_coeffs(values: np.ndarray, N: int) -> np.ndarray:
    """Trapezoid/DFT analysis of grid samples onto modes |k|_inf <= N."""
    d = values.ndim
    n = values.shape[0]
    spec = scipy.fft.fftn(values, norm="forward")
    idx = _fft_index(N, n)
    return spec[np.ix_(*([idx] * d))] * _shift_phase(N, d)


def forward_transform(values, grid: TorusGrid) -> SpectralField:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.phys_shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.phys_shape}")
    return SpectralField(grid, values_to_coeffs(values, grid.N))


def inverse_transform(field: SpectralField, grid: TorusGrid | None = None) -> np.ndarray:
    """Real samples of the truncated series on ``grid`` (defaults to the field's grid)."""
    grid = field.grid if grid is None else grid
    if grid.L != field.grid.L or grid.d != field.d:
        raise ValueError("target grid incompatible with field (L or d differ)")
    if grid.n_phys < 2 * field.N + 1:
        raise ValueError(f"n_phys={grid.n_phys} cannot represent N={field.N}")
    if not field.is_hermitian():
        raise ValueError(
            f"field is not Hermitian (defect {hermitian_defect(field.coeffs):.3e}); "
            "it does not represent a real function"
        )
    vals = coeffs_to_values(field.coeffs, field.N, field.grid.L, grid.n_phys)
    return np.ascontiguousarray(vals.real)


def _center_slice(N_from: int, N_to: int, d: int):
    o = N_from - N_to
    return (slice(o, o + 2 * N_to + 1),) * d


def project(field: SpectralField, N_target: int, keep_shape: bool = False) -> SpectralField:
    """Orthogonal projection onto modes |k|_inf <= N_target.

    With ``keep_shape`` the result stays on the source grid with the
    discarded modes set to zero.
    """
    if N_target < 0:
        raise ValueError(f"N_target={N_target} must be >= 0")
    if N_target > field.N:
        raise ValueError(f"N_target={N_target} exceeds field N={field.N}")
    sl = _center_slice(field.N, N_target, field.d)
    if keep_shape:
        c = np.zeros_like(field.coeffs)
        c[sl] = field.coeffs[sl]
        return field.replace(c)
    if N_target == 0:
        raise ValueError("N_target=0 only supported with keep_shape=True")
    grid = TorusGrid(field.d, N_target, field.grid.L, field.grid.n_phys)
    return SpectralField(grid, field.coeffs[sl])


def embed(field: SpectralField, N_new: int, n_phys: int | None = None) -> SpectralField:
    """Zero-pad a field to a larger mode box."""
    if N_new < field.N:
        raise ValueError("embed() only enlarges; use project() to shrink")
    grid = field.grid.with_N(N_new, n_phys)
    c = np.zeros(grid.shape, complex)
    c[_center_slice(N_new, field.N, field.d)] = field.coeffs
    return SpectralField(grid, c)


def convolve_arrays(a: np.ndarray, b: np.ndarray, N: int, full: bool = False,
                    method: str | None = None) -> np.ndarray:
    """Exact sum c_k = sum_{l+m=k} a_l b_m of two ``(2N+1)^d`` coefficient arrays.

    Returns modes |k|_inf <= N, or all |k|_inf <= 2N when ``full``.
    """
    d = a.ndim
    if method is None:
        method = "direct" if (2 * N + 1) ** d <= DIRECT_CONV_MAX_MODES else "fft"
    if method == "direct":
        out = scipy.signal.convolve(a, b, mode="full", method="direct")
    elif method == "fft":
        # linear convolution length 2(2N+1)-1 = 4N+1; no circular wrap
        P = scipy.fft.next_fast_len(4 * N + 1)
        axes = tuple(range(d))
        fa = scipy.fft.fftn(a, s=(P,) * d, axes=axes)
        fb = scipy.fft.fftn(b, s=(P,) * d, axes=axes)
        out = scipy.fft.ifftn(fa * fb, axes=axes)[(slice(0, 4 * N + 1),) * d]
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    if full:
        return out
    return out[_center_slice(2 * N, N, d)]


def convolve(a: SpectralField, b: SpectralField, full: bool = False) -> SpectralField:
    a._check_same(b)
    c = convolve_arrays(a.coeffs, b.coeffs, a.N, full=full)
    if full:
        return SpectralField(a.grid.with_N(2 * a.N, max(a.grid.n_phys, 2 * (4 * a.N + 1))), c)
    return a.replace(c)


def sobolev_weights(N: int, d: int, L: float, p: float) -> np.ndarray:
    k = wavevectors(N, d) * (np.pi / L)
    return (1.0 + np.sum(k * k, axis=-1)) ** p


def sobolev_norm(field: SpectralField, p: float = 0.0) -> float:
    """``((2L)^d sum_k (1 + |pi k / L|^2)^p |fhat_k|^2)^(1/2)``."""
    if p < 0:
        raise ValueError(f"Sobolev index p={p} must be non-negative")
    w = sobolev_weights(field.N, field.d, field.grid.L, p)
    return float(np.sqrt(field.grid.volume * np.sum(w * np.abs(field.coeffs) ** 2)))


def l1_proxy(field: SpectralField) -> float:
    """(2L)^d sum |fhat_k|, an upper bound for the L1 norm of f_N."""
    return float(field.grid.volume * np.sum(np.abs(field.coeffs)))

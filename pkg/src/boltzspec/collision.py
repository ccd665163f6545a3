"""Truncated, periodised collision operator in spectral and physical space."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft

from .errors import BudgetExceeded, UnsupportedKernel
from .kernels import KernelSpec
from .modes import (DecoupledWeights, KernelModeTable, Resolution, decoupled_weights,
                    default_resolution, node_chunks, node_count)
from .spectral_core import (SpectralField, TorusGrid, coeffs_to_values, convolve_arrays,
                            flat_wavevectors, hermitian_part, values_to_coeffs,
                            _shift_phase)

PATHS = ("classical", "fast")
DEFAULT_PHYSICAL_BUDGET = 5e8  # grid points x collision nodes


def _pad_index(N: int, P: int, d: int):
    idx = np.arange(-N, N + 1) % P
    return np.ix_(*([idx] * d))


@dataclass(frozen=True, eq=False)
class CollisionOperator:
    """Q^R on fields with |k|_inf <= N.

    ``path='classical'`` sums a dense beta table in O(N^{2d});
    ``path='fast'`` uses the M-direction separable weights and FFTs.
    """

    spec: KernelSpec
    N: int
    path: str
    table: KernelModeTable | None = None
    weights: DecoupledWeights | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}; expected one of {PATHS}")
        if self.path == "classical":
            if self.table is None:
                raise ValueError("classical path needs a KernelModeTable")
            if self.table.N != self.N:
                raise ValueError(f"table N={self.table.N} != operator N={self.N}")
        else:
            if self.weights is None:
                raise ValueError("fast path needs DecoupledWeights")
            if self.weights.N != self.N:
                raise ValueError(f"weights N={self.weights.N} != operator N={self.N}")
        self._prepare()

    @classmethod
    def from_table(cls, table: KernelModeTable) -> "CollisionOperator":
        return cls(table.spec, table.N, "classical", table=table)

    @classmethod
    def fast(cls, spec: KernelSpec, N: int, M: int = 64) -> "CollisionOperator":
        return cls(spec, N, "fast", weights=decoupled_weights(spec, N, M))

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def beta00(self) -> float:
        return float(self._cache["diag"][(self.N,) * self.d].real)

    @property
    def loss_diag(self) -> np.ndarray:
        return self._cache["diag"]

    def _prepare(self):
        d, N = self.d, self.N
        c = self._cache
        if self.path == "classical":
            c["diag"] = self.table.loss_diag
            ks = flat_wavevectors(N, d)
            n2 = 4 * N + 1
            tgt = ks[:, None, :] + ks[None, :, :] + 2 * N
            flat = np.zeros(tgt.shape[:2], dtype=np.intp)
            for a in range(d):
                flat = flat * n2 + tgt[..., a]
            c["target"] = flat.reshape(-1)
            c["full_len"] = n2 ** d
        else:
            w = self.weights
            c["diag"] = w.loss_diag().real.astype(complex)
            P = scipy.fft.next_fast_len(3 * N + 1)  # alias-free for modes |k| <= N
            c["P"] = P
            shape = w.shape
            if w.paired:
                h = w.M // 2
                # directions p and p + M/2 combine to 2 Re(alpha_p) (real, even in l)
                c["a"] = (2.0 * w.alpha[:h].real).reshape((h,) + shape)
                c["b"] = w.alpha_prime[:h].real.reshape((h,) + shape)
            else:
                c["a"] = w.alpha.reshape((w.M,) + shape)
                c["b"] = w.alpha_prime.reshape((w.M,) + shape)

    def _check(self, f: SpectralField):
        if f.N != self.N or f.d != self.d:
            raise ValueError(f"field (d={f.d}, N={f.N}) incompatible with operator "
                             f"(d={self.d}, N={self.N})")
        if f.grid.L != self.spec.L:
            raise ValueError(f"field L={f.grid.L} != kernel L={self.spec.L}")

    # -- classical
    def _gain_classical(self, fc: np.ndarray) -> np.ndarray:
        c = self._cache
        v = fc.reshape(-1)
        prod = self.table.beta * np.multiply.outer(v, v)
        full = (np.bincount(c["target"], prod.real.reshape(-1), c["full_len"])
                + 1j * np.bincount(c["target"], prod.imag.reshape(-1), c["full_len"]))
        full = full.reshape((4 * self.N + 1,) * self.d)
        sl = (slice(self.N, 3 * self.N + 1),) * self.d
        return full[sl]

    def _loss_arr(self, fc: np.ndarray) -> np.ndarray:
        return convolve_arrays(fc, self._cache["diag"] * fc, self.N)

    # -- fast
    def _to_physical_real(self, arr: np.ndarray) -> np.ndarray:
        """Real samples (scaled by P^-d) of a batch of Hermitian coefficient arrays.

        Only the k_d >= 0 half enters, and the last-axis transform is an irfft,
        so arrays must be Hermitian.
        """
        d, N, P = self.d, self.N, self._cache["P"]
        idx = np.arange(-N, N + 1) % P
        buf = np.zeros(arr.shape[:-d] + (P,) * (d - 1) + (N + 1,), complex)
        lead = (slice(None),) * (arr.ndim - d)
        buf[lead + np.ix_(*([idx] * (d - 1)), np.arange(N + 1))] = arr[..., N:]
        for ax in range(-d, -1):
            buf = scipy.fft.ifft(buf, axis=ax)
        return scipy.fft.irfft(buf, n=P, axis=-1)

    def _fast_physical(self, fc: np.ndarray, gain: bool, loss: bool) -> np.ndarray:
        """Physical-space product sum on the P^d padded grid (P^-2d scaled)."""
        c = self._cache
        d, N, P = self.d, self.N, c["P"]
        acc = np.zeros((P,) * d)
        if gain:
            if self.weights.paired:
                u = self._to_physical_real(c["a"] * fc)
                w = self._to_physical_real(c["b"] * fc)
                acc = acc + self.weights.theta_weight * np.einsum("p...,p...->...", u, w)
            else:
                axes = tuple(range(-d, 0))
                idx = _pad_index(N, P, d)
                buf = np.zeros((c["a"].shape[0],) + (P,) * d, complex)
                buf[(slice(None),) + idx] = c["a"] * fc
                u = scipy.fft.ifftn(buf, axes=axes)
                buf[(slice(None),) + idx] = c["b"] * fc
                w = scipy.fft.ifftn(buf, axes=axes)
                acc = acc + self.weights.theta_weight * np.einsum("p...,p...->...", u, w)
        if loss:
            fl = self._to_physical_real(np.stack([fc, c["diag"] * fc]))
            acc = acc - fl[0] * fl[1]
        return acc

    def _fast_coeffs(self, fc, gain, loss) -> np.ndarray:
        d, N, P = self.d, self.N, self._cache["P"]
        phys = self._fast_physical(fc, gain, loss)
        if np.iscomplexobj(phys):
            return scipy.fft.fftn(phys)[_pad_index(N, P, d)] * P ** d
        return _extract_rfft(scipy.fft.rfftn(phys), N, P, d) * P ** d

    # -- public
    def gain(self, f: SpectralField) -> SpectralField:
        self._check(f)
        if self.path == "classical":
            return f.replace(hermitian_part(self._gain_classical(f.coeffs)))
        return f.replace(hermitian_part(self._fast_coeffs(f.coeffs, True, False)))

    def loss(self, f: SpectralField) -> SpectralField:
        self._check(f)
        if self.path == "classical":
            return f.replace(hermitian_part(self._loss_arr(f.coeffs)))
        # the fast kernel accumulates gain - loss, so flip the sign here
        return f.replace(hermitian_part(-self._fast_coeffs(f.coeffs, False, True)))

    def full(self, f: SpectralField) -> SpectralField:
        self._check(f)
        if self.path == "classical":
            out = self._gain_classical(f.coeffs) - self._loss_arr(f.coeffs)
        else:
            out = self._fast_coeffs(f.coeffs, True, True)
        return f.replace(hermitian_part(out))

    def rhs_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """q_full on a raw coefficient array (used by the time steppers)."""
        if self.path == "classical":
            out = self._gain_classical(coeffs) - self._loss_arr(coeffs)
        else:
            out = self._fast_coeffs(coeffs, True, True)
        return hermitian_part(out)


def _extract_rfft(half: np.ndarray, N: int, P: int, d: int) -> np.ndarray:
    """Modes |k|_inf <= N from the rfftn of a real P^d array."""
    idx = np.arange(-N, N + 1) % P
    out = np.empty((2 * N + 1,) * d, complex)
    out[..., N:] = half[np.ix_(*([idx] * (d - 1)), np.arange(N + 1))]
    # negative last-axis modes from c_k = conj(c_{-k})
    out[..., :N] = np.conj(np.flip(out[..., N + 1:]))
    return out


def q_gain(op: CollisionOperator, f: SpectralField) -> SpectralField:
    return op.gain(f)


def q_loss(op: CollisionOperator, f: SpectralField) -> SpectralField:
    return op.loss(f)


def q_full(op: CollisionOperator, f: SpectralField) -> SpectralField:
    """P_N (Q^+ - L(f) f)."""
    return op.full(f)


# --------------------------------------------------------------------------
# physical-space oracle


def _sampler_spectral(coeffs: np.ndarray, N: int, L: float, n: int):
    """Evaluate f(v_j + theta) on the grid for a batch of shifts theta (B, d)."""
    a = np.pi / L
    d = coeffs.ndim
    ks = np.arange(-N, N + 1)

    def sample(theta: np.ndarray) -> np.ndarray:
        B = theta.shape[0]
        ph = np.ones((B,) + (1,) * d, complex)
        for ax in range(d):
            e = np.exp(1j * a * np.outer(theta[:, ax], ks))
            shape = [B] + [1] * d
            shape[1 + ax] = 2 * N + 1
            ph = ph * e.reshape(shape)
        buf = np.zeros((B,) + (n,) * d, complex)
        idx = tuple(np.arange(-N, N + 1) % n for _ in range(d))
        sign = _shift_phase(N, d)
        buf[(slice(None),) + np.ix_(*idx)] = ph * (coeffs * sign)
        return scipy.fft.ifftn(buf, axes=tuple(range(1, d + 1)), norm="forward").real

    return sample


def _sampler_callable(fn: Callable, L: float, n: int, d: int):
    nodes = -L + 2.0 * L * np.arange(n) / n
    mesh = np.stack(np.meshgrid(*([nodes] * d), indexing="ij"), axis=-1)

    def sample(theta: np.ndarray) -> np.ndarray:
        pts = mesh[None] + theta.reshape((-1,) + (1,) * d + (d,))
        pts = (pts + L) % (2 * L) - L  # periodic extension
        return np.asarray(fn(pts), dtype=float)

    return sample


def _sampler_linear(values: np.ndarray, L: float):
    from scipy.interpolate import RegularGridInterpolator

    n = values.shape[0]
    d = values.ndim
    nodes = -L + 2.0 * L * np.arange(n + 1) / n
    ext = np.pad(values, [(0, 1)] * d, mode="wrap")
    interp = RegularGridInterpolator([nodes] * d, ext)
    return _sampler_callable(lambda p: interp(p.reshape(-1, d)).reshape(p.shape[:-1]), L, n, d)


def oracle_resolution(N: int) -> Resolution:
    """Two doublings above the precompute start; products reach |k| = 2N."""
    return default_resolution(N).doubled().doubled()


def q_physical_direct(f, spec: KernelSpec, gain_only: bool = False, method: str = "fast-direct",
                      resolution: Resolution | None = None, n_phys: int | None = None,
                      interp: str = "spectral", budget: float = DEFAULT_PHYSICAL_BUDGET,
                      batch: int = 64) -> np.ndarray:
    """Pointwise quadrature of the truncated operator on the n_phys^d grid.

    ``f`` may be grid values, a SpectralField, or a callable of points
    (..., d) that is sampled with periodic wrap-around. The node set is the
    one used by the mode precompute for ``method`` and ``resolution``.
    """
    d = spec.d
    L = spec.L
    if isinstance(f, SpectralField):
        n = n_phys or f.grid.n_phys
        sample = _sampler_spectral(f.coeffs, f.N, L, n)
        base = coeffs_to_values(f.coeffs, f.N, L, n).real
    elif callable(f):
        if n_phys is None:
            raise ValueError("n_phys required when f is a callable")
        n = n_phys
        sample = _sampler_callable(f, L, n, d)
        base = sample(np.zeros((1, d)))[0]
    else:
        values = np.asarray(f, dtype=float)
        n = values.shape[0]
        if values.shape != (n,) * d:
            raise ValueError(f"values must be a ({n},)*{d} grid")
        base = values
        if interp == "spectral":
            Nb = (n - 1) // 2
            sample = _sampler_spectral(values_to_coeffs(values, Nb), Nb, L, n)
        elif interp == "linear":
            sample = _sampler_linear(values, L)
        else:
            raise ValueError(f"unknown interpolation {interp!r}")
    if resolution is None:
        band = f.N if isinstance(f, SpectralField) else max(2, (n - 2) // 4)
        resolution = oracle_resolution(band)
    cost = float(n) ** d * node_count(spec, method, resolution)
    if cost > budget:
        raise BudgetExceeded(f"physical-space oracle cost {cost:.2e} exceeds budget {budget:.2e}")
    if d == 3 and method == "fast-direct":
        raise UnsupportedKernel("fast parametrisation implemented for d=2 only")
    gain = np.zeros((n,) * d)
    rate = np.zeros((n,) * d)
    for chunk in node_chunks(spec, method, resolution):
        for sub in chunk.split(batch):
            w = sub.weights.reshape((-1,) + (1,) * d)
            gain += np.sum(w * sample(sub.theta_p) * sample(sub.theta_ps), axis=0)
            if not gain_only:
                rate += np.sum(w * sample(sub.theta_s), axis=0)
    if gain_only:
        return gain
    return gain - base * rate


def physical_to_field(values: np.ndarray, grid: TorusGrid) -> SpectralField:
    """Project physical samples (any even n >= 2(2N+1)) onto the modes of ``grid``."""
    return SpectralField(grid, values_to_coeffs(values, grid.N))

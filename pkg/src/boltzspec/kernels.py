"""Collision kernels: VHS family and the two change-of-variable kernels."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np


class DealiasingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """B(|u|, cos theta) = C_gamma |u|^gamma b(cos theta) truncated at radius R on [-L, L]^d.

    ``angular`` is b; ``None`` means b = 1 (VHS).  ``allow_aliasing`` turns
    the R >= sqrt(2) L requirement into a warning for experiments.
    """

    d: int = 2
    gamma: float = 0.0
    C_gamma: float = 1.0
    R: float = 2.0 * math.pi
    L: float = math.pi
    angular: Callable[[np.ndarray], np.ndarray] | None = None
    allow_aliasing: bool = False

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"kernel dimension d={self.d} not supported")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma={self.gamma} outside [0, 1]")
        if not self.C_gamma > 0:
            raise ValueError(f"C_gamma={self.C_gamma} must be positive")
        if not (self.L > 0 and self.R > 0):
            raise ValueError("L and R must be positive")
        if self.R < math.sqrt(2.0) * self.L * (1 - 1e-14):
            msg = f"R={self.R} < sqrt(2)*L={math.sqrt(2) * self.L}: violates dealiasing"
            if not self.allow_aliasing:
                raise ValueError(msg)
            warnings.warn(msg, DealiasingWarning, stacklevel=2)

    @property
    def is_vhs(self) -> bool:
        return self.angular is None

    @property
    def maxwellian_pseudo(self) -> bool:
        """gamma = 0: outside the hard-potential hypotheses, used for the fast d=2 path."""
        return self.gamma == 0.0

    @property
    def fast_separable(self) -> bool:
        """Fast-truncation kernel constant in (y, z): d=2 gamma=0 or d=3 gamma=1."""
        return self.is_vhs and self.gamma == float(self.d - 2)

    def b(self, cos_theta):
        if self.angular is None:
            return np.ones_like(np.asarray(cos_theta, dtype=float))
        return np.asarray(self.angular(np.asarray(cos_theta, dtype=float)), dtype=float)


def eval_B(u_norm, cos_theta, spec: KernelSpec):
    u = np.asarray(u_norm, dtype=float)
    if np.any(u < 0):
        raise ValueError("relative speed must be non-negative")
    if spec.gamma == 0.0:
        radial = np.ones_like(u)
    else:
        radial = u ** spec.gamma
    out = spec.C_gamma * radial * spec.b(cos_theta)
    return out if out.ndim else float(out)


def eval_B_class(g, omega, spec: KernelSpec):
    """2^(d-1) (1 - g_hat.omega)^(d/2-1) B(|g|, 2 (g_hat.omega)^2 - 1); vectorised over leading axes."""
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(np.abs(np.linalg.norm(omega, axis=-1) - 1.0) > 1e-12):
        raise ValueError("omega must be a unit vector")
    gn = np.linalg.norm(g, axis=-1)
    safe = np.where(gn > 0, gn, 1.0)
    c = np.clip(np.sum(g * omega, axis=-1) / safe, -1.0, 1.0)
    d = spec.d
    ang = (1.0 - c) ** (d / 2.0 - 1.0) if d != 2 else np.ones_like(c)
    val = 2.0 ** (d - 1) * ang * eval_B(gn, 2.0 * c * c - 1.0, spec)
    # removable point for gamma > 0; for gamma = 0 g_hat is undefined and 0 is used
    val = np.where(gn > 0, val, 0.0)
    return val if np.ndim(val) else float(val)


def eval_B_fast(y, z, spec: KernelSpec):
    """2^(d-1) B(|y+z|, -y.(y+z)/(|y||y+z|)) |y+z|^-(d-2) for y orthogonal to z."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    s = y + z
    sn = np.linalg.norm(s, axis=-1)
    yn = np.linalg.norm(y, axis=-1)
    d = spec.d
    net = spec.gamma - (d - 2)
    if np.any(yn == 0) and not spec.is_vhs:
        raise ValueError("angular argument undefined at y = 0")
    if net < 0 and np.any(sn == 0):
        raise ValueError("singular fast kernel at y + z = 0")
    if spec.is_vhs:
        if net == 0:
            val = np.full(np.shape(sn), 2.0 ** (d - 1) * spec.C_gamma)
        else:
            val = 2.0 ** (d - 1) * spec.C_gamma * sn ** net
    else:
        cos_t = -np.sum(y * s, axis=-1) / (yn * sn)
        val = 2.0 ** (d - 1) * eval_B(sn, cos_t, spec) * sn ** (-(d - 2.0))
    return val if np.ndim(val) else float(val)

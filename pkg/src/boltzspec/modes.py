"""Kernel modes beta(l, m) for the classical and fast truncations.

    beta(l, m) = int_{C_R} B(y, z) exp(i pi/L (l.Theta'(y, z) + m.Theta'_*(y, z))) dy dz

Classical truncation: (y, z) = (g, omega) in B_R x S^{d-1},
Theta' = -(g - |g| omega)/2, Theta'_* = -(g + |g| omega)/2, kernel B^class.
Fast truncation: y = rho e_theta, z = rho' e_theta_perp with rho in [0, R],
rho' in [-R, R] (this resolves delta(y.z) with unit Jacobian in d=2),
Theta' = y, Theta'_* = z, kernel B^fast.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .errors import (BudgetExceeded, CacheMismatch, FormatError,
                     QuadratureNotConverged, UnsupportedKernel)
from .kernels import KernelSpec, eval_B_fast
from .quadrature import (circle_points, gauss_jacobi, gauss_legendre,
                         periodic_uniform, sphere_rule)
from .spectral_core import flat_wavevectors

METHODS = ("classical", "fast-direct")
METHOD_TAGS = {"classical": 0, "fast-direct": 1}
DEFAULT_TOL = 1e-8
DEFAULT_MAX_DOUBLINGS = 5
DEFAULT_TABLE_BUDGET = {2: 17 ** 4, 3: 9 ** 6}  # N=8 in d=2, N=4 in d=3
_CHUNK_NODES = 1 << 14


@dataclass(frozen=True)
class Resolution:
    """Quadrature sizes: radial Gauss nodes and the base angular count."""

    radial: int
    angular: int

    def doubled(self) -> "Resolution":
        return Resolution(2 * self.radial, 2 * self.angular)

    def halved(self, floor: int = 4) -> "Resolution":
        a = max(floor, self.angular // 2)
        return Resolution(max(floor, self.radial // 2), a + (a % 2))


def default_resolution(N: int) -> Resolution:
    return Resolution(2 * N + 8, 4 * N + 8)


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"unknown mode method {method!r}; expected one of {METHODS}")


# --------------------------------------------------------------------------
# quadrature node sets over C_R


@dataclass(frozen=True, eq=False)
class CollisionNodes:
    """Discrete collision parameters: shifts v' - v, v'_* - v and weights.

    ``weights`` already include the kernel value and the Jacobian.
    """

    theta_p: np.ndarray
    theta_ps: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    @property
    def theta_s(self) -> np.ndarray:
        # momentum conservation: v' + v'_* = v + v_*
        return self.theta_p + self.theta_ps

    def split(self, size: int = _CHUNK_NODES) -> Iterator["CollisionNodes"]:
        for i in range(0, len(self), size):
            sl = slice(i, i + size)
            yield CollisionNodes(self.theta_p[sl], self.theta_ps[sl], self.weights[sl])


def _radial_rule(spec: KernelSpec, n: int):
    r = gauss_legendre(n, 0.0, spec.R)
    return r.nodes, r.weights


def _orthonormal_frame(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane orthogonal to each row of u (d=3)."""
    ref = np.where(np.abs(u[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(u, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(u, e1)
    return e1, e2


def _classical_chunks(spec: KernelSpec, res: Resolution) -> Iterator[CollisionNodes]:
    rho, wr = _radial_rule(spec, res.radial)
    d = spec.d
    if d == 2:
        if res.angular % 2:
            raise ValueError("classical d=2 quadrature needs an even angular count")
        pts, wa = sphere_rule(2, res.angular)
        c = pts @ pts.T
        ang_w = np.outer(wa, wa) * spec.b(2 * c * c - 1)
        gh = np.repeat(pts, len(pts), axis=0)
        om = np.tile(pts, (len(pts), 1))
        ang_w = ang_w.reshape(-1)
        for r, w in zip(rho, wr):
            kern = 2.0 * spec.C_gamma * r ** spec.gamma  # b is already in ang_w
            g = r * gh
            yield CollisionNodes(-0.5 * (g - r * om), -0.5 * (g + r * om), w * r * kern * ang_w)
        return
    # d = 3: omega rule aligned with g_hat; the Jacobi weight absorbs (1 - g_hat.omega)^(1/2)
    gh_all, wg_all = sphere_rule(3, res.angular)
    jac = gauss_jacobi(res.angular, 0.5, 0.0)
    psi = periodic_uniform(2 * res.angular)
    x = jac.nodes[None, :, None, None]
    s = np.sqrt(1.0 - jac.nodes ** 2)[None, :, None, None]
    cp = np.cos(psi.nodes)[None, None, :, None]
    sp = np.sin(psi.nodes)[None, None, :, None]
    per_g = len(jac) * len(psi)
    block = max(1, _CHUNK_NODES // (4 * per_g))
    for i in range(0, len(gh_all), block):
        gh, wg = gh_all[i:i + block], wg_all[i:i + block]
        e1, e2 = _orthonormal_frame(gh)
        om = x * gh[:, None, None, :] + s * (cp * e1[:, None, None, :] + sp * e2[:, None, None, :])
        om = om.reshape(-1, 3)
        ghr = np.repeat(gh, per_g, axis=0)
        xw = np.broadcast_to(x[..., 0], (len(gh), len(jac), len(psi))).reshape(-1)
        base_w = (wg[:, None, None] * jac.weights[None, :, None]
                  * psi.weights[None, None, :]).reshape(-1) * spec.b(2 * xw * xw - 1)
        for r, w in zip(rho, wr):
            kern = 4.0 * spec.C_gamma * r ** spec.gamma
            g, ro = r * ghr, r * om
            tp, tps = -0.5 * (g - ro), -0.5 * (g + ro)
            wt = 0.25 * w * r * r * kern * base_w
            # symmetrise under (g_hat, omega) swap and overall reflection
            yield CollisionNodes(np.concatenate([tp, -tp, -tp, tp]),
                                 np.concatenate([tps, tps, -tps, -tps]),
                                 np.concatenate([wt, wt, wt, wt]))


def _fast_chunks(spec: KernelSpec, res: Resolution) -> Iterator[CollisionNodes]:
    if spec.d != 2:
        raise UnsupportedKernel("fast truncation quadrature implemented for d=2 only")
    if res.angular % 2:
        raise ValueError("fast quadrature needs an even angular count")
    th = periodic_uniform(res.angular)
    rho, wr = _radial_rule(spec, res.radial)
    rp = gauss_legendre(res.radial, -spec.R, spec.R)
    for t, wt in zip(th.nodes, th.weights):
        e = np.array([np.cos(t), np.sin(t)])
        ep = np.array([-np.sin(t), np.cos(t)])
        y = (rho[:, None, None] * e).repeat(len(rp), axis=1).reshape(-1, 2)
        z = np.broadcast_to(rp.nodes[None, :, None] * ep, (len(rho), len(rp), 2)).reshape(-1, 2)
        K = eval_B_fast(y, z, spec)
        w = wt * np.outer(wr, rp.weights).reshape(-1) * K
        yield CollisionNodes(y, z, w)


def node_chunks(spec: KernelSpec, method: str, res: Resolution) -> Iterator[CollisionNodes]:
    _check_method(method)
    if method == "classical":
        return _classical_chunks(spec, res)
    return _fast_chunks(spec, res)


def node_count(spec: KernelSpec, method: str, res: Resolution) -> int:
    if method == "classical":
        if spec.d == 2:
            return res.radial * res.angular ** 2
        return res.radial * 4 * (2 * res.angular ** 2) * (2 * res.angular ** 2)
    return res.angular * res.radial ** 2


def collision_nodes(spec: KernelSpec, method: str, res: Resolution) -> CollisionNodes:
    parts = list(node_chunks(spec, method, res))
    return CollisionNodes(*(np.concatenate([getattr(p, a) for p in parts])
                            for a in ("theta_p", "theta_ps", "weights")))


def plane_waves(theta: np.ndarray, N: int, d: int, scale: float) -> np.ndarray:
    """exp(i scale k.theta_n) for every node n and |k|_inf <= N, shape (n, (2N+1)^d)."""
    ks = np.arange(-N, N + 1)
    axes = [np.exp(1j * scale * np.outer(theta[:, a], ks)) for a in range(d)]
    out = axes[0]
    for ax in axes[1:]:
        out = (out[:, :, None] * ax[:, None, :]).reshape(len(theta), -1)
    return out


# --------------------------------------------------------------------------
# structured (factorised) evaluations of the product rules


def classical2d_factors(spec: KernelSpec, res: Resolution, q: np.ndarray):
    """S_r(q) = sum_j w_j exp(i (pi/2L) rho_r q.omega_j) and radial weights W_r.

    For d=2 with constant angular law the classical rule factorises:
    beta(l, m) = sum_r W_r S_r(-(l+m)) S_r(l-m).
    """
    if res.angular % 2:
        raise ValueError("classical d=2 quadrature needs an even angular count")
    rho, wr = _radial_rule(spec, res.radial)
    pts, wa = sphere_rule(2, res.angular)
    c = np.pi / (2 * spec.L)
    W = wr * rho * 2.0 * spec.C_gamma * rho ** spec.gamma
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    proj = q @ pts.T  # (P, n_a)
    S = np.empty((len(rho), len(q)), complex)
    step = max(1, (1 << 22) // max(1, proj.size))
    for i in range(0, len(rho), step):
        ph = np.exp(1j * c * rho[i:i + step, None, None] * proj[None])
        S[i:i + step] = ph @ wa
    return W, S


def fast2d_factors(spec: KernelSpec, res: Resolution, ks: np.ndarray,
                   exact_radial: bool = False):
    """U_t(k) = sum_rho w exp(i pi/L rho k.e_t), V_t(k) likewise over rho' in [-R, R].

    For constant fast kernel, beta(l, m) = sum_t w_t K U_t(l) V_t(m).
    With ``exact_radial`` the rho, rho' integrals are taken in closed form
    and only the direction rule (res.angular) is discrete.
    Returns (w_t * K, U, V) with U, V of shape (n_theta, P).
    """
    if not spec.fast_separable or spec.d != 2:
        raise UnsupportedKernel("factorised fast rule needs a constant kernel in d=2")
    if res.angular % 2:
        raise ValueError("fast quadrature needs an even angular count")
    th = periodic_uniform(res.angular)
    a = np.pi / spec.L
    R = spec.R
    e = circle_points(th.nodes)
    ep = np.stack([-e[:, 1], e[:, 0]], axis=-1)
    ks = np.asarray(ks, dtype=float).reshape(-1, 2)
    s = a * (e @ ks.T)
    sp = a * (ep @ ks.T)
    K = eval_B_fast(np.array([1.0, 0.0]), np.array([0.0, 1.0]), spec)
    if exact_radial:
        U = R * np.exp(0.5j * s * R) * np.sinc(s * R / (2 * np.pi))
        V = (2 * R * np.sinc(sp * R / np.pi)).astype(complex)
        return th.weights * K, U, V
    rho, wr = _radial_rule(spec, res.radial)
    rp = gauss_legendre(res.radial, -R, R)
    U = np.empty(s.shape, complex)
    V = np.empty(s.shape, complex)
    step = max(1, (1 << 22) // max(1, ks.shape[0] * len(rho)))
    for i in range(0, len(th.nodes), step):
        sl = slice(i, i + step)
        U[sl] = np.exp(1j * s[sl, :, None] * rho) @ wr
        V[sl] = np.exp(1j * sp[sl, :, None] * rp.nodes) @ rp.weights
    return th.weights * K, U, V


def _uses_classical2d_factors(spec: KernelSpec, method: str) -> bool:
    return method == "classical" and spec.d == 2 and spec.is_vhs


def _uses_fast2d_factors(spec: KernelSpec, method: str) -> bool:
    return method == "fast-direct" and spec.d == 2 and spec.fast_separable


def beta_entries(spec: KernelSpec, method: str, res: Resolution, ls, ms,
                 exact_radial: bool = False) -> np.ndarray:
    """beta(l_i, m_i) for paired lists of integer vectors at a fixed resolution.

    ``exact_radial`` applies to the factorised fast rule only.
    """
    _check_method(method)
    ls = np.atleast_2d(np.asarray(ls, dtype=float))
    ms = np.atleast_2d(np.asarray(ms, dtype=float))
    if _uses_classical2d_factors(spec, method):
        W, S = classical2d_factors(spec, res, np.concatenate([-(ls + ms), ls - ms]))
        P = len(ls)
        return (W[:, None] * S[:, :P] * S[:, P:]).sum(axis=0)
    if _uses_fast2d_factors(spec, method):
        wk, U, V = fast2d_factors(spec, res, np.concatenate([ls, ms]), exact_radial)
        P = len(ls)
        return (wk[:, None] * U[:, :P] * V[:, P:]).sum(axis=0)
    a = np.pi / spec.L
    out = np.zeros(len(ls), complex)
    for chunk in node_chunks(spec, method, res):
        for sub in chunk.split():
            ph = np.exp(1j * a * (sub.theta_p @ ls.T + sub.theta_ps @ ms.T))
            out += sub.weights @ ph
    return out


def beta_dense(spec: KernelSpec, method: str, N: int, res: Resolution) -> np.ndarray:
    """All beta(l, m), |l|,|m| <= N, as a ((2N+1)^d, (2N+1)^d) array, row-major in l.

    Only rows l <= 0 in flat order are computed; the rest follow from
    beta(-l, -m) = conj(beta(l, m)).
    """
    _check_method(method)
    d = spec.d
    K = (2 * N + 1) ** d
    half = K // 2 + 1
    ks = flat_wavevectors(N, d)
    acc = np.zeros((half, K), complex)
    if _uses_classical2d_factors(spec, method):
        qs = flat_wavevectors(2 * N, 2)
        W, S = classical2d_factors(spec, res, qs)
        n2 = 4 * N + 1
        li, mi = np.meshgrid(np.arange(half), np.arange(K), indexing="ij")
        l, m = ks[li], ks[mi]
        p = -(l + m) + 2 * N
        q = (l - m) + 2 * N
        pf = (p[..., 0] * n2 + p[..., 1]).reshape(-1)
        qf = (q[..., 0] * n2 + q[..., 1]).reshape(-1)
        flat = np.zeros(half * K, complex)
        for r in range(len(W)):
            flat += W[r] * S[r, pf] * S[r, qf]
        acc = flat.reshape(half, K)
    elif _uses_fast2d_factors(spec, method):
        wk, U, V = fast2d_factors(spec, res, ks)
        acc = (U[:, :half] * wk[:, None]).T @ V
    else:
        a = np.pi / spec.L
        for chunk in node_chunks(spec, method, res):
            for sub in chunk.split(max(256, (1 << 21) // K)):
                E1 = plane_waves(sub.theta_p, N, d, a)[:, :half]
                E2 = plane_waves(sub.theta_ps, N, d, a)
                acc += (E1 * sub.weights[:, None]).T @ E2
    beta = np.empty((K, K), complex)
    beta[:half] = acc
    beta[half:] = np.conj(acc[: K - half][::-1, ::-1])
    return beta


def certify(compute: Callable[[Resolution], np.ndarray], res: Resolution,
            tol: float = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS):
    """Double the resolution until max |change| / max |value| < tol.

    Returns (values, resolution, delta).
    """
    old = compute(res)
    delta = np.inf
    for _ in range(max_doublings):
        res = res.doubled()
        new = compute(res)
        scale = max(float(np.max(np.abs(new))), np.finfo(float).tiny)
        delta = float(np.max(np.abs(new - old))) / scale
        if delta < tol:
            return new, res, delta
        old = new
    raise QuadratureNotConverged(delta, res)


def _single(spec, method, l, m, resolution, tol, max_doublings, N_hint):
    l = np.asarray(l, dtype=float).reshape(1, -1)
    m = np.asarray(m, dtype=float).reshape(1, -1)
    if resolution is None:
        N_hint = int(max(1, np.max(np.abs(np.concatenate([l, m])))) if N_hint is None else N_hint)
        resolution = default_resolution(N_hint)
    if tol is None:
        return complex(beta_entries(spec, method, resolution, l, m)[0])
    val, _, _ = certify(lambda r: beta_entries(spec, method, r, l, m), resolution, tol,
                        max_doublings)
    return complex(val[0])


def beta_classical(l, m, spec: KernelSpec, resolution: Resolution | None = None,
                   tol: float | None = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                   N: int | None = None) -> complex:
    """Certified classical kernel mode; ``tol=None`` evaluates once at ``resolution``."""
    return _single(spec, "classical", l, m, resolution, tol, max_doublings, N)


def beta_fast_direct(l, m, spec: KernelSpec, resolution: Resolution | None = None,
                     tol: float | None = DEFAULT_TOL, max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                     N: int | None = None) -> complex:
    """Fast-truncation kernel mode by direct quadrature over (theta, rho, rho')."""
    return _single(spec, "fast-direct", l, m, resolution, tol, max_doublings, N)


# --------------------------------------------------------------------------
# tables


@dataclass(frozen=True, eq=False)
class KernelModeTable:
    spec: KernelSpec
    N: int
    method: str
    beta: np.ndarray = field(repr=False)
    quad_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        K = (2 * self.N + 1) ** self.spec.d
        if self.beta.shape != (K, K):
            raise ValueError(f"beta shape {self.beta.shape} != {(K, K)}")
        self.beta.setflags(write=False)

    @property
    def size(self) -> int:
        return (2 * self.N + 1) ** self.spec.d

    @property
    def loss_diag(self) -> np.ndarray:
        """beta(m, m) reshaped to the coefficient layout."""
        return np.diagonal(self.beta).reshape((2 * self.N + 1,) * self.spec.d)

    def flat_index(self, k) -> int:
        k = np.asarray(k) + self.N
        n = 2 * self.N + 1
        idx = 0
        for c in k:
            idx = idx * n + int(c)
        return idx

    def entry(self, l, m) -> complex:
        return complex(self.beta[self.flat_index(l), self.flat_index(m)])


def check_budget(spec: KernelSpec, N: int, budget_entries: int | None = None):
    budget = DEFAULT_TABLE_BUDGET[spec.d] if budget_entries is None else budget_entries
    entries = (2 * N + 1) ** (2 * spec.d)
    if entries > budget:
        raise BudgetExceeded(
            f"dense mode table needs {entries} entries (> budget {budget}); "
            "use the fast path (method = fast)"
        )


def precompute_table(spec: KernelSpec, N: int, method: str = "classical",
                     resolution: Resolution | None = None, tol: float | None = DEFAULT_TOL,
                     max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                     budget_entries: int | None = None) -> KernelModeTable:
    """Dense beta table, certified by resolution doubling unless ``tol`` is None."""
    _check_method(method)
    check_budget(spec, N, budget_entries)
    res = default_resolution(N) if resolution is None else resolution
    if tol is None:
        beta = beta_dense(spec, method, N, res)
        meta = {"radial": res.radial, "angular": res.angular}
    else:
        beta, res, delta = certify(lambda r: beta_dense(spec, method, N, r), res, tol,
                                   max_doublings)
        meta = {"radial": res.radial, "angular": res.angular, "tol": tol, "delta": delta}
    return KernelModeTable(spec, N, method, beta, meta)


# --------------------------------------------------------------------------
# separable weights for the fast method


@dataclass(frozen=True, eq=False)
class DecoupledWeights:
    """beta(l, m) ~ theta_weight * sum_p alpha[p, l] * alpha_prime[p, m]."""

    spec: KernelSpec
    N: int
    M: int
    alpha: np.ndarray = field(repr=False)
    alpha_prime: np.ndarray = field(repr=False)
    theta_weight: float = 0.0

    @property
    def shape(self):
        return (2 * self.N + 1,) * self.spec.d

    @property
    def paired(self) -> bool:
        """Directions p and p + M/2 give conjugate alpha and equal alpha_prime."""
        return self.M % 2 == 0

    def reconstruct(self, l, m) -> complex:
        n = 2 * self.N + 1
        li = np.ravel_multi_index(tuple(np.asarray(l) + self.N), (n,) * self.spec.d)
        mi = np.ravel_multi_index(tuple(np.asarray(m) + self.N), (n,) * self.spec.d)
        return complex(self.theta_weight * np.sum(self.alpha[:, li] * self.alpha_prime[:, mi]))

    def dense(self) -> np.ndarray:
        """Full separable approximation of the beta table."""
        return self.theta_weight * (self.alpha.T @ self.alpha_prime)

    def loss_diag(self) -> np.ndarray:
        diag = self.theta_weight * np.sum(self.alpha * self.alpha_prime, axis=0)
        return diag.reshape(self.shape)


def decoupled_weights(spec: KernelSpec, N: int, M: int) -> DecoupledWeights:
    """Closed-form separable weights for a constant fast kernel in d=2.

    alpha_p(l) = K int_0^R exp(i s rho) d rho, s = pi/L l.e_p, and
    alpha'_p(m) = int_{-R}^{R} exp(i s' rho') d rho', s' = pi/L m.e_p_perp.
    """
    if M < 1:
        raise ValueError("need at least one direction")
    if spec.d != 2:
        raise UnsupportedKernel("decoupled fast weights are implemented for d=2")
    if not spec.fast_separable:
        raise UnsupportedKernel(
            f"fast kernel is not separable for d={spec.d}, gamma={spec.gamma} "
            "(needs gamma = d - 2 and constant angular law)"
        )
    th = periodic_uniform(M)
    e = circle_points(th.nodes)
    ep = np.stack([-e[:, 1], e[:, 0]], axis=-1)
    ks = flat_wavevectors(N, 2).astype(float)
    a = np.pi / spec.L
    R = spec.R
    s = a * (e @ ks.T)
    sp = a * (ep @ ks.T)
    K = eval_B_fast(np.array([1.0, 0.0]), np.array([0.0, 1.0]), spec)
    # (e^{isR}-1)/(is) = R e^{isR/2} sinc(sR/2) stays finite at s = 0
    alpha = K * R * np.exp(0.5j * s * R) * np.sinc(s * R / (2 * np.pi))
    alpha_p = (2 * R * np.sinc(sp * R / np.pi)).astype(complex)
    return DecoupledWeights(spec, N, M, alpha, alpha_p, float(th.weights[0]))


# --------------------------------------------------------------------------
# BKMT cache files

_BKMT_MAGIC = b"BKMT"
_BKMT_VERSION = 1
_BKMT_HEADER = struct.Struct("<4sIBIIddddII")


def _spec_from_header(d, L, R, gamma, C):
    return KernelSpec(d=d, gamma=gamma, C_gamma=C, R=R, L=L, allow_aliasing=True)


def table_to_bytes(table: KernelModeTable) -> bytes:
    spec = table.spec
    if not spec.is_vhs:
        raise FormatError("only constant angular laws can be serialised")
    head = _BKMT_HEADER.pack(_BKMT_MAGIC, _BKMT_VERSION, METHOD_TAGS[table.method], spec.d,
                             table.N, spec.L, spec.R, spec.gamma, spec.C_gamma,
                             table.quad_meta.get("radial", 0), table.quad_meta.get("angular", 0))
    body = head + np.ascontiguousarray(table.beta, dtype="<c16").tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def table_from_bytes(data: bytes) -> KernelModeTable:
    if len(data) < _BKMT_HEADER.size + 4:
        raise FormatError("mode table file truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    (magic, version, tag, d, N, L, R, gamma, C, nr, na) = _BKMT_HEADER.unpack_from(body)
    if magic != _BKMT_MAGIC:
        raise FormatError(f"bad magic {magic!r}; not a mode table")
    if version != _BKMT_VERSION:
        raise FormatError(f"unsupported mode table version {version}")
    if zlib.crc32(body) != crc:
        raise FormatError("mode table CRC mismatch")
    methods = {v: k for k, v in METHOD_TAGS.items()}
    if tag not in methods:
        raise FormatError(f"unknown method tag {tag}")
    K = (2 * N + 1) ** d
    payload = body[_BKMT_HEADER.size:]
    if len(payload) != 16 * K * K:
        raise FormatError("mode table payload has the wrong size")
    beta = np.frombuffer(payload, dtype="<c16").astype(complex).reshape(K, K)
    spec = _spec_from_header(d, L, R, gamma, C)
    return KernelModeTable(spec, N, methods[tag], beta, {"radial": nr, "angular": na})


def save_table(table: KernelModeTable, path) -> Path:
    path = Path(path)
    path.write_bytes(table_to_bytes(table))
    return path


def load_table(path) -> KernelModeTable:
    return table_from_bytes(Path(path).read_bytes())


def cache_key(spec: KernelSpec, N: int, method: str, resolution: Resolution,
              tol: float | None) -> str:
    text = repr((spec.d, float(spec.L), float(spec.R), float(spec.gamma), float(spec.C_gamma),
                 N, method, resolution.radial, resolution.angular, tol))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def cache_path(cache_dir, spec, N, method, resolution, tol) -> Path:
    key = cache_key(spec, N, method, resolution, tol)
    return Path(cache_dir) / f"modes_{method}_d{spec.d}_N{N}_{key}.bkmt"


def check_table_matches(table: KernelModeTable, spec: KernelSpec, N: int, method: str):
    s = table.spec
    same = (s.d == spec.d and table.N == N and table.method == method and s.L == spec.L
            and s.R == spec.R and s.gamma == spec.gamma and s.C_gamma == spec.C_gamma)
    if not same:
        raise CacheMismatch(
            f"cached mode table (d={s.d}, N={table.N}, method={table.method}, L={s.L}, R={s.R}, "
            f"gamma={s.gamma}, C={s.C_gamma}) does not match the requested configuration"
        )


def cached_table(spec: KernelSpec, N: int, method: str, cache_dir,
                 resolution: Resolution | None = None, tol: float | None = DEFAULT_TOL,
                 compute: bool = True, **kw) -> KernelModeTable:
    res = default_resolution(N) if resolution is None else resolution
    path = cache_path(cache_dir, spec, N, method, res, tol)
    if path.exists():
        table = load_table(path)
        check_table_matches(table, spec, N, method)
        return table
    if not compute:
        raise CacheMismatch(f"no mode table at {path}; run `precompute` first")
    table = precompute_table(spec, N, method, res, tol, **kw)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    return table

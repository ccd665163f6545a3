"""Deterministic quadrature rules on intervals, circles and spheres."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@dataclass(frozen=True, eq=False)
class Rule1D:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights differ in length")

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, fn) -> complex | float:
        return np.sum(self.weights * fn(self.nodes))


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> Rule1D:
    """n-point Gauss-Legendre rule on [a, b], exact to degree 2n-1."""
    if n < 1:
        raise ValueError("need at least one node")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = leggauss(n)
    h = 0.5 * (b - a)
    return Rule1D(a + h * (x + 1.0), h * w, (a, b))


def gauss_jacobi(n: int, alpha: float, beta: float = 0.0) -> Rule1D:
    """Rule for int_{-1}^{1} (1-x)^alpha (1+x)^beta g(x) dx; weights include the Jacobi factor."""
    x, w = roots_jacobi(n, alpha, beta)
    return Rule1D(np.asarray(x), np.asarray(w), (-1.0, 1.0))


def periodic_uniform(n: int, period: float = 2.0 * np.pi) -> Rule1D:
    """Trapezoid rule j*period/n with equal weights (exact on trig degree < n)."""
    if n < 1:
        raise ValueError("need at least one node")
    return Rule1D(period * np.arange(n) / n, np.full(n, period / n), (0.0, period))


def circle_points(theta: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (shape (P, d)) and weights on S^{d-1}.

    d=2: n uniform angles.  d=3: Gauss-Legendre in cos(theta) with n nodes
    times 2n uniform azimuths.
    """
    if d == 2:
        r = periodic_uniform(n)
        return circle_points(r.nodes), r.weights.copy()
    if d == 3:
        polar = gauss_legendre(n, -1.0, 1.0)
        azim = periodic_uniform(2 * n)
        ct = polar.nodes[:, None]
        st = np.sqrt(1.0 - ct * ct)
        ph = azim.nodes[None, :]
        pts = np.stack(
            [np.broadcast_to(st * np.cos(ph), (n, 2 * n)),
             np.broadcast_to(st * np.sin(ph), (n, 2 * n)),
             np.broadcast_to(ct, (n, 2 * n))],
            axis=-1,
        ).reshape(-1, 3)
        w = (polar.weights[:, None] * azim.weights[None, :]).reshape(-1)
        return pts, w
    raise ValueError(f"sphere rule for d={d} not supported")


def sphere_area(d: int) -> float:
    return 2.0 * np.pi if d == 2 else 4.0 * np.pi

"""Integration on unit spheres S^{m-1}.

Deterministic rules are built recursively: equally spaced angles on the
circle, then a Gauss-Jacobi rule in the polar coordinate (weight
(1-u^2)^((m-3)/2), the Gauss-Legendre family adapted to the sphere's
polar Jacobian) against a rule on S^{m-2}.  Node counts grow like
order^(m-1), so deterministic rules are practical for m <= 4; higher
spheres use seeded Monte Carlo or the slicing recursion in
:mod:`sphavg.averages`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .core import Seed, as_seed

__all__ = ["QuadratureRule", "surface_area", "sample_sphere", "product_rule"]


def surface_area(m: int) -> float:
    """Surface measure of S^{m-1}: 2 pi^(m/2) / Gamma(m/2)."""
    if m < 2:
        raise ValueError("ambient dimension m must be >= 2")
    return float(2.0 * math.pi ** (m / 2.0) / math.exp(gammaln(m / 2.0)))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integration on S^{m-1} in R^m.

    Deterministic rules carry weights summing to surface_area(m);
    Monte Carlo rules carry the uniform weight surface_area(m)/count.
    """

    m: int
    nodes: np.ndarray    # (count, m), unit vectors
    weights: np.ndarray  # (count,), positive
    mode: str            # "deterministic" | "montecarlo"

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, g) -> float:
        """Integrate a callable g((count, m) -> (count,)) against the rule."""
        return float(np.sum(self.weights * np.asarray(g(self.nodes))))


def sample_sphere(m: int, count: int, seed: Seed | int) -> QuadratureRule:
    """Uniform Monte Carlo rule on S^{m-1}, reproducible per seed.

    Nodes are standard-normal vectors normalized to unit length
    (dimension-independent cost, no rejection).
    """
    if m < 2:
        raise ValueError("ambient dimension m must be >= 2")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = as_seed(seed).rng()
    x = rng.standard_normal((count, m))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    w = np.full(count, surface_area(m) / count)
    return QuadratureRule(m, x, w, "montecarlo")


def product_rule(m: int, order: int) -> QuadratureRule:
    """Deterministic rule on S^{m-1}, exact for low-degree polynomials.

    m = 2 uses `order` equally spaced angles with equal weights
    (spectrally accurate for smooth integrands).  m > 2 takes the
    product of an `order`-point Gauss-Jacobi rule in u = cos(polar
    angle), weight (1-u^2)^((m-3)/2), with the rule on S^{m-2}:
    node (sqrt(1-u^2)*w, u) for w on S^{m-2}.
    """
    if m < 2:
        raise ValueError("ambient dimension m must be >= 2")
    if order < 4:
        raise ValueError("order must be >= 4")
    if m == 2:
        theta = 2.0 * math.pi * np.arange(order) / order
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        weights = np.full(order, 2.0 * math.pi / order)
        return QuadratureRule(2, nodes, weights, "deterministic")
    alpha = (m - 3) / 2.0
    u, wu = roots_jacobi(order, alpha, alpha)
    sub = product_rule(m - 1, order)
    s = np.sqrt(1.0 - u**2)
    nodes = np.empty((order * sub.count, m))
    nodes[:, : m - 1] = (s[:, None, None] * sub.nodes[None, :, :]).reshape(-1, m - 1)
    nodes[:, m - 1] = np.repeat(u, sub.count)
    weights = (wu[:, None] * sub.weights[None, :]).reshape(-1)
    return QuadratureRule(m, nodes, weights, "deterministic")

"""Quadrature on the reference triangle (0,0), (1,0), (0,1) and on [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 20


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sum 1/2
    exactness_degree: int

    @property
    def barycentric(self):
        x, y = self.points.T
        return np.column_stack([1 - x - y, x, y])


@lru_cache(maxsize=None)
def quad_rule(degree):
    """Collapsed Gauss-Jacobi rule, exact for polynomials of total degree ``degree``."""
    degree = int(degree)
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (0..{MAX_DEGREE})")
    n = degree // 2 + 1
    # x-direction Gauss-Legendre on [0,1]; the Duffy Jacobian (1-y) is absorbed
    # into a Gauss-Jacobi(1,0) rule in y
    a, wa = np.polynomial.legendre.leggauss(n)
    b, wb = roots_jacobi(n, 1.0, 0.0)
    s = (a + 1) / 2
    t = (b + 1) / 2
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(wa / 2, wb / 4)
    x = S * (1 - T)
    y = T
    pts = np.column_stack([x.ravel(), y.ravel()])
    w = W.ravel()
    pts.flags.writeable = False
    w.flags.writeable = False
    return QuadratureRule(pts, w, degree)


@lru_cache(maxsize=None)
def gauss_1d(npoints):
    """Gauss-Legendre points and weights on [0, 1] (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(int(npoints))
    x, w = (x + 1) / 2, w / 2
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=None)
def gauss_lobatto_nodes(n):
    """``n >= 2`` Gauss-Lobatto nodes on [0, 1], endpoints included."""
    if n < 2:
        raise ValueError("need at least the two endpoints")
    if n == 2:
        x = np.array([-1.0, 1.0])
    else:
        inner = np.polynomial.legendre.Legendre.basis(n - 1).deriv().roots()
        x = np.concatenate([[-1.0], np.sort(inner.real), [1.0]])
    x = (x + 1) / 2
    x.flags.writeable = False
    return x

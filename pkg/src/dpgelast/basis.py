"""Polynomial bases on the reference triangle and on edges.

The scalar basis is L2-orthonormal on the reference triangle and hierarchical:
the first ``dim P^k`` functions of any higher-degree basis span ``P^k``.  It is
built by exact rational Gram-Schmidt of centred monomials, so no conditioning
is lost in the orthogonalisation itself.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .quadrature import gauss_lobatto_nodes


def dim_p(k):
    """dim P^k in two variables."""
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


def monomial_exponents(k):
    return [(d - b, b) for d in range(k + 1) for b in range(d + 1)]


def _moment(a, b):
    # integral of x^a y^b over the reference triangle
    return Fraction(factorial(a) * factorial(b), factorial(a + b + 2))


def _centred_moment(a, b):
    # integral of (x-1/3)^a (y-1/3)^b
    c = Fraction(-1, 3)
    total = Fraction(0)
    for i in range(a + 1):
        for j in range(b + 1):
            total += comb(a, i) * comb(b, j) * c ** (a - i) * c ** (b - j) * _moment(i, j)
    return total


@lru_cache(maxsize=None)
def _orthonormal_coefficients(k):
    exps = monomial_exponents(k)
    n = len(exps)
    gram = [[_centred_moment(a1 + a2, b1 + b2) for (a2, b2) in exps] for (a1, b1) in exps]
    # unnormalised Gram-Schmidt in exact arithmetic: rows of C are the coefficients
    C = []
    norms = []
    for i in range(n):
        row = [Fraction(0)] * n
        row[i] = Fraction(1)
        for p, prev in enumerate(C):
            # <m_i, prev> / <prev, prev>
            ip = sum(prev[q] * gram[q][i] for q in range(n) if prev[q])
            f = ip / norms[p]
            row = [r - f * pq for r, pq in zip(row, prev)]
        nrm = sum(row[p] * row[q] * gram[p][q] for p in range(n) if row[p]
                  for q in range(n) if row[q])
        C.append(row)
        norms.append(nrm)
    coef = np.array([[float(c) for c in row] for row in C])
    coef /= np.sqrt(np.array([float(v) for v in norms]))[:, None]
    coef.flags.writeable = False
    return coef


class ScalarBasis:
    """L2-orthonormal basis of P^k on the reference triangle."""

    def __init__(self, k):
        if k < 0:
            raise ValueError("degree must be >= 0")
        self.degree = int(k)
        self.dim = dim_p(k)
        self._exps = np.array(monomial_exponents(k))
        self._coef = _orthonormal_coefficients(k)

    def _monomials(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x = pts[:, 0] - 1 / 3
        y = pts[:, 1] - 1 / 3
        k = self.degree
        xp = x[None, :] ** np.arange(k + 1)[:, None]
        yp = y[None, :] ** np.arange(k + 1)[:, None]
        return xp, yp

    def eval(self, pts):
        """Values, shape (dim, npts)."""
        xp, yp = self._monomials(pts)
        a, b = self._exps.T
        return self._coef @ (xp[a] * yp[b])

    def eval_grad(self, pts):
        """Reference gradients, shape (2, dim, npts)."""
        xp, yp = self._monomials(pts)
        a, b = self._exps.T
        am1 = np.maximum(a - 1, 0)
        bm1 = np.maximum(b - 1, 0)
        dx = a[:, None] * xp[am1] * yp[b]
        dy = b[:, None] * xp[a] * yp[bm1]
        return np.stack([self._coef @ dx, self._coef @ dy])


@lru_cache(maxsize=None)
def scalar_basis(k):
    return ScalarBasis(k)


def eval_basis(b, pts):
    return b.eval(pts)


def eval_grad(b, pts):
    return b.eval_grad(pts)


def legendre_edge(k, s):
    """Orthonormal Legendre polynomials on [0, 1] up to degree k, shape (k+1, len(s))."""
    s = np.asarray(s, dtype=float)
    x = 2 * s - 1
    out = np.empty((k + 1, len(s)))
    for n in range(k + 1):
        c = np.zeros(n + 1)
        c[n] = 1
        out[n] = np.polynomial.legendre.legval(x, c) * np.sqrt(2 * n + 1)
    return out


def lobatto_lagrange(k, s):
    """Lagrange basis on the k+1 Gauss-Lobatto nodes of [0, 1], shape (k+1, len(s)).

    Row 0 belongs to s=0, row k to s=1, rows 1..k-1 to the interior nodes.
    """
    nodes = gauss_lobatto_nodes(k + 1)
    s = np.asarray(s, dtype=float)
    out = np.ones((k + 1, len(s)))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[i] *= (s - xj) / (xi - xj)
    return out

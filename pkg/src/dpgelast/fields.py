"""Elementwise L2 projection and L2 norms of broken fields."""
from __future__ import annotations

import numpy as np

from .basis import scalar_basis
from .element import eval_field, mesh_geometry
from .quadrature import quad_rule


def _rule(degree):
    return quad_rule(min(2 * degree + 12, 20))


def l2_project(field, k, m, geom=None):
    """Coefficients of the elementwise L2 projection onto P^k.

    ``field(x, y)`` returns shape (npts,) or (npts, c); the result has shape
    (nt, dim P^k) or (nt, c, dim P^k) in the orthonormal element basis.
    """
    g = mesh_geometry(m) if geom is None else geom
    q = _rule(k)
    x = g.to_physical(q.points)
    vals = np.asarray(field(x[..., 0], x[..., 1]), dtype=float)
    phi = scalar_basis(k).eval(q.points)
    w = q.weights[None, :] * np.sqrt(g.det)[:, None]
    if vals.ndim == 2:
        return np.einsum("nq,aq,nq->na", vals, phi, w)
    return np.einsum("nqc,aq,nq->nca", vals, phi, w)


def l2_field_error(m, coeffs, degree, exact=None, geom=None):
    """|| exact - u_h ||_{L2} for a broken field with coefficients (nt, ..., dim P^degree).

    ``exact(x, y)`` returns the matching component shape in its trailing axes,
    e.g. (..., 2) for displacements or (..., 2, 2) for stresses.  With
    ``exact=None`` this is the L2 norm of the discrete field itself.
    """
    g = mesh_geometry(m) if geom is None else geom
    q = _rule(degree)
    uh = eval_field(g, coeffs, degree, q.points)  # (n, ..., nq)
    diff = -np.moveaxis(uh, -1, 1)  # (n, nq, ...)
    if exact is not None:
        x = g.to_physical(q.points)
        diff = diff + np.asarray(exact(x[..., 0], x[..., 1]), dtype=float)
    w = (q.weights[None, :] * g.det[:, None]).reshape(diff.shape[:2] + (1,) * (diff.ndim - 2))
    return float(np.sqrt(np.sum(diff ** 2 * w)))

"""Rigid-body-motion projection and the local Neumann displacement reconstruction."""
from __future__ import annotations

import numpy as np

from .basis import dim_p, scalar_basis
from .element import Geometry, eval_field, geometry, mesh_geometry
from .material import compliance_apply
from .quadrature import quad_rule


def rm_basis(g, x):
    """Centroid-centred rigid motions at physical points ``x`` (n, nq, 2) -> (n, 3, nq, 2)."""
    c = g.coords.mean(axis=1)[:, None, :]
    d = x - c
    one = np.ones(x.shape[:2])
    zero = np.zeros(x.shape[:2])
    return np.stack([
        np.stack([one, zero], axis=-1),
        np.stack([zero, one], axis=-1),
        np.stack([-d[..., 1], d[..., 0]], axis=-1),
    ], axis=1)


def rm_project(g, v, degree=10):
    """L2 projection of the vector field ``v(x, y)`` onto RM(T).

    Returns the three coefficients of the centred basis (1,0), (0,1),
    (-(y - yc), x - xc) per element, shape (n, 3).
    """
    if not isinstance(g, Geometry):
        g = geometry(g)
    q = quad_rule(degree)
    x = g.to_physical(q.points)
    vals = np.asarray(v(x[..., 0], x[..., 1]), dtype=float)
    r = rm_basis(g, x)
    w = q.weights[None, :] * g.det[:, None]
    rhs = np.einsum("niqc,nqc,nq->ni", r, vals, w)
    diag = np.einsum("niqc,niqc,nq->ni", r, r, w)
    return rhs / diag


def rm_evaluate(g, coef, x):
    return np.einsum("ni,niqc->nqc", coef, rm_basis(g, x))


def _local_systems(g, k, sigma, u, lame):
    """Saddle-point matrices and right-hand sides for P^{k+1} reconstructions."""
    kp = k + 1
    nP = dim_p(kp)
    q = quad_rule(2 * kp + 2)
    phi_ref = scalar_basis(kp).eval(q.points)
    dphi_ref = scalar_basis(kp).eval_grad(q.points)
    s = 1 / np.sqrt(g.det)
    w = q.weights[None, :] * g.det[:, None]  # (n, nq)
    phi = phi_ref[None] * s[:, None, None]  # (n, nP, nq)
    grad = np.einsum("nmj,maq->njaq", g.jinv, dphi_ref) * s[:, None, None, None]
    K = np.einsum("njaq,nlbq,nq->njlab", grad, grad, w)
    n = g.n
    N = 2 * nP
    M = np.zeros((n, N + 3, N + 3))
    lap = K[:, 0, 0] + K[:, 1, 1]
    for c in range(2):
        for d in range(2):
            blk = 0.5 * K[:, d, c]
            if c == d:
                blk = blk + 0.5 * lap
            M[:, c * nP:(c + 1) * nP, d * nP:(d + 1) * nP] = blk
    x = g.to_physical(q.points)
    r = rm_basis(g, x)  # (n, 3, nq, 2)
    C = np.einsum("naq,niqc,nq->nica", phi, r, w).reshape(n, 3, N)
    M[:, N:, :N] = C
    M[:, :N, N:] = np.swapaxes(C, 1, 2)

    sig = eval_field(g, sigma, k, q.points)  # (n, 2, 2, nq)
    Asig = compliance_apply(np.moveaxis(sig, -1, 1), lame)  # (n, nq, 2, 2)
    # (A sigma, eps(phi e_c)) = sum_j sym(A sigma)_{cj} d_j phi
    Asym = 0.5 * (Asig + np.swapaxes(Asig, -1, -2))
    rhs = np.zeros((n, N + 3))
    rhs[:, :N] = np.einsum("nqcj,njaq,nq->nca", Asym, grad, w).reshape(n, N)
    uh = eval_field(g, u, _degree_of(u.shape[-1]), q.points)  # (n, 2, nq)
    rhs[:, N:] = np.einsum("ncq,niqc,nq->ni", uh, r, w)
    return M, rhs


def _degree_of(dim):
    k = 0
    while dim_p(k) < dim:
        k += 1
    if dim_p(k) != dim:
        raise ValueError(f"{dim} is not the dimension of a full P^k")
    return k


def postprocess_local(g, sigma, u, k, lame):
    """Per-element reconstruction; returns (n, 2, dim P^{k+1}) coefficients."""
    M, rhs = _local_systems(g, k, sigma, u, lame)
    try:
        sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular local postprocessing system") from exc
    nP = dim_p(k + 1)
    return sol[:, :2 * nP].reshape(-1, 2, nP)


def postprocess(m, sol, k=None, lame=None):
    """Reconstruct the P^{k+1} displacement from the discrete stress and displacement."""
    layout = sol.layout
    k = layout.k if k is None else k
    if lame is None:
        raise ValueError("material parameters are required")
    return postprocess_local(mesh_geometry(m), sol.sigma, sol.u, k, lame)

"""Element matrices of the ultra-weak elasticity form, batched over triangles.

Broken fields and test functions use the reference orthonormal basis pulled
back to the element and divided by sqrt(det J), so they are L2-orthonormal on
every physical element and all volume pairings reduce to reference tables
combined with the inverse Jacobian.

Local test ordering: symmetric tau (3 components x dim P^{k+2}), vector v
(2 x dim P^{k+2}), antisymmetric q (dim P^k).  Local trial ordering follows
:mod:`dpgelast.layout`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import dim_p, legendre_edge, lobatto_lagrange, scalar_basis
from .layout import test_local_dims, trial_local_dims
from .material import compliance_apply
from .quadrature import gauss_1d, quad_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

SYM_BASIS = np.array([
    [[1.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 1.0]],
    [[0.0, 1.0], [1.0, 0.0]] / np.sqrt(2),
])
SKEW_BASIS = np.array([[0.0, 1.0], [-1.0, 0.0]]) / np.sqrt(2)
# full matrix basis E_ij, flattened index 2 i + j
MAT_BASIS = np.eye(4).reshape(4, 2, 2)


def volume_degree(k):
    return 2 * (k + 2) + 2


def load_degree(k):
    return min(2 * (k + 2) + 6, 20)


def edge_points(k):
    return -(-(2 * k + 4) // 2) + 1


@dataclass(frozen=True, eq=False)
class Geometry:
    """Affine data for a batch of triangles."""

    coords: np.ndarray  # (n, 3, 2)
    jac: np.ndarray  # (n, 2, 2), columns P1-P0, P2-P0
    det: np.ndarray  # (n,)
    jinv: np.ndarray  # (n, 2, 2)
    edge_length: np.ndarray  # (n, 3)
    normal: np.ndarray  # (n, 3, 2) outward unit normals
    forward: np.ndarray  # (n, 3) bool, local edge runs lower -> higher global vertex id
    signs: np.ndarray  # (n, 3) flux orientation signs

    @property
    def n(self):
        return len(self.det)

    def to_physical(self, ref_pts):
        """(n, npts, 2) physical images of reference points."""
        return self.coords[:, None, 0, :] + np.einsum("nij,qj->nqi", self.jac, ref_pts)

    def area(self):
        return 0.5 * self.det

    def take(self, idx):
        return Geometry(*(getattr(self, f)[idx] for f in
                          ("coords", "jac", "det", "jinv", "edge_length",
                           "normal", "forward", "signs")))


def geometry(coords, forward=None, signs=None):
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 2:
        coords = coords[None]
    n = len(coords)
    jac = np.stack([coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("elements must be counterclockwise")
    jinv = np.empty_like(jac)
    jinv[:, 0, 0] = jac[:, 1, 1]
    jinv[:, 1, 1] = jac[:, 0, 0]
    jinv[:, 0, 1] = -jac[:, 0, 1]
    jinv[:, 1, 0] = -jac[:, 1, 0]
    jinv /= det[:, None, None]
    d = np.roll(coords, -1, axis=1) - coords
    length = np.hypot(d[..., 0], d[..., 1])
    normal = np.stack([d[..., 1], -d[..., 0]], axis=-1) / length[..., None]
    if forward is None:
        forward = np.ones((n, 3), dtype=bool)
    if signs is None:
        signs = np.ones((n, 3), dtype=np.int64)
    return Geometry(coords, jac, det, jinv, length, normal,
                    np.asarray(forward, dtype=bool).reshape(n, 3),
                    np.asarray(signs).reshape(n, 3))


def mesh_geometry(m, idx=None):
    tris = m.triangles if idx is None else m.triangles[idx]
    signs = m.triangle_edge_signs if idx is None else m.triangle_edge_signs[idx]
    forward = tris < np.roll(tris, -1, axis=1)
    return geometry(m.vertices[tris], forward, signs)


@dataclass(frozen=True)
class ReferenceTables:
    k: int
    j: int
    n_test_scalar: int
    dhat_u: np.ndarray  # (2, nT, nU) int dphi_a/dxhat_m psi_b
    dhat_s: np.ndarray  # (2, nT, nK)
    khat: np.ndarray  # (2, 2, nT, nT)
    edge_phi: np.ndarray  # (3, nT, ng) test basis at edge Gauss points
    edge_w: np.ndarray  # (ng,)
    edge_t: np.ndarray  # (ng,)


@lru_cache(maxsize=None)
def reference_tables(k, j):
    nT = dim_p(k + 2)
    nK = dim_p(k)
    nU = dim_p(k + j)
    q = quad_rule(volume_degree(k))
    big = scalar_basis(k + 2)
    phi = big.eval(q.points)
    dphi = big.eval_grad(q.points)
    w = q.weights
    # hierarchical basis: lower degrees are leading rows
    dhat_u = np.einsum("maq,bq,q->mab", dphi, phi[:nU], w)
    dhat_s = np.einsum("maq,bq,q->mab", dphi, phi[:nK], w)
    khat = np.einsum("maq,nbq,q->mnab", dphi, dphi, w)
    t, wt = gauss_1d(edge_points(k))
    edge_phi = []
    for e in range(3):
        pts = REF_VERTICES[e] + t[:, None] * (REF_VERTICES[(e + 1) % 3] - REF_VERTICES[e])
        edge_phi.append(big.eval(pts))
    tabs = ReferenceTables(k, j, nT, dhat_u, dhat_s, khat, np.array(edge_phi), wt, t)
    return tabs


def _physical_stiffness(g, khat):
    # K_jl = sum_mn Jinv[m, j] Jinv[n, l] Khat_mn
    return np.einsum("emj,enl,mnab->ejlab", g.jinv, g.jinv, khat)


def element_gram(g, k):
    """Gram matrices of the local test basis in the V inner product, shape (n, nV, nV)."""
    tabs = reference_tables(k, 0)
    nT = tabs.n_test_scalar
    ntau, nv, nq = test_local_dims(k)
    K = _physical_stiffness(g, tabs.khat)
    G = np.zeros((g.n, ntau + nv + nq, ntau + nv + nq))
    eye = np.eye(nT)
    # div(S_c phi)_i = sum_j (S_c)_ij d_j phi
    SS = np.einsum("cij,dil->cdjl", SYM_BASIS, SYM_BASIS)
    for c in range(3):
        for d in range(3):
            blk = np.einsum("jl,ejlab->eab", SS[c, d], K)
            if c == d:
                blk = blk + eye
            G[:, c * nT:(c + 1) * nT, d * nT:(d + 1) * nT] = blk
    vblk = eye + K[:, 0, 0] + K[:, 1, 1]
    for c in range(2):
        s = ntau + c * nT
        G[:, s:s + nT, s:s + nT] = vblk
    s = ntau + nv
    G[:, s:, s:] = np.eye(nq)
    return G


def _trace_matrices(g, k, tabs):
    """Edge pairings of test functions against the trace bases.

    Returns ``hat`` (n, 3, nT, k+2) against the Lobatto-Lagrange nodes of the
    displacement trace, and ``fl`` (n, 3, nT, k+1) against the flux Legendre
    modes, both in the global edge direction.
    """
    t, w = tabs.edge_t, tabs.edge_w
    lob_f = lobatto_lagrange(k + 1, t)
    lob_b = lobatto_lagrange(k + 1, 1 - t)
    leg_f = legendre_edge(k, t)
    leg_b = legendre_edge(k, 1 - t)
    scale = g.edge_length / np.sqrt(g.det)[:, None]  # (n, 3)
    # (3, nT, ng) x (ng, nb) -> (3, nT, nb)
    hat_f = np.einsum("eag,ig,g->eai", tabs.edge_phi, lob_f, w)
    hat_b = np.einsum("eag,ig,g->eai", tabs.edge_phi, lob_b, w)
    fl_f = np.einsum("eag,ig,g->eai", tabs.edge_phi, leg_f, w)
    fl_b = np.einsum("eag,ig,g->eai", tabs.edge_phi, leg_b, w)
    fw = g.forward[:, :, None, None]
    hat = np.where(fw, hat_f[None], hat_b[None]) * scale[:, :, None, None]
    fl = np.where(fw, fl_f[None], fl_b[None]) * scale[:, :, None, None]
    return hat, fl


def element_b(g, k, j, lame):
    """Test x trial matrices of the bilinear form, shape (n, nV, nU_local).

    Flux columns already carry the orientation sign of ``g.signs``.
    """
    tabs = reference_tables(k, j)
    nT = tabs.n_test_scalar
    nK = dim_p(k)
    nU = dim_p(k + j)
    ntau, nv, nq = test_local_dims(k)
    nsig, nu, nflux, nuhat = trial_local_dims(k, j)
    n = g.n
    B = np.zeros((n, ntau + nv + nq, nsig + nu + nflux + nuhat))
    col_u = nsig
    col_flux = nsig + nu
    col_hat = col_flux + nflux
    row_v = ntau
    row_q = ntau + nv

    # (A sigma, tau): element independent
    Abasis = compliance_apply(MAT_BASIS, lame)  # (4, 2, 2)
    coup = np.einsum("sij,cij->cs", Abasis, SYM_BASIS)
    for c in range(3):
        for s in range(4):
            B[:, c * nT:c * nT + nK, s * nK:(s + 1) * nK] += coup[c, s] * np.eye(nK)

    Du = np.einsum("emj,mab->ejab", g.jinv, tabs.dhat_u)  # int d_j phi_a psi_b
    Ds = np.einsum("emj,mab->ejab", g.jinv, tabs.dhat_s)
    # (u, div tau): u = e_i psi, div(S_c phi)_i = sum_j (S_c)_ij d_j phi
    for c in range(3):
        for i in range(2):
            blk = np.einsum("j,ejab->eab", SYM_BASIS[c, i], Du)
            B[:, c * nT:(c + 1) * nT, col_u + i * nU:col_u + (i + 1) * nU] += blk
    # (sigma, grad v): v = e_i phi, sigma = E_ij psi -> d_j phi
    for i in range(2):
        for jj in range(2):
            s = 2 * i + jj
            B[:, row_v + i * nT:row_v + (i + 1) * nT, s * nK:(s + 1) * nK] += Ds[:, jj]
    # (sigma, q)
    for s in range(4):
        B[:, row_q:row_q + nK, s * nK:(s + 1) * nK] += SKEW_BASIS.ravel()[s] * np.eye(nK)

    hat, fl = _trace_matrices(g, k, tabs)
    # - <uhat, tau nu>: uhat = e_c chi; (tau nu)_c = (S_d n)_c phi
    Sn = np.einsum("dcl,nel->nedc", SYM_BASIS, g.normal)  # (n, 3 edges, 3 tau comps, 2)
    hat_cols = _uhat_columns(k, g.forward)  # (n, 3, k+2) local vertex/edge node index
    for e in range(3):
        for node in range(k + 2):
            col_node = hat_cols[:, e, node]
            for d in range(3):
                for c in range(2):
                    vals = -Sn[:, e, d, c][:, None] * hat[:, e, :, node]  # (n, nT)
                    cols = col_hat + 2 * col_node + c
                    B[np.arange(n)[:, None], d * nT + np.arange(nT)[None, :], cols[:, None]] += vals
    # - <flux, v>: flux = sign e_c lambda_m
    per_edge = 2 * (k + 1)
    for e in range(3):
        sg = g.signs[:, e][:, None, None]
        for c in range(2):
            cs = col_flux + e * per_edge + c * (k + 1)
            B[:, row_v + c * nT:row_v + (c + 1) * nT, cs:cs + k + 1] -= sg * fl[:, e]
    return B


def _uhat_columns(k, forward):
    """Local trace-node index (vertices 0..2, then 3 + e k + i) per element, edge and node.

    Nodes are listed in global edge direction: node 0 at the lower vertex id.
    """
    n = len(forward)
    out = np.empty((n, 3, k + 2), dtype=np.int64)
    for e in range(3):
        start, end = e, (e + 1) % 3
        interior = 3 + e * k + np.arange(k)
        fwd = np.concatenate([[start], interior, [end]])
        bwd = np.concatenate([[end], interior, [start]])
        out[:, e, :] = np.where(forward[:, e, None], fwd[None], bwd[None])
    return out


def element_load(g, k, f):
    """(f, v)_T for every test function; tau and q rows are zero."""
    q = quad_rule(load_degree(k))
    phi = scalar_basis(k + 2).eval(q.points)  # (nT, nq)
    x = g.to_physical(q.points)
    fv = np.asarray(f(x[..., 0], x[..., 1]), dtype=float)  # (n, nq, 2)
    ntau, nv, nq = test_local_dims(k)
    nT = phi.shape[0]
    out = np.zeros((g.n, ntau + nv + nq))
    w = q.weights * np.sqrt(g.det)[:, None]  # det J / sqrt(det J)
    for c in range(2):
        out[:, ntau + c * nT:ntau + (c + 1) * nT] = np.einsum("nq,aq,nq->na", fv[..., c], phi, w)
    return out


def eval_field(g, coeffs, degree, ref_pts):
    """Evaluate broken scalar/vector fields with per-element coefficients.

    ``coeffs`` has shape (n, ..., dim P^degree); returns (n, ..., npts).
    """
    phi = scalar_basis(degree).eval(ref_pts)
    return np.einsum("n...a,aq->n...q", coeffs, phi) / np.sqrt(g.det).reshape(
        (-1,) + (1,) * (coeffs.ndim - 1))

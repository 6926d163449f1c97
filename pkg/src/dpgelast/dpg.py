"""Practical DPG: local condensation, global assembly, solve and residual estimator."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import dim_p
from .element import element_b, element_gram, element_load, mesh_geometry
from .layout import build_layout
from .material import LameParams
from .mesh import BoundaryLabel
from .quadrature import gauss_lobatto_nodes

log = logging.getLogger(__name__)

CHUNK = 512


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Condensed:
    S: np.ndarray  # (n, nU, nU) B^T G^-1 B
    f: np.ndarray  # (n, nU) B^T G^-1 l
    W: np.ndarray  # (n, nV, nU) L^-1 B with G = L L^T
    z: np.ndarray  # (n, nV) L^-1 l
    L: np.ndarray  # (n, nV, nV)


def condense(B, G, l):
    """Normal-equation blocks of one batch of elements via Cholesky of the Gram matrices."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SolverError("element Gram matrix is not positive definite") from exc
    W = np.linalg.solve(L, B)
    z = np.linalg.solve(L, l[..., None])[..., 0]
    Wt = np.swapaxes(W, 1, 2)
    S = Wt @ W
    f = (Wt @ z[..., None])[..., 0]
    return Condensed(S, f, W, z, L)


@dataclass(eq=False)
class GlobalSystem:
    S: sp.csr_matrix  # reduced to free dofs
    rhs: np.ndarray
    layout: object
    problem: object
    x_fixed: np.ndarray  # full-length vector holding the prescribed boundary values
    contexts: list = field(repr=False, default_factory=list)  # (element ids, Condensed)
    stress_scale: float = 1.0


def dirichlet_values(layout, g):
    """Nodal interpolation of ``g`` into the fixed trace dofs; zero data if ``g`` is None."""
    x = np.zeros(layout.n_full)
    if g is None:
        return x
    m, k = layout.mesh, layout.k
    dir_edges = np.flatnonzero(m.edge_label == BoundaryLabel.DIRICHLET)
    verts = np.unique(m.edges[dir_edges])
    val = np.asarray(g(m.vertices[verts, 0], m.vertices[verts, 1]))
    for c in range(2):
        x[layout.uhat_vertex_dof(verts, c)] = val[:, c]
    if k > 0:
        s = gauss_lobatto_nodes(k + 2)[1:-1]
        for e in dir_edges:
            a, b = m.vertices[m.edges[e]]
            pts = a + s[:, None] * (b - a)
            val = np.asarray(g(pts[:, 0], pts[:, 1]))
            for node in range(k):
                for c in range(2):
                    x[layout.uhat_edge_dof(e, node, c)] = val[node, c]
    return x


def resolve_threads(threads):
    if threads in (None, "auto"):
        return os.cpu_count() or 1
    return max(1, int(threads))


def _chunk(m, layout, lame, f, idx):
    g = mesh_geometry(m, idx)
    k, j = layout.k, layout.j
    return condense(element_b(g, k, j, lame), element_gram(g, k), element_load(g, k, f))


def scaled_data(problem, scale):
    """Material and load of the problem with stresses measured in units of ``scale``."""
    if scale == 1:
        return problem.lame, problem.f
    lame = LameParams(problem.lame.lam / scale, problem.lame.mu / scale)
    return lame, lambda x, y: np.asarray(problem.f(x, y)) / scale


def assemble(m, layout, problem, keep_context=True, threads=1, stress_scale=None):
    """Scatter-add of the condensed element blocks into the reduced global system.

    Stress and flux unknowns are solved for in units of ``stress_scale``
    (default: the shear modulus); :class:`SolutionFields` converts back.  In
    the original units this is the test norm
    ``|tau|^2 + |div tau|^2 + s^2 (|v|^2 + |grad v|^2 + |q|^2)`` with ``s`` the
    scale, which keeps the normal equations balanced for stiff materials and
    is the unit-weight norm whenever ``s = 1``.

    Element chunks may be processed by several threads; their triplet buffers
    are merged in chunk order, so the result does not depend on ``threads``.
    """
    scale = float(problem.lame.mu if stress_scale is None else stress_scale)
    lame, f = scaled_data(problem, scale)
    nt = m.n_triangles
    nloc = layout.n_local
    chunks = [np.arange(s, min(s + CHUNK, nt)) for s in range(0, nt, CHUNK)]
    nthreads = min(resolve_threads(threads), len(chunks))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = list(pool.map(lambda idx: _chunk(m, layout, lame, f, idx), chunks))
    else:
        results = [_chunk(m, layout, lame, f, idx) for idx in chunks]
    rows, cols, vals = [], [], []
    F = np.zeros(layout.n_full)
    contexts = []
    for idx, ctx in zip(chunks, results):
        gat = layout.gather[idx]
        rows.append(np.repeat(gat, nloc, axis=1).ravel().astype(np.int32))
        cols.append(np.tile(gat, (1, nloc)).ravel().astype(np.int32))
        vals.append(ctx.S.reshape(len(idx), -1).ravel())
        np.add.at(F, gat.ravel(), ctx.f.ravel())
        if keep_context:
            contexts.append((idx, ctx))
    n = layout.n_full
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    S.sum_duplicates()
    x_fixed = dirichlet_values(layout, problem.dirichlet)
    free = layout.free
    Sff = S[free][:, free].tocsr()
    rhs = F[free]
    if np.any(x_fixed):
        rhs = rhs - S[free][:, ~free] @ x_fixed[~free]
    return GlobalSystem(Sff, rhs, layout, problem, x_fixed, contexts, scale)


@dataclass(eq=False)
class SolutionFields:
    layout: object
    x: np.ndarray  # full coefficient vector in solver units (boundary values included)
    eps: np.ndarray = None  # (nt, nV) residual representer coefficients
    eta_T: np.ndarray = None
    residual: float = np.nan  # relative residual of the linear solve
    stress_scale: float = 1.0

    @property
    def eta(self):
        return float(np.sqrt(np.sum(self.eta_T ** 2))) if self.eta_T is not None else np.nan

    def _block(self, name):
        a, b = self.layout.offsets[name]
        if name in ("sigma", "flux"):
            return self.x[a:b] * self.stress_scale
        return self.x[a:b]

    @property
    def sigma(self):
        """(nt, 2, 2, dim P^k) coefficients of the stress."""
        nt, k = self.layout.mesh.n_triangles, self.layout.k
        return self._block("sigma").reshape(nt, 2, 2, dim_p(k))

    @property
    def u(self):
        """(nt, 2, dim P^{k+j}) coefficients of the displacement."""
        nt, k, j = self.layout.mesh.n_triangles, self.layout.k, self.layout.j
        return self._block("u").reshape(nt, 2, dim_p(k + j))

    @property
    def flux(self):
        """(ne, 2, k+1) Legendre coefficients against the global edge normals."""
        return self._block("flux").reshape(self.layout.mesh.n_edges, 2, self.layout.k + 1)

    @property
    def uhat(self):
        return self._block("uhat")

    def uhat_at_vertices(self):
        m = self.layout.mesh
        return self.uhat[:2 * m.n_vertices].reshape(m.n_vertices, 2)


def solve(gs, solver="cholesky", tol=1e-10):
    """Solve the reduced normal equations and unpack the trial fields."""
    S, rhs = gs.S, gs.rhs
    if S.shape[0] == 0:
        y = np.zeros(0)
    elif not np.any(rhs):
        y = np.zeros_like(rhs)
    elif solver == "cholesky":
        y = _sparse_cholesky(S, rhs)
    elif solver == "cg":
        d = S.diagonal()
        if np.any(d <= 0):
            raise SolverError("non-positive diagonal in the global system")
        M = spla.LinearOperator(S.shape, matvec=lambda v: v / d)
        y, info = spla.cg(S, rhs, rtol=tol / 10, atol=0.0, M=M, maxiter=20 * S.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradients did not converge (info={info})")
    else:
        raise ValueError(f"unknown solver {solver!r}")
    bnorm = np.linalg.norm(rhs)
    res = np.linalg.norm(S @ y - rhs) / bnorm if bnorm > 0 else 0.0
    if res > tol and solver == "cholesky":
        # one step of iterative refinement before giving up
        y = y + _sparse_cholesky(S, rhs - S @ y)
        res = np.linalg.norm(S @ y - rhs) / bnorm
    log.debug("solve: n=%d solver=%s relres=%.2e", S.shape[0], solver, res)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"linear solve residual {res:.3e} above tolerance {tol:.1e}")
    x = gs.x_fixed.copy()
    x[gs.layout.free] = y
    return SolutionFields(gs.layout, x, residual=float(res), stress_scale=gs.stress_scale)


def _sparse_cholesky(S, b):
    try:
        import qdldl
    except ImportError:  # pragma: no cover - qdldl is a declared dependency
        return spla.spsolve(S.tocsc(), b)
    try:
        fac = qdldl.Solver(sp.triu(S, format="csc"), upper=True)
    except Exception as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    return fac.solve(b)


def residual_estimate(gs, sol):
    """Fill the residual representer, its elementwise V norms and the global estimator."""
    layout = sol.layout
    nt = layout.mesh.n_triangles
    eps = None
    eta_T = np.zeros(nt)
    contexts = gs.contexts
    if not contexts:
        contexts = assemble(layout.mesh, layout, gs.problem, stress_scale=gs.stress_scale).contexts
    for idx, ctx in contexts:
        xe = sol.x[layout.gather[idx]]
        r = ctx.z - (ctx.W @ xe[..., None])[..., 0]  # L^-1 (l - B x)
        eta_T[idx] = gs.stress_scale * np.sqrt(np.sum(r ** 2, axis=1))
        e = np.linalg.solve(np.swapaxes(ctx.L, 1, 2), r[..., None])[..., 0]
        if eps is None:
            eps = np.zeros((nt, e.shape[1]))
        eps[idx] = gs.stress_scale * e
    sol.eps = eps
    sol.eta_T = eta_T
    return sol


def solve_problem(m, problem, k, j, solver="cholesky", tol=1e-10, threads=1, stress_scale=None):
    """Layout, assembly, solve and residual estimate in one call."""
    layout = build_layout(m, k, j)
    gs = assemble(m, layout, problem, threads=threads, stress_scale=stress_scale)
    sol = solve(gs, solver=solver, tol=tol)
    residual_estimate(gs, sol)
    return gs, sol

"""Global degree-of-freedom layout for the trial space and local test-space sizes.

Trial fields, in global order: stress (full 2x2, P^k per element), displacement
(P^{k+j} per element), normal flux (vector P^k per edge, against the edge's
global normal) and displacement trace (continuous vector P^{k+1} on the
skeleton, nodal at vertices and Gauss-Lobatto edge nodes).

Every element gathers its local trial columns from a *full* index space that
still contains the boundary dofs; ``free`` marks the unknowns that survive the
boundary conditions and ``reduced`` maps full indices to the solved system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import dim_p
from .mesh import BoundaryLabel

FIELDS = ("sigma", "u", "flux", "uhat")


@dataclass(frozen=True, eq=False)
class SpaceLayout:
    k: int
    j: int
    mesh: object
    offsets: dict  # field -> (start, stop) in the full index space
    local_slices: dict  # field -> slice of the local trial columns
    gather: np.ndarray  # (nt, n_local) full indices
    signs: np.ndarray  # (nt, n_local) +-1, the orientation sign on flux columns
    free: np.ndarray  # (n_full,) bool
    reduced: np.ndarray  # (n_full,) reduced index or -1

    @property
    def n_full(self):
        return len(self.free)

    @property
    def n_dofs(self):
        return int(self.free.sum())

    @property
    def n_local(self):
        return self.gather.shape[1]

    def field_dofs(self, name, free_only=True):
        a, b = self.offsets[name]
        n = int(self.free[a:b].sum()) if free_only else b - a
        return n

    @property
    def test_local_dims(self):
        return test_local_dims(self.k)

    def split(self, x_full):
        """Per-field views of a full coefficient vector."""
        return {name: x_full[a:b] for name, (a, b) in self.offsets.items()}

    def uhat_vertex_dof(self, v, c):
        return self.offsets["uhat"][0] + 2 * v + c

    def uhat_edge_dof(self, e, node, c):
        # node in 0..k-1 counts interior Gauss-Lobatto nodes in global edge direction
        return self.offsets["uhat"][0] + 2 * self.mesh.n_vertices + 2 * (e * self.k + node) + c


def test_local_dims(k):
    n = dim_p(k + 2)
    return (3 * n, 2 * n, dim_p(k))


def trial_local_dims(k, j):
    return (4 * dim_p(k), 2 * dim_p(k + j), 3 * 2 * (k + 1), 2 * (3 + 3 * k))


def build_layout(m, k, j):
    if k < 0 or j not in (0, 1):
        raise ValueError("need k >= 0 and j in {0, 1}")
    nt, ne, nv = m.n_triangles, m.n_edges, m.n_vertices
    nsig, nu, nflux, nuhat = trial_local_dims(k, j)

    sizes = {
        "sigma": nt * nsig,
        "u": nt * nu,
        "flux": ne * 2 * (k + 1),
        "uhat": 2 * nv + 2 * ne * k,
    }
    offsets = {}
    start = 0
    for name in FIELDS:
        offsets[name] = (start, start + sizes[name])
        start += sizes[name]
    n_full = start

    local_slices = {}
    start = 0
    for name, n in zip(FIELDS, (nsig, nu, nflux, nuhat)):
        local_slices[name] = slice(start, start + n)
        start += n
    n_local = start

    gather = np.empty((nt, n_local), dtype=np.int64)
    signs = np.ones((nt, n_local), dtype=np.int64)
    t = np.arange(nt)[:, None]
    gather[:, local_slices["sigma"]] = offsets["sigma"][0] + t * nsig + np.arange(nsig)
    gather[:, local_slices["u"]] = offsets["u"][0] + t * nu + np.arange(nu)

    # flux: local column (edge e, component c, mode n)
    per_edge = 2 * (k + 1)
    te = m.triangle_to_edges
    cols = np.arange(per_edge)
    fl = offsets["flux"][0] + te[:, :, None] * per_edge + cols[None, None, :]
    gather[:, local_slices["flux"]] = fl.reshape(nt, -1)
    signs[:, local_slices["flux"]] = np.repeat(m.triangle_edge_signs, per_edge, axis=1)

    # trace: vertex dofs (local vertex i, component c), then edge-interior
    # dofs (local edge e, interior node in global direction, component c)
    u0 = offsets["uhat"][0]
    vert = u0 + 2 * m.triangles[:, :, None] + np.arange(2)[None, None, :]
    edge_base = u0 + 2 * nv
    node = np.arange(k)
    ed = edge_base + 2 * (te[:, :, None, None] * k + node[None, None, :, None]) \
        + np.arange(2)[None, None, None, :]
    gather[:, local_slices["uhat"]] = np.concatenate(
        [vert.reshape(nt, -1), ed.reshape(nt, -1)], axis=1)

    free = np.ones(n_full, dtype=bool)
    neumann = np.flatnonzero(m.edge_label == BoundaryLabel.NEUMANN)
    for e in neumann:
        a = offsets["flux"][0] + e * per_edge
        free[a:a + per_edge] = False
    dir_edges = np.flatnonzero(m.edge_label == BoundaryLabel.DIRICHLET)
    dir_verts = np.unique(m.edges[dir_edges])
    for v in dir_verts:
        free[u0 + 2 * v: u0 + 2 * v + 2] = False
    for e in dir_edges:
        a = edge_base + 2 * e * k
        free[a:a + 2 * k] = False
    reduced = np.full(n_full, -1, dtype=np.int64)
    reduced[free] = np.arange(int(free.sum()))

    for arr in (gather, signs, free, reduced):
        arr.flags.writeable = False
    return SpaceLayout(k, j, m, offsets, local_slices, gather, signs, free, reduced)

"""Conforming triangulations in 2D: generators, skeleton, red and NVB refinement.

Local edge ``e`` of a triangle joins its vertices ``e`` and ``(e + 1) % 3``.
Every edge carries a fixed global normal: the tangent from the lower to the
higher vertex id rotated by -90 degrees, flipped outward on the boundary.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class BoundaryLabel(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


class MeshError(ValueError):
    pass


def _key(a, b):
    a, b = int(a), int(b)
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangle mesh.

    Parameters
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    refinement_edge : (nt,) local edge index used by newest-vertex bisection
    boundary : mapping from sorted vertex pair to :class:`BoundaryLabel`;
        boundary edges missing from it are Dirichlet.
    parent : (nt,) parent triangle id in the mesh this one was refined from, -1 if none
    """

    vertices: np.ndarray
    triangles: np.ndarray
    refinement_edge: np.ndarray = None
    boundary: dict = None
    parent: np.ndarray = None

    # derived skeleton data
    edges: np.ndarray = field(init=False, repr=False)
    edge_label: np.ndarray = field(init=False, repr=False)
    edge_adjacent: np.ndarray = field(init=False, repr=False)
    edge_normal: np.ndarray = field(init=False, repr=False)
    triangle_to_edges: np.ndarray = field(init=False, repr=False)
    triangle_edge_signs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError(f"vertices must have shape (nv, 2), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError(f"triangles must have shape (nt, 3), got {triangles.shape}")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinates")
        nt = len(triangles)

        area2 = _signed_area2(vertices, triangles)
        if np.any(area2 <= 0):
            raise MeshError("triangles must be counterclockwise with positive area")

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

        edge_index = {}
        edges = []
        adjacent = []
        tri_edges = np.empty((nt, 3), dtype=np.int64)
        for t, tri in enumerate(triangles):
            for e in range(3):
                k = _key(tri[e], tri[(e + 1) % 3])
                idx = edge_index.get(k)
                if idx is None:
                    idx = len(edges)
                    edge_index[k] = idx
                    edges.append(k)
                    adjacent.append([t, -1])
                else:
                    if adjacent[idx][1] != -1:
                        raise MeshError(f"edge {k} shared by more than two triangles")
                    adjacent[idx][1] = t
                tri_edges[t, e] = idx
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        adjacent = np.array(adjacent, dtype=np.int64).reshape(-1, 2)
        on_boundary = adjacent[:, 1] < 0

        given = {} if self.boundary is None else self.boundary
        labels = np.full(len(edges), BoundaryLabel.INTERIOR, dtype=np.int64)
        boundary = {}
        for i in np.flatnonzero(on_boundary):
            k = (int(edges[i, 0]), int(edges[i, 1]))
            lab = BoundaryLabel(given.get(k, BoundaryLabel.DIRICHLET))
            if lab == BoundaryLabel.INTERIOR:
                raise MeshError(f"boundary edge {k} labelled interior")
            labels[i] = lab
            boundary[k] = lab
        object.__setattr__(self, "boundary", boundary)

        tangent = vertices[edges[:, 1]] - vertices[edges[:, 0]]
        length = np.hypot(tangent[:, 0], tangent[:, 1])
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]

        # +1 iff the triangle's local edge runs from lower to higher vertex id,
        # which for a ccw triangle means its outward normal equals the default normal
        local_first = triangles
        local_second = np.roll(triangles, -1, axis=1)
        signs = np.where(local_first < local_second, 1, -1).astype(np.int64)
        # boundary edges: make the stored normal the outward one
        for i in np.flatnonzero(on_boundary):
            t = adjacent[i, 0]
            e = int(np.flatnonzero(tri_edges[t] == i)[0])
            if signs[t, e] < 0:
                normal[i] *= -1
                signs[t, e] = 1

        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_label", labels)
        object.__setattr__(self, "edge_adjacent", adjacent)
        object.__setattr__(self, "edge_normal", normal)
        object.__setattr__(self, "triangle_to_edges", tri_edges)
        object.__setattr__(self, "triangle_edge_signs", signs)

        if self.refinement_edge is None:
            ref = _longest_edges(vertices, triangles, tri_edges)
        else:
            ref = np.asarray(self.refinement_edge, dtype=np.int64)
            if ref.shape != (nt,) or np.any((ref < 0) | (ref > 2)):
                raise MeshError("refinement_edge must be one index in {0,1,2} per triangle")
        object.__setattr__(self, "refinement_edge", ref)
        parent = (np.full(nt, -1, dtype=np.int64) if self.parent is None
                  else np.asarray(self.parent, dtype=np.int64))
        object.__setattr__(self, "parent", parent)

        for arr in (vertices, triangles, edges, labels, adjacent, normal,
                    tri_edges, signs, ref, parent):
            arr.flags.writeable = False

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def areas(self):
        return 0.5 * _signed_area2(self.vertices, self.triangles)

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def diameters(self):
        """Longest edge of every triangle."""
        return self.edge_lengths()[self.triangle_to_edges].max(axis=1)

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def boundary_vertices(self, label=None):
        mask = self.edge_label != BoundaryLabel.INTERIOR
        if label is not None:
            mask = self.edge_label == label
        return np.unique(self.edges[mask])

    def dump(self):
        """Plain-text dump for debugging (``v x y``, ``t i j k``, ``b i j label``)."""
        lines = [f"v {x!r} {y!r}" for x, y in self.vertices]
        lines += [f"t {i} {j} {k}" for i, j, k in self.triangles]
        lines += [f"b {i} {j} {BoundaryLabel(lab).name.lower()}"
                  for (i, j), lab in sorted(self.boundary.items())]
        return "\n".join(lines) + "\n"


def _signed_area2(vertices, triangles):
    p = vertices[triangles]
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def _longest_edges(vertices, triangles, tri_edges):
    p = vertices[triangles]
    d = np.roll(p, -1, axis=1) - p
    length = np.hypot(d[..., 0], d[..., 1])
    ref = np.empty(len(triangles), dtype=np.int64)
    for t in range(len(triangles)):
        # ties broken by the smaller global edge id; lengths compared with a
        # relative slack so that equal edges computed differently still tie
        lmax = length[t].max()
        cands = np.flatnonzero(length[t] >= lmax * (1 - 1e-12))
        ref[t] = cands[np.argmin(tri_edges[t, cands])]
    return ref


def unit_square_mesh(n):
    """Structured mesh of (0,1)^2 with 2 n^2 triangles, diagonals bottom-left to top-right."""
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, c, d = a + 1, a + n + 2, a + n + 1
            tris.append((a, b, c))
            tris.append((a, c, d))
    return Mesh(vertices, np.array(tris))


def l_shape_mesh():
    """Six-triangle mesh of (-1,1)^2 minus [0,1]x[-1,0]; the corner (0,0) is a vertex."""
    vertices = np.array([
        [-1.0, -1.0], [0.0, -1.0],
        [-1.0, 0.0], [0.0, 0.0], [1.0, 0.0],
        [-1.0, 1.0], [0.0, 1.0], [1.0, 1.0],
    ])
    # each unit square split along its diagonal through the origin
    tris = np.array([
        [0, 1, 3], [0, 3, 2],
        [2, 3, 5], [3, 6, 5],
        [3, 4, 7], [3, 7, 6],
    ])
    return Mesh(vertices, tris)


def h_max(m):
    return float(m.edge_lengths().max())


def skeleton_orientation(m, t, local_edge):
    """+1 iff the outward normal of triangle ``t`` on ``local_edge`` equals the edge's global normal."""
    return int(m.triangle_edge_signs[t, local_edge])


def _split_label(m, a, b, labels_out, mid):
    lab = m.boundary.get(_key(a, b))
    if lab is not None:
        labels_out[_key(a, mid)] = lab
        labels_out[_key(mid, b)] = lab


def uniform_refine(m):
    """Red refinement: every triangle into four via edge midpoints."""
    nv = m.n_vertices
    mids = m.vertices[m.edges].mean(axis=1)
    vertices = np.vstack([m.vertices, mids])
    tris = []
    parent = []
    for t, (a, b, c) in enumerate(m.triangles):
        ab, bc, ca = (nv + m.triangle_to_edges[t]).tolist()
        tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        parent += [t] * 4
    boundary = {}
    for (a, b), lab in m.boundary.items():
        _split_label(m, a, b, boundary, nv + _edge_id(m, a, b))
    return Mesh(vertices, np.array(tris), boundary=boundary, parent=np.array(parent))


def _edge_id(m, a, b):
    cache = m.__dict__.get("_edge_lookup")
    if cache is None:
        cache = {(int(i), int(j)): e for e, (i, j) in enumerate(m.edges)}
        object.__setattr__(m, "_edge_lookup", cache)
    return cache[_key(a, b)]


def check_conforming(m):
    """Brute-force audit; raises :class:`MeshError` on any violation."""
    count = {}
    for tri in m.triangles:
        for e in range(3):
            k = _key(tri[e], tri[(e + 1) % 3])
            count[k] = count.get(k, 0) + 1
    boundary_keys = {k for k, c in count.items() if c == 1}
    if any(c > 2 for c in count.values()):
        raise MeshError("edge shared by more than two triangles")
    # a hanging node shows up as a vertex lying inside an edge that has only one neighbour
    bverts = np.array(sorted({v for k in boundary_keys for v in k}), dtype=np.int64)
    on_edge = []
    for (a, b) in boundary_keys:
        pa, pb = m.vertices[a], m.vertices[b]
        d = pb - pa
        L2 = d @ d
        rel = m.vertices[bverts] - pa
        s = rel @ d / L2
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.sqrt(L2)
        hit = (s > 1e-12) & (s < 1 - 1e-12) & (dist < 1e-12 * np.sqrt(L2))
        if np.any(hit):
            on_edge.append((a, b))
    if on_edge:
        raise MeshError(f"hanging nodes on edges {on_edge[:5]}")
    if set(m.boundary) != boundary_keys:
        raise MeshError("boundary labels out of sync with the edge set")
    if np.any(m.areas() <= 0):
        raise MeshError("non-positive triangle area")
    return True


def bisect(m, marked):
    """Newest-vertex bisection of ``marked`` triangles plus the conforming closure.

    Every triangle whose edges carry a marked edge splits its refinement edge
    first; the two children then split any other marked parent edge, which is
    exactly their own refinement edge.
    """
    marked = sorted({int(t) for t in marked})
    if not marked:
        return m
    check_conforming(m)
    nt = m.n_triangles
    tri_edges = m.triangle_to_edges
    ref_edge = tri_edges[np.arange(nt), m.refinement_edge]

    edge_marked = np.zeros(m.n_edges, dtype=bool)
    edge_marked[ref_edge[marked]] = True
    # closure: any triangle touching a marked edge must split its refinement edge
    while True:
        touched = edge_marked[tri_edges].any(axis=1)
        need = touched & ~edge_marked[ref_edge]
        if not need.any():
            break
        edge_marked[ref_edge[need]] = True

    nv = m.n_vertices
    split = np.flatnonzero(edge_marked)
    mid_id = np.full(m.n_edges, -1, dtype=np.int64)
    mid_id[split] = nv + np.arange(len(split))
    vertices = np.vstack([m.vertices, m.vertices[m.edges[split]].mean(axis=1)])

    tris, refs, parent = [], [], []

    def emit(tri, ref, t):
        tris.append(tri)
        refs.append(ref)
        parent.append(t)

    def mid(a, b):
        return int(mid_id[_edge_id(m, a, b)])

    for t in range(nt):
        r = int(m.refinement_edge[t])
        tri = m.triangles[t]
        a, b, c = int(tri[r]), int(tri[(r + 1) % 3]), int(tri[(r + 2) % 3])
        if not edge_marked[ref_edge[t]]:
            emit((a, b, c), 0, t)
            continue
        mm = mid(a, b)
        # child (a, mm, c): refinement edge c->a (local 2); child (mm, b, c): b->c (local 1)
        for child, ref_local, (p, q) in (((a, mm, c), 2, (c, a)), ((mm, b, c), 1, (b, c))):
            if edge_marked[_edge_id(m, p, q)]:
                pq = mid(p, q)
                x, y, z = child[ref_local], child[(ref_local + 1) % 3], child[(ref_local + 2) % 3]
                emit((x, pq, z), 2, t)
                emit((pq, y, z), 1, t)
            else:
                emit(child, ref_local, t)

    boundary = {}
    for (a, b), lab in m.boundary.items():
        e = _edge_id(m, a, b)
        if edge_marked[e]:
            _split_label(m, a, b, boundary, int(mid_id[e]))
        else:
            boundary[(a, b)] = lab
    return Mesh(vertices, np.array(tris), refinement_edge=np.array(refs),
                boundary=boundary, parent=np.array(parent))

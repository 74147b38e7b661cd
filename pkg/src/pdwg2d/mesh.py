"""Triangular meshes of the five test domains.

Meshes are built from unit-square cells, each split into two triangles by
the lower-right to upper-left diagonal, and refined uniformly by edge
midpoint subdivision (each triangle becomes four congruent children).
The cracked square carries duplicated vertices along the slit so the two
sides are topologically disconnected; the crack tip vertex stays single.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np


class BoundaryTag(IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


class DomainId(Enum):
    """The five computational domains used by the case catalog."""

    OMEGA1 = "omega1"  # unit square (0,1)^2
    OMEGA2 = "omega2"  # L-shape with corners (0,0)..(0,2)
    OMEGA3 = "omega3"  # square (-1,1)^2
    OMEGA4 = "omega4"  # (-1,1)^2 with a slit along (0,1) x {0}
    OMEGA5 = "omega5"  # L-shape with corners (-1,-1)..(-1,1)


# Unit cells (lower-left corners) tiling each domain.
_DOMAIN_CELLS = {
    DomainId.OMEGA1: [(0, 0)],
    DomainId.OMEGA2: [(0, 0), (1, 0), (0, 1)],
    DomainId.OMEGA3: [(-1, -1), (0, -1), (-1, 0), (0, 0)],
    DomainId.OMEGA4: [(-1, -1), (0, -1), (-1, 0), (0, 0)],
    DomainId.OMEGA5: [(-1, -1), (0, -1), (-1, 0)],
}


@dataclass
class Mesh:
    """Triangulation with edge topology and per-edge boundary tags.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise vertex indices
    edges : (ne, 2) int array, vertex pairs with ``edges[:,0] < edges[:,1]``
    edge_elems : (ne, 2) int array, adjacent element indices (-1 if none)
    tri_edges : (nt, 3) int array, global edge id of local edge ``l``
        (the edge between local vertices ``l`` and ``(l+1) % 3``)
    tags : (ne,) int8 array of :class:`BoundaryTag` values
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_elems: np.ndarray
    tri_edges: np.ndarray
    tags: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.tags is None:
            self.tags = np.zeros(len(self.edges), dtype=np.int8)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        """Indices of edges with exactly one adjacent element."""
        return np.nonzero(self.edge_elems[:, 1] < 0)[0]

    def with_tags(self, predicate) -> "Mesh":
        """Return a copy whose boundary edges are tagged by ``predicate``.

        ``predicate`` maps an edge midpoint ``(x, y)`` to
        ``BoundaryTag.DIRICHLET`` or ``BoundaryTag.NEUMANN``; interior edges
        keep ``BoundaryTag.INTERIOR``.  A three-argument predicate also
        receives the outward unit normal; this is the only way to
        distinguish the two slit faces, whose midpoints coincide.
        """
        wants_normal = len(inspect.signature(predicate).parameters) >= 3
        tags = np.zeros(self.num_edges, dtype=np.int8)
        for e in self.boundary_edges:
            mid = 0.5 * (self.vertices[self.edges[e, 0]] + self.vertices[self.edges[e, 1]])
            if wants_normal:
                t0 = self.edge_elems[e, 0]
                l = int(np.nonzero(self.tri_edges[t0] == e)[0][0])
                tri = self.triangles[t0]
                tang = self.vertices[tri[(l + 1) % 3]] - self.vertices[tri[l]]
                normal = np.array([tang[1], -tang[0]]) / np.linalg.norm(tang)
                tag = predicate(mid[0], mid[1], normal)
            else:
                tag = predicate(mid[0], mid[1])
            if tag not in (BoundaryTag.DIRICHLET, BoundaryTag.NEUMANN):
                raise ValueError(f"boundary edge {e} at {mid} received tag {tag}")
            tags[e] = tag
        return replace(self, tags=tags)

    def duplicated_vertex_count(self) -> int:
        """Number of vertices sharing coordinates with another vertex."""
        _, counts = np.unique(np.round(self.vertices, 12), axis=0, return_counts=True)
        return int(np.sum(counts[counts > 1] - 1))


def _build_topology(vertices, triangles) -> Mesh:
    """Assemble edge arrays from a vertex/triangle description."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    edge_index: dict[tuple[int, int], int] = {}
    edges = []
    edge_elems = []
    tri_edges = np.empty((len(triangles), 3), dtype=np.int64)
    for t, tri in enumerate(triangles):
        for l in range(3):
            a, b = int(tri[l]), int(tri[(l + 1) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
                edge_elems.append([t, -1])
            else:
                if edge_elems[e][1] != -1:
                    raise ValueError(f"edge {key} adjacent to more than two elements")
                edge_elems[e][1] = t
            tri_edges[t, l] = e
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=np.array(edges, dtype=np.int64),
        edge_elems=np.array(edge_elems, dtype=np.int64),
        tri_edges=tri_edges,
    )


def _apply_crack(vertices, triangles):
    """Duplicate vertices along the open slit (0,1) x {0} of Omega4.

    Vertices with y = 0 and 0 < x <= 1 are duplicated (including the crack
    mouth at (1,0) on the outer boundary); the tip at (0,0) stays single.
    Triangles below the slit are rewired to the duplicates.
    """
    vertices = list(map(tuple, vertices))
    triangles = np.array(triangles, dtype=np.int64)
    centroid_y = np.mean([[vertices[i][1] for i in tri] for tri in triangles], axis=1)
    for v, (x, y) in enumerate(list(vertices)):
        if abs(y) < 1e-12 and 1e-12 < x <= 1 + 1e-12:
            dup = len(vertices)
            vertices.append((x, y))
            for t in range(len(triangles)):
                if centroid_y[t] < 0 and v in triangles[t]:
                    triangles[t][triangles[t] == v] = dup
    return np.array(vertices, dtype=float), triangles


def coarse_mesh(domain: DomainId) -> Mesh:
    """Level-0 triangulation: two triangles per unit cell, diagonal from
    lower-right to upper-left.

    The diagonal orientation matters: with the multiplier flux tied to
    single-valued edge unknowns, the dual variable superconverges only when
    projection jumps cancel across the parallelogram edge pairs, and the
    lower-right to upper-left split delivers that for the reference runs."""
    cells = _DOMAIN_CELLS[domain]
    vert_index: dict[tuple[float, float], int] = {}
    vertices = []

    def vid(p):
        i = vert_index.get(p)
        if i is None:
            i = len(vertices)
            vert_index[p] = i
            vertices.append(p)
        return i

    triangles = []
    for (x0, y0) in cells:
        ll = vid((float(x0), float(y0)))
        lr = vid((float(x0 + 1), float(y0)))
        ur = vid((float(x0 + 1), float(y0 + 1)))
        ul = vid((float(x0), float(y0 + 1)))
        triangles.append((ll, lr, ul))
        triangles.append((lr, ur, ul))

    vertices = np.array(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    if domain is DomainId.OMEGA4:
        vertices, triangles = _apply_crack(vertices, triangles)
    return _build_topology(vertices, triangles)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four congruent children by connecting the
    three edge midpoints.  Boundary tags are inherited from parent edges."""
    nv = mesh.num_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    # Midpoint vertex of parent edge e is nv + e.
    children = []
    for t, tri in enumerate(mesh.triangles):
        v0, v1, v2 = tri
        m01 = nv + mesh.tri_edges[t, 0]
        m12 = nv + mesh.tri_edges[t, 1]
        m20 = nv + mesh.tri_edges[t, 2]
        children += [
            (v0, m01, m20),
            (v1, m12, m01),
            (v2, m20, m12),
            (m01, m12, m20),
        ]
    fine = _build_topology(vertices, np.array(children, dtype=np.int64))

    # Tag inheritance: a child edge lies on parent edge e iff one endpoint is
    # the midpoint vertex nv + e and the other is an endpoint of e.
    tags = np.zeros(fine.num_edges, dtype=np.int8)
    for e in fine.boundary_edges:
        a, b = fine.edges[e]
        if a >= nv:
            a, b = b, a
        parent = b - nv
        if parent < 0 or a not in mesh.edges[parent]:
            raise RuntimeError("boundary child edge not matched to a parent edge")
        tags[e] = mesh.tags[parent]
    return replace(fine, tags=tags)


@dataclass(frozen=True)
class ElementGeometry:
    area: float
    diameter: float
    centroid: np.ndarray
    normals: np.ndarray  # (3, 2) outward unit normals, local edge order
    edge_lengths: np.ndarray  # (3,)


def element_geometry(mesh: Mesh, element: int) -> ElementGeometry:
    """Area, diameter (longest edge), centroid and per-edge outward normals."""
    p = mesh.vertices[mesh.triangles[element]]
    e = np.array([p[1] - p[0], p[2] - p[1], p[0] - p[2]])  # local edge vectors
    area = 0.5 * float(e[0, 0] * (-e[2, 1]) - e[0, 1] * (-e[2, 0]))
    if area <= 0:
        raise ValueError(f"element {element} has non-positive area {area}")
    lengths = np.linalg.norm(e, axis=1)
    # CCW orientation: outward normal is the edge tangent rotated by -90 deg.
    normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
    return ElementGeometry(
        area=area,
        diameter=float(lengths.max()),
        centroid=p.mean(axis=0),
        normals=normals,
        edge_lengths=lengths,
    )


def geometry_arrays(mesh: Mesh):
    """Vectorized element geometry for all elements.

    Returns a dict with keys ``verts (nt,3,2)``, ``area (nt,)``, ``diam``,
    ``centroid (nt,2)``, ``normals (nt,3,2)``, ``edge_len (nt,3)``,
    ``bary_grads (nt,3,2)`` (gradients of the barycentric coordinates).
    """
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    area = 0.5 * (e[:, 0, 0] * (-e[:, 2, 1]) - e[:, 0, 1] * (-e[:, 2, 0]))
    if np.any(area <= 0):
        bad = int(np.argmax(area <= 0))
        raise ValueError(f"element {bad} has non-positive area")
    lengths = np.linalg.norm(e, axis=2)
    normals = np.stack([e[:, :, 1], -e[:, :, 0]], axis=2) / lengths[:, :, None]
    # grad(lambda_i) = n_opp * len_opp / (2 A) pointing inward; opposite edge
    # of vertex i is local edge (i+1) % 3.
    opp = np.roll(np.arange(3), -1)
    bary_grads = -normals[:, opp, :] * lengths[:, opp, None] / (2 * area[:, None, None])
    return {
        "verts": p,
        "area": area,
        "diam": lengths.max(axis=1),
        "centroid": p.mean(axis=1),
        "normals": normals,
        "edge_len": lengths,
        "bary_grads": bary_grads,
    }


def export_text(mesh: Mesh, stream) -> None:
    """Write a plain-text mesh dump: vertices, triangles, tagged edges."""
    stream.write(f"vertices {mesh.num_vertices}\n")
    for x, y in mesh.vertices:
        stream.write(f"v {float(x)!r} {float(y)!r}\n")
    stream.write(f"triangles {mesh.num_triangles}\n")
    for a, b, c in mesh.triangles:
        stream.write(f"t {a} {b} {c}\n")
    stream.write(f"edges {mesh.num_edges}\n")
    for e in range(mesh.num_edges):
        a, b = mesh.edges[e]
        t0, t1 = mesh.edge_elems[e]
        stream.write(f"e {a} {b} {t0} {t1} {BoundaryTag(mesh.tags[e]).name}\n")

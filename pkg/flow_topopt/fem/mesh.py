"""
Triangular meshes: edge topology, boundary tags, red refinement and size reports.

Edges are identified by their sorted vertex pair and numbered in lexicographic
order. Local edge i of a cell is the edge opposite its local vertex i, which is
the convention the Crouzeix-Raviart basis psi_i = 1 - 2*lambda_i relies on.
"""
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from flow_topopt.errors import MeshError
from flow_topopt.schema.mesh import BoundaryKind, BoundaryTag, DofReport, MeshQuality

EdgeKey = Tuple[int, int]

# relative to the squared bounding-box diameter
DEGENERATE_AREA = 1e-14


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Mesh:
    """
    Immutable simplicial 2D mesh with edge topology and boundary tags.

    Use build_topology() to construct one; the constructor trusts its inputs.
    """

    def __init__(self,
                 vertices: np.ndarray,
                 cells: np.ndarray,
                 edges: np.ndarray,
                 cell_to_edges: np.ndarray,
                 edge_to_cells: np.ndarray,
                 boundary_tags: Dict[int, BoundaryTag],
                 level: int = 0,
                 parent: Optional["Mesh"] = None):
        self.vertices = _frozen(vertices)
        self.cells = _frozen(cells)
        self.edges = _frozen(edges)
        self.cell_to_edges = _frozen(cell_to_edges)
        self.edge_to_cells = _frozen(edge_to_cells)
        self.boundary_tags = dict(boundary_tags)
        self.level = level
        self.parent = parent

    def __repr__(self) -> str:
        return (f"Mesh(level={self.level}, vertices={self.num_vertices}, "
                f"edges={self.num_edges}, cells={self.num_cells})")

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_cells

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.cells]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return _frozen(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def bounding_box(self) -> Tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    @cached_property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bounding_box
        return float(np.hypot(x1 - x0, y1 - y0))

    @cached_property
    def grad_lambda(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (T, 3, 2)"""
        p = self.vertices[self.cells]
        opposite = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)  # p[i+2] - p[i+1]
        grads = np.stack([-opposite[:, :, 1], opposite[:, :, 0]], axis=2)
        return _frozen(grads / (2.0 * self.areas[:, None, None]))

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return _frozen(self.vertices[self.edges].mean(axis=1))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return _frozen(np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return _frozen(np.flatnonzero(self.edge_to_cells[:, 1] < 0))

    def edges_of_kind(self, kind: BoundaryKind) -> np.ndarray:
        return np.array(sorted(e for e, tag in self.boundary_tags.items() if tag.kind == kind),
                        dtype=np.int64)

    def inlet_groups(self) -> Dict[str, np.ndarray]:
        """Inlet edges grouped by profile id"""
        groups: Dict[str, List[int]] = {}
        for e, tag in sorted(self.boundary_tags.items()):
            if tag.kind == BoundaryKind.INLET:
                groups.setdefault(tag.profile, []).append(e)
        return {name: np.array(ids, dtype=np.int64) for name, ids in groups.items()}

    @property
    def dirichlet_edges(self) -> np.ndarray:
        return np.array(sorted(e for e, tag in self.boundary_tags.items() if tag.is_dirichlet),
                        dtype=np.int64)

    @property
    def has_outlet(self) -> bool:
        return any(tag.kind == BoundaryKind.OUTLET for tag in self.boundary_tags.values())

    def cell_points(self, barycentric: np.ndarray) -> np.ndarray:
        """Physical coordinates of barycentric points in every cell, shape (T, Q, 2)"""
        return np.einsum("qi,tic->tqc", barycentric, self.vertices[self.cells])

    def edge_index(self, pairs: np.ndarray) -> np.ndarray:
        """Indices of the edges with the given (unsorted) vertex pairs"""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        keys = self.edges[:, 0] * self.num_vertices + self.edges[:, 1]
        wanted = pairs[:, 0] * self.num_vertices + pairs[:, 1]
        idx = np.searchsorted(keys, wanted)
        idx = np.clip(idx, 0, len(keys) - 1)
        if not np.array_equal(keys[idx], wanted):
            raise MeshError("vertex pair is not an edge of the mesh")
        return idx

    def is_child_of(self, other: "Mesh") -> bool:
        return self.parent is other

    def with_boundary_tags(self, tags: Dict[EdgeKey, BoundaryTag]) -> "Mesh":
        """Same mesh with the boundary tags replaced (keys are vertex pairs)"""
        return Mesh(self.vertices.copy(), self.cells.copy(), self.edges.copy(),
                    self.cell_to_edges.copy(), self.edge_to_cells.copy(),
                    _resolve_tags(self, tags), self.level, self.parent)


def _resolve_tags(mesh: Mesh, tags: Optional[Dict[EdgeKey, BoundaryTag]]) -> Dict[int, BoundaryTag]:
    boundary = set(mesh.boundary_edges.tolist())
    if tags is None:
        return {e: BoundaryTag.wall() for e in sorted(boundary)}
    resolved: Dict[int, BoundaryTag] = {}
    if tags:
        indices = mesh.edge_index(np.array(list(tags.keys())))
        for e, tag in zip(indices.tolist(), tags.values()):
            if e not in boundary:
                raise MeshError(f"boundary tag on interior edge {tuple(mesh.edges[e])}")
            resolved[e] = tag
    missing = boundary.difference(resolved)
    if missing:
        e = min(missing)
        raise MeshError(f"boundary edge {tuple(mesh.edges[e])} carries no tag")
    return dict(sorted(resolved.items()))


def build_topology(vertices,
                   cells,
                   boundary_tags: Optional[Dict[EdgeKey, BoundaryTag]] = None,
                   level: int = 0,
                   parent: Optional[Mesh] = None) -> Mesh:
    """
    Build a validated mesh from coordinates and vertex-index triples.

    Args:
        vertices: (V, 2) coordinates
        cells: (T, 3) vertex indices, counter-clockwise
        boundary_tags: tag per boundary edge keyed by vertex pair; every boundary
            edge becomes a no-slip wall when omitted
        level: refinement depth recorded on the mesh
        parent: coarse mesh this one was refined from

    Returns:
        The mesh, with edges sorted lexicographically

    Raises:
        MeshError: out-of-range index, duplicate cell, degenerate or inverted
            cell, dangling vertex, non-manifold edge, bad boundary tags
    """
    vertices = np.array(vertices, dtype=float).reshape(-1, 2)
    cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
    nv, nt = vertices.shape[0], cells.shape[0]
    if nt == 0:
        raise MeshError("mesh has no cells")
    if cells.min() < 0 or cells.max() >= nv:
        raise MeshError("cell vertex index out of range")

    ordered = np.sort(cells, axis=1)
    repeated = np.flatnonzero((ordered[:, 0] == ordered[:, 1]) | (ordered[:, 1] == ordered[:, 2]))
    if repeated.size:
        raise MeshError(f"degenerate cell {int(repeated[0])}: repeated vertex")
    if np.unique(ordered, axis=0).shape[0] != nt:
        raise MeshError("duplicate cells")

    p = vertices[cells]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    extent = np.ptp(vertices, axis=0)
    scale = float(extent @ extent) or 1.0
    degenerate = np.flatnonzero(np.abs(signed) <= DEGENERATE_AREA * scale)
    if degenerate.size:
        raise MeshError(f"degenerate cell {int(degenerate[0])}: zero area")
    inverted = np.flatnonzero(signed < 0)
    if inverted.size:
        raise MeshError(f"inverted cell {int(inverted[0])}: clockwise orientation")

    used = np.bincount(cells.ravel(), minlength=nv)
    dangling = np.flatnonzero(used == 0)
    if dangling.size:
        raise MeshError(f"dangling vertex {int(dangling[0])}")

    local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    cell_to_edges = np.asarray(inverse).reshape(nt, 3)
    ne = edges.shape[0]

    counts = np.bincount(cell_to_edges.ravel(), minlength=ne)
    crowded = np.flatnonzero(counts > 2)
    if crowded.size:
        raise MeshError(f"non-manifold edge {tuple(edges[crowded[0]])}: {counts[crowded[0]]} cells")

    flat = cell_to_edges.ravel()
    order = np.argsort(flat, kind="stable")
    owner = order // 3
    starts = np.searchsorted(flat[order], np.arange(ne))
    edge_to_cells = np.full((ne, 2), -1, dtype=np.int64)
    edge_to_cells[:, 0] = owner[starts]
    shared = counts == 2
    edge_to_cells[shared, 1] = owner[starts[shared] + 1]

    mesh = Mesh(vertices, cells, edges, cell_to_edges, edge_to_cells, {}, level, parent)
    mesh.boundary_tags = _resolve_tags(mesh, boundary_tags)
    logger.debug("Built mesh level {}: V={} E={} T={}", level, nv, ne, nt)
    return mesh


def refine_red(mesh: Mesh) -> Mesh:
    """
    Split every triangle into four similar children through its edge midpoints.

    The midpoint of coarse edge e becomes fine vertex V + e; child boundary
    edges inherit the tag of their parent edge.
    """
    nv = mesh.num_vertices
    vertices = np.vstack([mesh.vertices, mesh.edge_midpoints])
    a, b, c = mesh.cells.T
    m0, m1, m2 = (nv + mesh.cell_to_edges).T
    children = np.stack([
        np.stack([a, m2, m1], axis=1),
        np.stack([m2, b, m0], axis=1),
        np.stack([m1, m0, c], axis=1),
        np.stack([m0, m1, m2], axis=1),
    ], axis=1).reshape(-1, 3)

    tags: Dict[EdgeKey, BoundaryTag] = {}
    for e, tag in mesh.boundary_tags.items():
        p, q = (int(v) for v in mesh.edges[e])
        tags[(p, nv + e)] = tag
        tags[(q, nv + e)] = tag

    fine = build_topology(vertices, children, tags, level=mesh.level + 1, parent=mesh)
    logger.debug("Refined level {} -> {}: T {} -> {}", mesh.level, fine.level,
                 mesh.num_cells, fine.num_cells)
    return fine


def dof_counts(mesh: Mesh) -> DofReport:
    return DofReport(level=mesh.level, vertices=mesh.num_vertices,
                     edges=mesh.num_edges, cells=mesh.num_cells)


def refined_counts(vertices: int, edges: int, cells: int) -> Tuple[int, int, int]:
    """Vertex, edge and cell counts after one red refinement"""
    return vertices + edges, 2 * edges + 3 * cells, 4 * cells


def reference_dof_table(vertices0: int, cells0: int, levels: int) -> List[DofReport]:
    """
    DOF table for a simply connected mesh known only by its level-0 sizes.

    The level-0 edge count follows from Euler's relation V - E + T = 1.
    """
    v, t = vertices0, cells0
    e = v + t - 1
    rows = []
    for level in range(levels + 1):
        rows.append(DofReport(level=level, vertices=v, edges=e, cells=t))
        v, e, t = refined_counts(v, e, t)
    return rows


def mesh_quality(mesh: Mesh) -> MeshQuality:
    """Largest local mesh size |T|^(1/2) and smallest interior angle"""
    p = mesh.vertices[mesh.cells]
    u = np.roll(p, -1, axis=1) - p
    v = np.roll(p, -2, axis=1) - p
    cosine = np.einsum("tic,tic->ti", u, v) / (np.linalg.norm(u, axis=2) * np.linalg.norm(v, axis=2))
    angles = np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))
    return MeshQuality(h_max=float(np.sqrt(mesh.areas.max())), min_angle=float(angles.min()))

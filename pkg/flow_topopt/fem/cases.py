"""
Benchmark domains: structured right-triangle meshes of the five 2D cases with
their inlet, outlet and wall segments, and the inlet velocity profiles.
"""
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from flow_topopt.errors import ResolutionError
from flow_topopt.fem.mesh import EdgeKey, Mesh, build_topology
from flow_topopt.schema.mesh import BoundaryTag

VectorFunction = Callable[[np.ndarray], np.ndarray]

GRID_TOL = 1e-9


class CaseName(str, Enum):
    PIPE_BEND = "pipe_bend"
    LEFT_INFLOW = "left_inflow"
    THREE_INFLOWS = "three_inflows"
    RUGBY = "rugby"
    BYPASS = "bypass"


def _const(gx: float, gy: float) -> VectorFunction:
    def profile(points: np.ndarray) -> np.ndarray:
        out = np.zeros_like(points, dtype=float)
        out[..., 0] = gx
        out[..., 1] = gy
        return out
    return profile


def _horizontal(fn: Callable[[np.ndarray], np.ndarray]) -> VectorFunction:
    def profile(points: np.ndarray) -> np.ndarray:
        out = np.zeros_like(points, dtype=float)
        out[..., 0] = fn(points[..., 1])
        return out
    return profile


INLET_PROFILES: Dict[str, VectorFunction] = {
    "unit_x": _const(1.0, 0.0),
    "unit_up": _const(0.0, 1.0),
    "unit_down": _const(0.0, -1.0),
    "parabolic": _horizontal(lambda y: 4.0 * y * (1.0 - y)),
    "rugby": _horizontal(lambda y: -(y - 0.5) * (y + 0.5)),
    "bypass": _horizontal(lambda y: -100.0 * (y ** 2 - 0.35 ** 2) * (y ** 2 - 0.15 ** 2)),
}


def register_profile(name: str, profile: VectorFunction) -> None:
    """Make an inlet profile available to BoundaryTag.inlet(name)"""
    INLET_PROFILES[name] = profile


def inlet_profile(name: str) -> VectorFunction:
    try:
        return INLET_PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown inlet profile '{name}'") from None


class BoundarySegment(BaseModel):
    """A straight piece of one side of the rectangle carrying a boundary condition"""
    side: str = Field(..., description="left, right, bottom or top")
    lower: float = Field(..., description="Start coordinate along the side")
    upper: float = Field(..., description="End coordinate along the side")
    tag: BoundaryTag = Field(..., description="Condition imposed on the segment")


class CaseGeometry(BaseModel):
    """Rectangle and boundary segments of a benchmark; untagged boundary is wall"""
    name: CaseName
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    segments: List[BoundarySegment]


def _seg(side: str, lower: float, upper: float, tag: BoundaryTag) -> BoundarySegment:
    return BoundarySegment(side=side, lower=lower, upper=upper, tag=tag)


CASE_GEOMETRIES: Dict[CaseName, CaseGeometry] = {
    CaseName.PIPE_BEND: CaseGeometry(
        name=CaseName.PIPE_BEND, x_range=(0.0, 1.0), y_range=(0.0, 1.0),
        segments=[
            _seg("left", 0.7, 0.9, BoundaryTag.inlet("unit_x")),
            _seg("bottom", 0.7, 0.9, BoundaryTag.outlet()),
        ]),
    CaseName.LEFT_INFLOW: CaseGeometry(
        name=CaseName.LEFT_INFLOW, x_range=(0.0, 1.0), y_range=(0.0, 1.0),
        segments=[
            _seg("left", 0.0, 1.0, BoundaryTag.inlet("parabolic")),
            _seg("right", 0.3, 0.7, BoundaryTag.outlet()),
        ]),
    CaseName.THREE_INFLOWS: CaseGeometry(
        name=CaseName.THREE_INFLOWS, x_range=(0.0, 1.0), y_range=(0.0, 1.0),
        segments=[
            _seg("top", 0.4, 0.6, BoundaryTag.inlet("unit_down")),
            _seg("bottom", 0.4, 0.6, BoundaryTag.inlet("unit_up")),
            _seg("left", 0.4, 0.6, BoundaryTag.inlet("unit_x")),
            _seg("right", 0.4, 0.6, BoundaryTag.outlet()),
        ]),
    CaseName.RUGBY: CaseGeometry(
        name=CaseName.RUGBY, x_range=(-0.5, 1.5), y_range=(-0.5, 0.5),
        segments=[
            _seg("left", -0.5, 0.5, BoundaryTag.inlet("rugby")),
            _seg("right", -0.5, 0.5, BoundaryTag.outlet()),
        ]),
    CaseName.BYPASS: CaseGeometry(
        name=CaseName.BYPASS, x_range=(0.0, 1.5), y_range=(-0.5, 0.5),
        segments=[
            _seg("left", 0.15, 0.35, BoundaryTag.inlet("bypass")),
            _seg("left", -0.35, -0.15, BoundaryTag.inlet("bypass")),
            _seg("right", 0.15, 0.35, BoundaryTag.outlet()),
            _seg("right", -0.35, -0.15, BoundaryTag.outlet()),
        ]),
}


def _grid_count(length: float, n: int, what: str) -> int:
    steps = length * n
    count = int(round(steps))
    if abs(steps - count) > GRID_TOL:
        raise ResolutionError(f"{what} is not a whole number of grid steps for n={n}")
    return count


def structured_mesh(x_range: Tuple[float, float], y_range: Tuple[float, float], n: int,
                    boundary_tags: Optional[Dict[EdgeKey, BoundaryTag]] = None) -> Mesh:
    """Right-triangle mesh of a rectangle with grid spacing 1/n"""
    x0, x1 = x_range
    y0, y1 = y_range
    nx = _grid_count(x1 - x0, n, "domain width")
    ny = _grid_count(y1 - y0, n, "domain height")
    xs = x0 + np.arange(nx + 1) / n
    ys = y0 + np.arange(ny + 1) / n
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    cells = np.stack([np.column_stack([v00, v10, v11]),
                      np.column_stack([v00, v11, v01])], axis=1).reshape(-1, 3)
    return build_topology(vertices, cells, boundary_tags)


def _side_coordinate(geometry: CaseGeometry, midpoint: np.ndarray) -> Tuple[str, float]:
    (x0, x1), (y0, y1) = geometry.x_range, geometry.y_range
    mx, my = midpoint
    if abs(mx - x0) < GRID_TOL:
        return "left", my
    if abs(mx - x1) < GRID_TOL:
        return "right", my
    if abs(my - y0) < GRID_TOL:
        return "bottom", mx
    return "top", mx


def generate_case_mesh(case: CaseName, n: int) -> Mesh:
    """
    Structured level-0 mesh of a benchmark case with its boundary tagged.

    Args:
        case: benchmark name
        n: grid steps per unit length (at least 4)

    Raises:
        ResolutionError: n too small, or a segment endpoint is not on a grid line
    """
    case = CaseName(case)
    if n < 4:
        raise ResolutionError(f"resolution n={n} is below the minimum of 4")
    geometry = CASE_GEOMETRIES[case]
    for segment in geometry.segments:
        origin = geometry.x_range[0] if segment.side in ("bottom", "top") else geometry.y_range[0]
        for endpoint in (segment.lower, segment.upper):
            _grid_count(endpoint - origin, n, f"{segment.side} segment endpoint {endpoint}")

    mesh = structured_mesh(geometry.x_range, geometry.y_range, n)
    tags: Dict[EdgeKey, BoundaryTag] = {}
    for e in mesh.boundary_edges.tolist():
        side, s = _side_coordinate(geometry, mesh.edge_midpoints[e])
        tag = BoundaryTag.wall()
        for segment in geometry.segments:
            if segment.side == side and segment.lower <= s <= segment.upper:
                tag = segment.tag
                break
        p, q = mesh.edges[e]
        tags[(int(p), int(q))] = tag
    mesh = mesh.with_boundary_tags(tags)
    logger.info("Generated {} mesh with n={}: {} vertices, {} cells",
                case.value, n, mesh.num_vertices, mesh.num_cells)
    return mesh

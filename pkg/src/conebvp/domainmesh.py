"""Structured polar meshes of sector-like domains inside or outside a 2-D cone.

Vertices are stored in geodesic polar coordinates (r, theta) about the cone
vertex.  Elements are straight triangles in the normal-coordinate chart
x = r (cos theta, sin theta), in which the space-form metric is smooth at the
vertex; see :mod:`conebvp.assembly` for the metric itself.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .spaceform import (
    ANTIPODE_MARGIN,
    DomainError,
    SpaceForm,
    as_spaceform,
    distance_arrays,
    normalize_angle,
)

MESH_TOL = 1e-12


class Side(enum.Enum):
    INTERIOR = "INTERIOR"
    EXTERIOR = "EXTERIOR"


class Tag(enum.IntEnum):
    GAMMA0 = 0  # graph part of the boundary
    GAMMA1 = 1  # cone walls


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class ConeSpec:
    """Cone with angular section [theta_lo, theta_hi] and the side the domain lives on."""

    theta_lo: float
    theta_hi: float
    side: Side = Side.INTERIOR

    def __post_init__(self):
        side = Side(self.side) if not isinstance(self.side, Side) else self.side
        object.__setattr__(self, "side", side)
        width = self.theta_hi - self.theta_lo
        if not 0 < width < 2 * np.pi:
            raise DomainError(f"need 0 < theta_hi - theta_lo < 2*pi, got {width!r}")

    @property
    def opening(self) -> float:
        """Opening angle of the cone itself."""
        return self.theta_hi - self.theta_lo

    @property
    def is_convex(self) -> bool:
        return self.opening <= np.pi + 1e-12

    @property
    def start(self) -> float:
        return self.theta_lo if self.side is Side.INTERIOR else self.theta_hi

    @property
    def width(self) -> float:
        """Angular width of the domain (complement of the cone for EXTERIOR)."""
        return self.opening if self.side is Side.INTERIOR else 2 * np.pi - self.opening

    @property
    def active_interval(self) -> tuple[float, float]:
        return self.start, self.start + self.width

    def rays(self, ntheta: int) -> np.ndarray:
        return self.start + self.width * np.arange(ntheta + 1) / ntheta


@dataclass(frozen=True)
class RadialGraph:
    """Samples (theta, rho) of the graph r = rho(theta) bounding the domain.

    Angles are measured along the active interval of the cone (not wrapped),
    increasing, and must cover it.  Evaluation between samples is linear.
    """

    thetas: np.ndarray
    rhos: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        p = np.asarray(self.rhos, dtype=float)
        if t.ndim != 1 or t.shape != p.shape or t.size < 2:
            raise DomainError("graph needs matching 1-D theta/rho arrays with >= 2 samples")
        if np.any(np.diff(t) <= 0):
            raise DomainError("graph samples must be strictly increasing in theta")
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "rhos", p)

    def __call__(self, theta):
        return np.interp(theta, self.thetas, self.rhos)

    @property
    def samples(self):
        return list(zip(self.thetas.tolist(), self.rhos.tolist()))


def constant_graph(cone: ConeSpec, R: float, nsamples: int = 2) -> RadialGraph:
    t = np.linspace(*cone.active_interval, max(nsamples, 2))
    return RadialGraph(t, np.full_like(t, float(R)))


def perturbed_graph(cone: ConeSpec, R: float, amplitude: float = 0.1, mode: int = 1,
                    nsamples: int = 513) -> RadialGraph:
    """rho = R (1 + amplitude cos(2 pi mode (theta - start) / width))."""
    a, b = cone.active_interval
    t = np.linspace(a, b, nsamples)
    return RadialGraph(t, R * (1 + amplitude * np.cos(2 * np.pi * mode * (t - a) / (b - a))))


def offcenter_cap_graph(sf, d: float, R: float, theta0: float, thetas) -> RadialGraph:
    """Graph of the geodesic circle of radius R about the point (d, theta0).

    On each ray the larger root of dist((rho, theta), (d, theta0)) = R is taken,
    found by bisection to 1e-12.
    """
    sf = as_spaceform(sf)
    thetas = np.asarray(thetas, dtype=float)
    if d < 0 or R <= 0:
        raise DomainError("need d >= 0 and R > 0")
    if d == 0:
        return RadialGraph(thetas, np.full_like(thetas, float(R)))
    hi = d + R if sf.curvature != 1 else min(d + R, np.pi - ANTIPODE_MARGIN)

    def g(rho, th):
        return distance_arrays(sf, rho, th, d, theta0) - R

    rhos = np.empty_like(thetas)
    grid = np.linspace(0.0, hi, 2049)
    for k, th in enumerate(thetas):
        vals = g(grid, th)
        above = np.nonzero(vals <= 0)[0]
        if vals[-1] < -1e-14 or above.size == 0:
            raise DomainError(f"geodesic circle about p0 does not meet ray theta={th:.6g}")
        i = above[-1]
        if i == grid.size - 1:
            rhos[k] = grid[-1]
            continue
        lo, up = grid[i], grid[i + 1]
        while up - lo > 1e-12:
            mid = 0.5 * (lo + up)
            if g(mid, th) <= 0:
                lo = mid
            else:
                up = mid
        rhos[k] = 0.5 * (lo + up)
    return RadialGraph(thetas, rhos)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated sector-like domain.

    ``r``/``theta`` hold vertex polar coordinates (theta wrapped to [0, 2 pi)),
    ``triangles`` are counterclockwise, ``boundary_edges`` are oriented with the
    domain on their left, and ``edge_tags`` holds a :class:`Tag` per edge.
    """

    r: np.ndarray
    theta: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    apex_index: int | None
    spaceform: SpaceForm
    nr: int = 0
    ntheta: int = 0
    ray_angles: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.r.size

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def xy(self) -> np.ndarray:
        """Vertex positions in the normal-coordinate chart."""
        return np.column_stack([self.r * np.cos(self.theta), self.r * np.sin(self.theta)])

    def edges(self, tag: Tag) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == tag]

    def tagged_vertices(self, tag: Tag) -> np.ndarray:
        return np.unique(self.edges(tag))

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        return self.tagged_vertices(Tag.GAMMA0)

    @property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.dirichlet_nodes] = False
        return np.nonzero(mask)[0]

    def all_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def h(self) -> float:
        """Largest edge length in the chart (used to scale tolerances)."""
        p = self.xy
        e = self.all_edges()
        return float(np.max(np.linalg.norm(p[e[:, 0]] - p[e[:, 1]], axis=1)))

    def vertex(self, i: int):
        from .spaceform import PolarPoint

        return PolarPoint(self.r[i], self.theta[i])

    def ray(self, j: int) -> np.ndarray:
        """Vertex indices along ray j from the apex outward."""
        idx = 1 + np.arange(self.nr) * (self.ntheta + 1) + j
        return np.concatenate([[self.apex_index], idx])


def layer_fractions(nr: int, grading: float = 1.0) -> np.ndarray:
    """Radial layer positions t_i in (0, 1], i = 1..nr, as fractions of rho(theta).

    grading = 1 gives uniform layers.  For grading g > 1 the map
    t -> t^g (g - (g - 1) t) clusters layers toward the apex like t^g while
    keeping unit slope at the outer boundary, so the layer next to GAMMA0 has
    the same width as in the uniform mesh.
    """
    t = np.arange(1, nr + 1) / nr
    g = float(grading)
    return t**g * (g - (g - 1) * t)


def build_sector_mesh(sf, cone: ConeSpec, graph: RadialGraph, nr: int, ntheta: int,
                      grading: float = 1.0) -> Mesh:
    """Structured polar mesh: ntheta+1 rays, nr layers scaled by rho(theta), apex fan."""
    sf = as_spaceform(sf)
    if int(nr) < 1 or int(ntheta) < 1:
        raise MeshError("nr and ntheta must be positive")
    nr, ntheta = int(nr), int(ntheta)
    a, b = cone.active_interval
    if graph.thetas[0] > a + 1e-9 or graph.thetas[-1] < b - 1e-9:
        raise MeshError("graph samples do not cover the active angular interval")
    rays = cone.rays(ntheta)
    rho = graph(rays)
    if np.any(rho <= MESH_TOL):
        raise MeshError("degenerate graph: rho must be positive")
    if sf.curvature == 1 and np.any(rho >= np.pi - ANTIPODE_MARGIN):
        raise MeshError("graph reaches the antipode of the vertex (rho >= pi)")

    nt1 = ntheta + 1
    if not grading >= 1.0:
        raise MeshError("grading exponent must be >= 1")
    layers = layer_fractions(nr, grading)
    r = np.concatenate([[0.0], (layers[:, None] * rho[None, :]).ravel()])
    th = np.concatenate([[rays[0]], np.tile(rays, nr)])

    def v(i, j):
        return 1 + (i - 1) * nt1 + j

    j = np.arange(ntheta)
    tris = [np.column_stack([np.zeros(ntheta, dtype=int), v(1, j), v(1, j + 1)])]
    for i in range(1, nr):
        tris.append(np.column_stack([v(i, j), v(i + 1, j), v(i + 1, j + 1)]))
        tris.append(np.column_stack([v(i, j), v(i + 1, j + 1), v(i, j + 1)]))
    triangles = np.concatenate(tris).astype(np.int64)

    g0 = np.column_stack([v(nr, j), v(nr, j + 1)])
    i = np.arange(1, nr)
    lo_wall = np.concatenate([[[0, v(1, 0)]], np.column_stack([v(i, 0), v(i + 1, 0)])])
    hi_wall = np.concatenate([[[v(1, ntheta), 0]], np.column_stack([v(i + 1, ntheta), v(i, ntheta)])])
    edges = np.concatenate([g0, lo_wall, hi_wall]).astype(np.int64)
    tags = np.concatenate([np.full(ntheta, Tag.GAMMA0), np.full(2 * nr, Tag.GAMMA1)]).astype(np.int64)

    return Mesh(r=r, theta=normalize_angle(th), triangles=triangles, boundary_edges=edges,
                edge_tags=tags, apex_index=0, spaceform=sf, nr=nr, ntheta=ntheta, ray_angles=rays)


def triangle_metric_areas(mesh: Mesh) -> np.ndarray:
    from .assembly import element_geometry

    return element_geometry(mesh).areas


def validate_mesh(mesh: Mesh) -> dict:
    """Structural and geometric diagnostics; never raises."""
    problems = []
    t = mesh.triangles
    V, F = mesh.n_vertices, mesh.n_triangles
    edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    E = uniq.shape[0]
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    boundary = {tuple(e) for e in uniq[counts == 1]}
    tagged = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    if boundary != tagged:
        problems.append("tagged boundary edges differ from topological boundary")
    n0 = int(np.sum(mesh.edge_tags == Tag.GAMMA0))
    n1 = int(np.sum(mesh.edge_tags == Tag.GAMMA1))
    if n0 == 0:
        problems.append("no GAMMA0 edges")
    if n1 == 0:
        problems.append("no GAMMA1 edges")
    euler = V - E + F
    if euler != 1:
        problems.append(f"Euler characteristic {euler} != 1")

    p = mesh.xy
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    signed = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    if np.any(signed <= 0):
        problems.append("non-positive oriented triangle area")
    try:
        areas = triangle_metric_areas(mesh)
        min_area = float(areas.min())
    except Exception as exc:  # diagnostics must not raise
        problems.append(f"metric area evaluation failed: {exc}")
        min_area = float("nan")
    if not min_area > 0:
        problems.append("non-positive metric triangle area")

    def angle(u, w):
        cosang = np.sum(u * w, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
        return np.arccos(np.clip(cosang, -1, 1))

    with np.errstate(invalid="ignore", divide="ignore"):
        angles = np.concatenate([angle(b - a, c - a), angle(a - b, c - b), angle(a - c, b - c)])
    return {
        "n_vertices": V,
        "n_edges": E,
        "n_triangles": F,
        "euler_characteristic": int(euler),
        "n_gamma0_edges": n0,
        "n_gamma1_edges": n1,
        "min_metric_area": min_area,
        "min_angle_deg": float(np.degrees(np.nanmin(angles))),
        "h_max": mesh.h(),
        "valid": not problems,
        "problems": problems,
    }


def export_mesh(mesh: Mesh, path) -> None:
    """Plain-text export: vertices (r theta), triangles, boundary edges (i j TAG)."""
    lines = [f"VERTICES {mesh.n_vertices}"]
    lines += [f"{r:.17g} {t:.17g}" for r, t in zip(mesh.r.tolist(), mesh.theta.tolist())]
    lines.append(f"TRIANGLES {mesh.n_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"BOUNDARY_EDGES {mesh.boundary_edges.shape[0]}")
    lines += [f"{i} {j} {Tag(t).name}" for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.edge_tags.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path, sf) -> Mesh:
    """Inverse of :func:`export_mesh`.  The apex is the vertex with r == 0, if any."""
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    k = 0

    def section(name):
        nonlocal k
        if rows[k][0] != name:
            raise MeshError(f"expected section {name}, found {rows[k][0]}")
        n = int(rows[k][1])
        block = rows[k + 1:k + 1 + n]
        k += n + 1
        return block

    verts = np.array(section("VERTICES"), dtype=float).reshape(-1, 2)
    tris = np.array(section("TRIANGLES"), dtype=np.int64).reshape(-1, 3)
    be = section("BOUNDARY_EDGES")
    edges = np.array([[int(a), int(b)] for a, b, _ in be], dtype=np.int64).reshape(-1, 2)
    tags = np.array([Tag[t].value for _, _, t in be], dtype=np.int64)
    apex = np.nonzero(verts[:, 0] == 0)[0]
    return Mesh(r=verts[:, 0], theta=verts[:, 1], triangles=tris, boundary_edges=edges, edge_tags=tags,
                apex_index=int(apex[0]) if apex.size else None, spaceform=as_spaceform(sf))

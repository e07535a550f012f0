"""Gradient recovery, GAMMA0 normal-derivative traces and integration on meshes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import QUAD_BARY, element_geometry, inverse_metric
from .domainmesh import Mesh, MeshError, Tag
from .spaceform import warp_ratio

GAUSS3_NODES = 0.5 * (1 + np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]))
GAUSS3_WEIGHTS = np.array([5 / 18, 8 / 18, 5 / 18])


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-vertex gradient in the orthonormal polar frame.

    ``radial`` is du/dr and ``angular`` is (1/h) du/dtheta.  ``covector`` keeps
    the chart components, which stay meaningful at the apex where the polar
    frame is undefined.
    """

    radial: np.ndarray
    angular: np.ndarray
    covector: np.ndarray

    @property
    def norm2(self) -> np.ndarray:
        return self.radial**2 + self.angular**2


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """du/dnu at the midpoint of every GAMMA0 edge, with metric edge lengths."""

    edges: np.ndarray       # (E, 2) vertex indices, domain on the left
    values: np.ndarray      # (E,)
    lengths: np.ndarray     # (E,)
    mid_r: np.ndarray       # (E,) geodesic radius of the chord midpoint
    mid_theta: np.ndarray   # (E,)
    dr_dnu: np.ndarray      # (E,) <grad r, nu> at the midpoint
    corner: np.ndarray      # (E,) True for edges touching a GAMMA1 vertex

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())


def element_gradients(mesh: Mesh, u, geom=None) -> np.ndarray:
    """Constant chart gradient (covector) of the P1 field on each triangle."""
    geom = geom or element_geometry(mesh)
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError("field is not aligned with the mesh vertices")
    return np.einsum("ta,tad->td", u[mesh.triangles], geom.grad_bary)


def polar_frame(mesh: Mesh, covector: np.ndarray, r=None, theta=None):
    """Convert chart covectors at points (r, theta) to (du/dr, (1/h) du/dtheta)."""
    r = mesh.r if r is None else r
    theta = mesh.theta if theta is None else theta
    e = np.column_stack([np.cos(theta), np.sin(theta)])
    ep = np.column_stack([-np.sin(theta), np.cos(theta)])
    s = warp_ratio(mesh.spaceform, r)
    return np.sum(covector * e, axis=1), np.sum(covector * ep, axis=1) / s


def recover_gradient(mesh: Mesh, u) -> GradientField:
    """Gradient at every vertex from a local quadratic least-squares fit of nodal values.

    The fit uses the vertex's two-ring of neighbours in the normal-coordinate
    chart and is differentiated at the vertex (polynomial-preserving recovery).
    Quadratics are reproduced exactly, so the recovered gradient is second
    order at boundary vertices too, where plain averaging of element gradients
    is only first order.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError("field is not aligned with the mesh vertices")
    xy = mesh.xy
    cov = np.empty((mesh.n_vertices, 2))
    for v, nodes in enumerate(vertex_neighbourhoods(mesh)):
        d = xy[nodes] - xy[v]
        scale = np.max(np.abs(d))
        d = d / scale
        X = np.column_stack([np.ones(nodes.size), d[:, 0], d[:, 1], d[:, 0] ** 2, d[:, 0] * d[:, 1], d[:, 1] ** 2])
        coef, *_ = np.linalg.lstsq(X, u[nodes], rcond=None)
        cov[v] = coef[1:3] / scale
    radial, angular = polar_frame(mesh, cov)
    return GradientField(radial, angular, cov)


def vertex_neighbourhoods(mesh: Mesh, rings: int = 2):
    """Vertex index arrays of the ``rings``-ring around every vertex (vertex included)."""
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(mesh.n_vertices,) * 2)
    adj = ((adj + adj.T + sp.identity(mesh.n_vertices)) > 0).astype(np.int32).tocsr()
    reach = adj
    for _ in range(rings - 1):
        reach = ((reach @ adj) > 0).astype(np.int32).tocsr()
    return [reach.indices[reach.indptr[i]:reach.indptr[i + 1]] for i in range(mesh.n_vertices)]


def averaged_gradient(mesh: Mesh, u) -> GradientField:
    """Plain metric-area weighted average of adjacent element gradients."""
    geom = element_geometry(mesh)
    grads = element_gradients(mesh, u, geom)
    w = geom.areas
    num = np.zeros((mesh.n_vertices, 2))
    den = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(num, mesh.triangles[:, k], grads * w[:, None])
        np.add.at(den, mesh.triangles[:, k], w)
    cov = num / den[:, None]
    radial, angular = polar_frame(mesh, cov)
    return GradientField(radial, angular, cov)


def _edge_owner(mesh: Mesh, edges: np.ndarray) -> np.ndarray:
    t = mesh.triangles
    owner = {}
    for k, (a, b, c) in enumerate(t.tolist()):
        for e in ((a, b), (b, c), (c, a)):
            owner[e] = k
    try:
        return np.array([owner[(i, j)] for i, j in edges.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise MeshError(f"boundary edge {exc.args[0]} is not a counterclockwise edge of any triangle") from exc


def normal_derivative_gamma0(mesh: Mesh, u) -> BoundaryTrace:
    """One-sided outward normal derivative at the midpoint of each GAMMA0 edge."""
    edges = mesh.edges(Tag.GAMMA0)
    if edges.size == 0:
        raise MeshError("mesh has no GAMMA0 edges")
    owner = _edge_owner(mesh, edges)
    grads = element_gradients(mesh, u)[owner]
    xy = mesh.xy
    a, b = xy[edges[:, 0]], xy[edges[:, 1]]
    t = b - a
    mid = 0.5 * (a + b)
    ginv, _, rmid = inverse_metric(mesh.spaceform, mid)
    # outward = right of the edge direction since the domain is on the left
    nflat = np.column_stack([t[:, 1], -t[:, 0]])
    nu = np.einsum("eij,ej->ei", ginv, nflat)
    nu /= np.sqrt(np.sum(nu * nflat, axis=1))[:, None]
    values = np.sum(grads * nu, axis=1)
    safe = np.where(rmid > 0, rmid, 1.0)
    dr_dnu = np.sum(mid / safe[:, None] * nu, axis=1)

    gq = a[:, None, :] + GAUSS3_NODES[None, :, None] * t[:, None, :]
    gq_inv, _, _ = inverse_metric(mesh.spaceform, gq)
    G = np.linalg.inv(gq_inv)
    speed = np.sqrt(np.einsum("ei,eqij,ej->eq", t, G, t))
    lengths = speed @ GAUSS3_WEIGHTS

    walls = mesh.tagged_vertices(Tag.GAMMA1)
    corner = np.isin(edges, walls).any(axis=1)
    return BoundaryTrace(edges, values, lengths, rmid, np.arctan2(mid[:, 1], mid[:, 0]) % (2 * np.pi),
                         dr_dnu, corner)


def integrate_volume(mesh: Mesh, integrand, geom=None) -> float:
    """Integral of the P1 interpolant of nodal values against the volume form."""
    geom = geom or element_geometry(mesh)
    f = np.asarray(integrand, dtype=float)
    if f.shape != (mesh.n_vertices,):
        raise ValueError("integrand is not aligned with the mesh vertices")
    fq = f[mesh.triangles] @ QUAD_BARY.T  # (T, Q)
    return float(np.sum(geom.weights * fq))


def integrate_gamma0(trace: BoundaryTrace, weight=None) -> float:
    """Midpoint rule over GAMMA0: sum of length * trace value * weight."""
    w = np.ones_like(trace.values) if weight is None else np.asarray(weight, dtype=float)
    return float(np.sum(trace.lengths * trace.values * w))

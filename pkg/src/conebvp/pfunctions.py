"""The two P-functions of the SERRIN problem and their discrete maximum-principle tests.

    P       = |grad u|^2 + 2u + K u^2
    P_tilde = <grad u, grad h'> + u h' + h'

On the sphere (K = 1) P is |grad u|^2 + 2u + u^2; for the cap solutions it is
identically tan^2 R and P_tilde is sec R.  The K u^2 term keeps P constant on
the flat (R^2) and hyperbolic (tanh^2 R) caps as well.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .assembly import stiffness_matrix
from .domainmesh import Mesh, Tag
from .postprocess import GradientField
from .spaceform import SpaceForm, as_spaceform, warp, warp_prime

TOL_FACTOR = 10.0  # tolerance = TOL_FACTOR * h^2 * max|P|


@dataclass(frozen=True)
class PReport:
    interior_max: float
    gamma0_max: float
    gamma0_min: float
    constancy_spread: float
    laplacian_negativity: float
    harmonic_residual: float
    harmonic_residual_max: float
    tolerance: float
    h: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def p_function(mesh: Mesh, u, grad: GradientField) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return grad.norm2 + 2 * u + mesh.spaceform.curvature * u * u


def p_tilde(mesh: Mesh, u, grad: GradientField, sf: SpaceForm | None = None) -> np.ndarray:
    """<grad u, grad h'> + u h' + h', with grad h' = -K h(r) d/dr about the cone vertex."""
    sf = as_spaceform(sf if sf is not None else mesh.spaceform)
    u = np.asarray(u, dtype=float)
    hp = warp_prime(sf, mesh.r)
    return grad.radial * (-sf.curvature * warp(sf, mesh.r)) + u * hp + hp


def weak_laplacian(mesh: Mesh, field, stiffness=None):
    """Masses -A field at vertices off GAMMA0, i.e. the integrals of (Delta field) phi_i.

    Returns (vertex indices, masses).
    """
    A = stiffness if stiffness is not None else stiffness_matrix(mesh)
    masses = -(A @ np.asarray(field, dtype=float))
    free = mesh.free_nodes
    return free, masses[free]


def vertex_areas(mesh: Mesh) -> np.ndarray:
    from .assembly import element_geometry

    a = element_geometry(mesh).areas / 3
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(a, 3), minlength=mesh.n_vertices)


def laplacian_stats(mesh: Mesh, field, stiffness=None) -> tuple[float, float, float]:
    """Summaries of the weak Laplacian over vertices off GAMMA0.

    Returns (most negative mass, sum |mass| / sum vertex area, max |mass| / vertex area).
    The middle value is the area-averaged |Delta field|; the last one is a
    pointwise estimate that is dominated by the small cells at the apex.
    """
    idx, m = weak_laplacian(mesh, field, stiffness)
    if idx.size == 0:
        return 0.0, 0.0, 0.0
    area = vertex_areas(mesh)[idx]
    return float(m.min()), float(np.sum(np.abs(m)) / np.sum(area)), float(np.max(np.abs(m) / area))


def max_principle_check(mesh: Mesh, P, stiffness=None, harmonic_field=None) -> PReport:
    """Check that P attains its maximum on GAMMA0 and is weakly subharmonic.

    ``harmonic_field`` (usually P_tilde) feeds the harmonic residual.
    """
    P = np.asarray(P, dtype=float)
    on0 = np.zeros(mesh.n_vertices, dtype=bool)
    on0[mesh.tagged_vertices(Tag.GAMMA0)] = True
    h = mesh.h()
    tol = TOL_FACTOR * h * h * float(np.max(np.abs(P)))
    A = stiffness if stiffness is not None else stiffness_matrix(mesh)
    neg = laplacian_stats(mesh, P, A)[0]
    if harmonic_field is not None:
        _, harm, harm_max = laplacian_stats(mesh, harmonic_field, A)
    else:
        harm = harm_max = float("nan")
    interior_max = float(P[~on0].max()) if np.any(~on0) else float("-inf")
    g0max, g0min = float(P[on0].max()), float(P[on0].min())
    passed = interior_max <= g0max + tol and neg >= -tol
    return PReport(interior_max, g0max, g0min, float(P.max() - P.min()), neg, harm, harm_max, tol, h,
                   bool(passed))

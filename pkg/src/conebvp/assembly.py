"""P1 finite elements for the Laplace-Beltrami operator on sector meshes.

The triangles are straight in the normal-coordinate chart x = r (cos t, sin t).
In that chart the polar metric dr^2 + h(r)^2 dt^2 reads

    G(x) = e e^T + s^2 (I - e e^T),   e = x / |x|,   s = h(r) / r,

with sqrt(det G) = s and G^{-1} = e e^T + s^{-2} (I - e e^T).  Both are smooth
at the cone vertex, so no special apex element is needed.  Integrals use the
3-point interior rule with barycentric points (2/3, 1/6, 1/6).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domainmesh import Mesh
from .spaceform import SpaceForm, as_spaceform, warp_prime, warp_ratio

QUAD_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
QUAD_WEIGHTS = np.full(3, 1 / 3)


class Kind(enum.Enum):
    MOLZON = "MOLZON"  # Delta u = -n h'(r)
    SERRIN = "SERRIN"  # Delta u + n K u = -n
    EIGEN = "EIGEN"    # Delta u + lambda u = 0


class SolverError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    kind: Kind
    dimension_n: int = 2
    spaceform: SpaceForm = SpaceForm(1)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "spaceform", as_spaceform(self.spaceform))
        if int(self.dimension_n) < 1:
            raise ValueError("dimension_n must be positive")


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    chart_area: np.ndarray  # (T,) coordinate area in the chart
    grad_bary: np.ndarray   # (T, 3, 2) chart gradients of the barycentric functions
    qpoints: np.ndarray     # (T, Q, 2)
    qr: np.ndarray          # (T, Q) geodesic radius at quadrature points
    ginv: np.ndarray        # (T, Q, 2, 2) inverse metric
    sqrtg: np.ndarray       # (T, Q) volume density
    weights: np.ndarray     # (T, Q) chart_area * rule weight * sqrtg

    @property
    def areas(self) -> np.ndarray:
        """Metric area of each triangle."""
        return self.weights.sum(axis=1)


def inverse_metric(sf, x: np.ndarray):
    """Return (G^{-1}, sqrt(det G), r) at chart points x[..., 2]."""
    sf = as_spaceform(sf)
    r = np.linalg.norm(x, axis=-1)
    s = warp_ratio(sf, r)
    safe = np.where(r > 0, r, 1.0)
    e = x / safe[..., None]
    ee = e[..., :, None] * e[..., None, :]
    eye = np.eye(2)
    ginv = ee + (1.0 / s**2)[..., None, None] * (eye - ee)
    ginv = np.where((r > 0)[..., None, None], ginv, eye)
    return ginv, np.asarray(s), r


def element_geometry(mesh: Mesh) -> ElementGeometry:
    p = mesh.xy[mesh.triangles]  # (T, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    # gradients of barycentric coordinates: rows of the inverse Jacobian
    inv = np.empty((p.shape[0], 2, 2))
    inv[:, 0, 0] = d2[:, 1] / det
    inv[:, 0, 1] = -d2[:, 0] / det
    inv[:, 1, 0] = -d1[:, 1] / det
    inv[:, 1, 1] = d1[:, 0] / det
    g = np.empty((p.shape[0], 3, 2))
    g[:, 1] = inv[:, 0]
    g[:, 2] = inv[:, 1]
    g[:, 0] = -g[:, 1] - g[:, 2]
    q = np.einsum("qa,tad->tqd", QUAD_BARY, p)
    ginv, sqrtg, r = inverse_metric(mesh.spaceform, q)
    w = area[:, None] * QUAD_WEIGHTS[None, :] * sqrtg
    return ElementGeometry(area, g, q, r, ginv, sqrtg, w)


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """Stiffness A, mass M, load b and the Dirichlet (closure of GAMMA0) node set."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    load: np.ndarray
    dirichlet_nodes: np.ndarray
    mesh: Mesh
    spec: ProblemSpec

    @property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.load.size, dtype=bool)
        mask[self.dirichlet_nodes] = False
        return np.nonzero(mask)[0]

    def operator(self) -> sp.csr_matrix:
        """The matrix of the boundary-value problem: A - nK M (SERRIN) or A."""
        if self.spec.kind is Kind.SERRIN:
            nK = self.spec.dimension_n * self.spec.spaceform.curvature
            return (self.stiffness - nK * self.mass).tocsr()
        return self.stiffness


def _scatter(tri: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def stiffness_matrix(mesh: Mesh, geom: ElementGeometry | None = None) -> sp.csr_matrix:
    geom = geom or element_geometry(mesh)
    # sum_q w_q * grad_a^T G^{-1}(x_q) grad_b
    kq = np.einsum("tq,tqij->tij", geom.weights, geom.ginv)
    local = np.einsum("tai,tij,tbj->tab", geom.grad_bary, kq, geom.grad_bary)
    A = _scatter(mesh.triangles, local, mesh.n_vertices)
    return ((A + A.T) * 0.5).tocsr()


def mass_matrix(mesh: Mesh, geom: ElementGeometry | None = None) -> sp.csr_matrix:
    geom = geom or element_geometry(mesh)
    local = np.einsum("tq,qa,qb->tab", geom.weights, QUAD_BARY, QUAD_BARY)
    return _scatter(mesh.triangles, local, mesh.n_vertices)


def load_vector(mesh: Mesh, qvalues: np.ndarray, geom: ElementGeometry | None = None) -> np.ndarray:
    """Integrate a function given at quadrature points against every hat function."""
    geom = geom or element_geometry(mesh)
    local = np.einsum("tq,tq,qa->ta", geom.weights, qvalues, QUAD_BARY)
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def assemble(mesh: Mesh, spec: ProblemSpec) -> SparseSystem:
    if spec.spaceform != mesh.spaceform:
        raise ValueError(f"problem is posed on {spec.spaceform.name} but the mesh lives on {mesh.spaceform.name}")
    if spec.dimension_n != 2:
        raise ValueError("surface finite elements require dimension_n = 2; use conebvp.radial for general n")
    geom = element_geometry(mesh)
    A = stiffness_matrix(mesh, geom)
    M = mass_matrix(mesh, geom)
    n = spec.dimension_n
    if spec.kind is Kind.MOLZON:
        b = n * load_vector(mesh, warp_prime(mesh.spaceform, geom.qr), geom)
    elif spec.kind is Kind.SERRIN:
        b = n * load_vector(mesh, np.ones_like(geom.qr), geom)
    else:
        b = np.zeros(mesh.n_vertices)
    return SparseSystem(A, M, b, mesh.dirichlet_nodes, mesh, spec)


def _factor(K: sp.spmatrix):
    try:
        lu = spla.splu(K.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}; smallest pivot is 0") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.size and piv.min() <= 1e-13 * piv.max():
        raise SolverError(f"operator numerically singular: smallest pivot {piv.min():.3e} "
                          f"(largest {piv.max():.3e})")
    return lu


def solve_bvp(system: SparseSystem, spec: ProblemSpec | None = None, load: np.ndarray | None = None) -> np.ndarray:
    """Solve with u = 0 on GAMMA0; the walls carry the natural condition.

    ``load`` overrides the assembled right-hand side.
    """
    spec = spec or system.spec
    if spec.kind is Kind.EIGEN:
        raise ValueError("solve_bvp handles MOLZON and SERRIN; use solve_eigen for EIGEN")
    free = system.free_nodes
    L = system.operator().tocsr()[free][:, free]
    b = system.load if load is None else np.asarray(load, dtype=float)
    u = np.zeros(system.load.size)
    if free.size:
        u[free] = _factor(L).solve(b[free])
    return u


def operator_inertia(system: SparseSystem, k: int = 6) -> dict:
    """Inertia (negative, zero, positive counts) of the free-node operator.

    Only SERRIN on the sphere can be indefinite; there the negative count is the
    number of generalized eigenvalues of (A, M) below nK, probed up to ``k``.
    """
    free = system.free_nodes
    nfree = free.size
    spec = system.spec
    nK = spec.dimension_n * spec.spaceform.curvature
    if spec.kind is not Kind.SERRIN or nK <= 0 or nfree == 0:
        return {"negative": 0, "zero": 0, "positive": int(nfree), "lowest_shifted_eigenvalue": None}
    A = system.stiffness.tocsr()[free][:, free]
    M = system.mass.tocsr()[free][:, free]
    k = min(k, nfree - 2)
    if k < 1:
        lam = np.linalg.eigvalsh(np.linalg.solve(M.toarray(), A.toarray()))
    else:
        lam = np.sort(spla.eigsh(A, k=k, M=M, sigma=0.0, which="LM", v0=np.ones(nfree),
                                 return_eigenvectors=False))
    shifted = lam - nK
    neg = int(np.sum(shifted < -1e-12 * abs(nK)))
    zero = int(np.sum(np.abs(shifted) <= 1e-12 * abs(nK)))
    return {"negative": neg, "zero": zero, "positive": int(nfree - neg - zero),
            "lowest_shifted_eigenvalue": float(shifted[0])}


def solve_eigen(system: SparseSystem, tol: float = 1e-10, maxiter: int = 500):
    """Smallest eigenpair of A x = lambda M x on the free nodes by inverse iteration.

    The eigenfield is M-normalised and positive at the apex.
    """
    free = system.free_nodes
    A = system.stiffness.tocsr()[free][:, free]
    M = system.mass.tocsr()[free][:, free]
    lu = _factor(A)
    x = np.ones(free.size)
    x /= np.sqrt(x @ (M @ x))
    lam = (x @ (A @ x))
    resid = np.inf
    for it in range(1, maxiter + 1):
        y = lu.solve(M @ x)
        y /= np.sqrt(y @ (M @ y))
        new = y @ (A @ y)
        resid = abs(new - lam) / abs(new)
        x, lam = y, new
        if resid < tol:
            break
    else:
        r = np.linalg.norm(A @ x - lam * (M @ x))
        raise ConvergenceError(f"inverse iteration did not converge in {maxiter} steps; "
                               f"last relative change {resid:.3e}, residual norm {r:.3e}")
    u = np.zeros(system.load.size)
    u[free] = x
    mesh = system.mesh
    ref = mesh.apex_index if mesh.apex_index is not None else int(np.argmax(np.abs(u)))
    if u[ref] < 0:
        u = -u
    return float(lam), u

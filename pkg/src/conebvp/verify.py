"""Closed forms, Serrin-constancy and flux residuals, the Rellich identity, and
the per-resolution verification pipeline with its convergence study."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import Kind, ProblemSpec, assemble, operator_inertia, solve_bvp, solve_eigen
from .domainmesh import (
    ConeSpec,
    Mesh,
    RadialGraph,
    build_sector_mesh,
    offcenter_cap_graph,
    perturbed_graph,
    validate_mesh,
)
from .pfunctions import PReport, max_principle_check, p_function, p_tilde
from .postprocess import (
    BoundaryTrace,
    integrate_gamma0,
    integrate_volume,
    normal_derivative_gamma0,
    recover_gradient,
)
from .spaceform import SpaceForm, as_spaceform, distance_arrays, rellich_weight, warp_prime

GUARD = 1e-14
DEFAULT_GRADING = 2.0


class UnsupportedError(ValueError):
    """No closed form covers the requested combination."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _kind(kind) -> Kind:
    return kind if isinstance(kind, Kind) else Kind(kind)


def closed_form_u(sf, kind, n: int, R: float, r):
    """Radial closed-form solutions on the cap of radius R (r measured from its centre).

    MOLZON: cos r - cos R on the sphere; SERRIN: (cos r - cos R) / cos R on the
    sphere; both (R^2 - r^2) / 2 in flat space.
    """
    sf = as_spaceform(sf)
    kind = _kind(kind)
    if kind is Kind.EIGEN:
        raise UnsupportedError("no closed form for the eigenproblem")
    if sf.curvature == -1:
        raise UnsupportedError("closed forms are only available for K = 0 and K = +1")
    r = np.asarray(r, dtype=float)
    if sf.curvature == 0:
        out = 0.5 * (R * R - r * r)
    elif kind is Kind.MOLZON:
        out = np.cos(r) - np.cos(R)
    else:
        out = (np.cos(r) - np.cos(R)) / np.cos(R)
    return float(out) if out.ndim == 0 else out


def c_from_R(sf, kind, R: float) -> float:
    """Neumann constant of the cap solution: -sin R, -tan R (sphere) or -R (flat)."""
    sf = as_spaceform(sf)
    kind = _kind(kind)
    if sf.curvature == -1 or kind is Kind.EIGEN:
        raise UnsupportedError("c(R) is only defined for MOLZON/SERRIN with K = 0 or +1")
    if sf.curvature == 0:
        return -float(R)
    if not 0 < R < math.pi / 2:
        raise ValueError("need 0 < R < pi/2 on the sphere")
    return -math.sin(R) if kind is Kind.MOLZON else -math.tan(R)


def R_from_c(sf, kind, c: float) -> float:
    """Inverse of :func:`c_from_R`."""
    sf = as_spaceform(sf)
    kind = _kind(kind)
    if sf.curvature == -1 or kind is Kind.EIGEN:
        raise UnsupportedError("R(c) is only defined for MOLZON/SERRIN with K = 0 or +1")
    if c >= 0:
        raise ValueError("c must be negative")
    if sf.curvature == 0:
        return -float(c)
    if kind is Kind.MOLZON:
        if c < -1:
            raise ValueError("|c| > 1 has no cap radius for MOLZON on the sphere")
        return math.asin(-c)
    return math.atan(-c)


@dataclass(frozen=True)
class SerrinResidual:
    mean: float
    std: float
    relstd: float
    flagged: bool  # |mean| below guard; relstd taken against max |trace|


def serrin_residual(trace: BoundaryTrace) -> SerrinResidual:
    """Length-weighted mean and relative standard deviation of du/dnu over GAMMA0."""
    if trace.values.size == 0:
        raise ValueError("empty trace")
    w = trace.lengths / trace.lengths.sum()
    mean = float(np.sum(w * trace.values))
    std = float(np.sqrt(np.sum(w * (trace.values - mean) ** 2)))
    if abs(mean) >= GUARD:
        return SerrinResidual(mean, std, std / abs(mean), False)
    ref = float(np.max(np.abs(trace.values)))
    return SerrinResidual(mean, std, std / ref if ref >= GUARD else 0.0, True)


def flux_compatibility(mesh: Mesh, u, trace: BoundaryTrace, spec: ProblemSpec) -> float:
    """Relative defect of the divergence theorem: GAMMA0 flux versus the volume source.

    The source is n h' for MOLZON and n (1 + K u) for SERRIN; the walls carry no
    flux.  Returns 0 when the source vanishes (below the guard).
    """
    n, K = spec.dimension_n, spec.spaceform.curvature
    if spec.kind is Kind.MOLZON:
        source = n * integrate_volume(mesh, warp_prime(mesh.spaceform, mesh.r))
    elif spec.kind is Kind.SERRIN:
        source = n * integrate_volume(mesh, 1.0 + K * np.asarray(u, dtype=float))
    else:
        raise ValueError("flux compatibility applies to MOLZON and SERRIN")
    if abs(source) < GUARD:
        return 0.0
    return abs(integrate_gamma0(trace) + source) / abs(source)


@dataclass(frozen=True)
class RellichResult:
    lhs: float
    rhs: float
    relres: float
    indeterminate: bool


def rellich_residual(sf, n: int, mesh: Mesh, lam: float, u, trace: BoundaryTrace) -> RellichResult:
    """Compare the eigenvalue with the boundary-integral expression of the Rellich identity."""
    sf = as_spaceform(sf)
    K = sf.curvature
    u = np.asarray(u, dtype=float)
    _, fp = rellich_weight(sf, trace.mid_r)
    df_dnu = fp * trace.dr_dnu
    boundary = integrate_gamma0(trace, df_dnu * trace.values)
    if K == 0:
        vol = integrate_volume(mesh, u * u)
    else:
        f, _ = rellich_weight(sf, mesh.r)
        vol = integrate_volume(mesh, f * u * u)
    if abs(vol) < GUARD:
        return RellichResult(float(lam), float("nan"), float("nan"), True)
    if K == 0:
        rhs = -boundary / (2 * vol)
    else:
        rhs = -n * (n - 2) * K / 4 - boundary / (2 * K * vol)
    return RellichResult(float(lam), float(rhs), abs(lam - rhs) / max(abs(lam), GUARD), False)


# --------------------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class GraphSpec:
    """CONSTANT (cap about the vertex), OFFCENTER (cap about (d, theta0)) or PERTURBED."""

    type: str = "CONSTANT"
    R: float = 0.8
    d: float = 0.0
    theta0: float = 0.0
    amplitude: float = 0.1
    mode: int = 1

    def __post_init__(self):
        if self.type not in ("CONSTANT", "OFFCENTER", "PERTURBED"):
            raise ValueError(f"unknown graph type {self.type!r}")


@dataclass(frozen=True)
class Problem:
    spaceform: SpaceForm
    kind: Kind
    cone: ConeSpec
    graph: GraphSpec
    n: int = 2
    grading: float = DEFAULT_GRADING

    def __post_init__(self):
        object.__setattr__(self, "spaceform", as_spaceform(self.spaceform))
        object.__setattr__(self, "kind", _kind(self.kind))

    @property
    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.kind, self.n, self.spaceform)

    def radial_graph(self, nsamples: int) -> RadialGraph:
        g = self.graph
        a, b = self.cone.active_interval
        if g.type == "CONSTANT":
            t = np.linspace(a, b, 2)
            return RadialGraph(t, np.full(2, g.R))
        if g.type == "PERTURBED":
            return perturbed_graph(self.cone, g.R, g.amplitude, g.mode, nsamples=max(nsamples, 513))
        return offcenter_cap_graph(self.spaceform, g.d, g.R, g.theta0, np.linspace(a, b, nsamples))

    def mesh(self, nr: int, ntheta: int) -> Mesh:
        # sample the graph exactly at the mesh rays
        graph = self.radial_graph(ntheta + 1) if self.graph.type == "OFFCENTER" else self.radial_graph(0)
        return build_sector_mesh(self.spaceform, self.cone, graph, nr, ntheta, grading=self.grading)

    def exact_solution(self, mesh: Mesh):
        """Closed-form nodal values when the configuration has one, else None."""
        g = self.graph
        sf = self.spaceform
        if self.kind is Kind.EIGEN or sf.curvature == -1 or g.type == "PERTURBED":
            return None
        if g.type == "CONSTANT":
            return closed_form_u(sf, self.kind, self.n, g.R, mesh.r)
        if self.kind is Kind.MOLZON and sf.curvature == 1:
            return None  # the MOLZON source is centred at the vertex; off-centre caps do not solve it
        r = distance_arrays(sf, mesh.r, mesh.theta, g.d, g.theta0)
        return closed_form_u(sf, self.kind, self.n, g.R, r)

    def expected_c(self):
        if self.kind is Kind.EIGEN or self.spaceform.curvature == -1 or self.graph.type == "PERTURBED":
            return None
        if self.graph.type == "OFFCENTER" and self.kind is Kind.MOLZON and self.spaceform.curvature == 1:
            return None
        return c_from_R(self.spaceform, self.kind, self.graph.R)


@dataclass
class VerifyReport:
    nr: int
    ntheta: int
    h: float
    closed_form_linf_error: float | None = None
    serrin_mean: float | None = None
    serrin_relstd: float | None = None
    serrin_flagged: bool = False
    expected_c: float | None = None
    flux_residual: float | None = None
    rellich_lhs: float | None = None
    rellich_rhs: float | None = None
    rellich_relative_residual: float | None = None
    rellich_indeterminate: bool = False
    min_u: float | None = None
    inertia: dict | None = None
    convergence_orders: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class RunResult:
    """Everything computed at one resolution."""

    mesh: Mesh
    report: VerifyReport
    u: np.ndarray
    trace: BoundaryTrace
    mesh_stats: dict
    preport: PReport | None = None
    P: np.ndarray | None = None
    P_tilde: np.ndarray | None = None
    eigenvalue: float | None = None


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_once(problem: Problem, nr: int, ntheta: int, pfunctions: bool = True) -> RunResult:
    """Mesh, assemble, solve and verify one resolution."""
    mesh = _stage("mesh", problem.mesh, nr, ntheta)
    stats = validate_mesh(mesh)
    if not stats["valid"]:
        raise StageError("mesh", ValueError("; ".join(stats["problems"])))
    spec = problem.spec
    system = _stage("assemble", assemble, mesh, spec)
    rep = VerifyReport(nr=nr, ntheta=ntheta, h=stats["h_max"])
    if spec.kind is Kind.EIGEN:
        lam, u = _stage("eigen", solve_eigen, system)
        trace = _stage("trace", normal_derivative_gamma0, mesh, u)
        rel = _stage("rellich", rellich_residual, problem.spaceform, problem.n, mesh, lam, u, trace)
        rep.rellich_lhs, rep.rellich_rhs = rel.lhs, rel.rhs
        rep.rellich_relative_residual = rel.relres
        rep.rellich_indeterminate = rel.indeterminate
        return RunResult(mesh, rep, u, trace, stats, eigenvalue=lam)

    u = _stage("solve", solve_bvp, system)
    rep.inertia = _stage("inertia", operator_inertia, system)
    trace = _stage("trace", normal_derivative_gamma0, mesh, u)
    sr = serrin_residual(trace)
    rep.serrin_mean, rep.serrin_relstd, rep.serrin_flagged = sr.mean, sr.relstd, sr.flagged
    rep.expected_c = problem.expected_c()
    rep.flux_residual = _stage("flux", flux_compatibility, mesh, u, trace, spec)
    rep.min_u = float(u.min())
    exact = problem.exact_solution(mesh)
    if exact is not None:
        rep.closed_form_linf_error = float(np.max(np.abs(u - exact)))
    result = RunResult(mesh, rep, u, trace, stats)
    if pfunctions and spec.kind is Kind.SERRIN:
        grad = _stage("recover", recover_gradient, mesh, u)
        P = p_function(mesh, u, grad)
        Pt = p_tilde(mesh, u, grad)
        result.preport = _stage("pfunctions", max_principle_check, mesh, P, system.stiffness, Pt)
        result.P, result.P_tilde = P, Pt
    return result


def observed_orders(errors) -> list:
    """log2(e_h / e_{h/2}) for successive pairs; None where undefined."""
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        if a is None or b is None or not (a > 0 and b > 0):
            out.append(None)
        else:
            out.append(math.log2(a / b))
    return out


def check_resolutions(resolutions) -> list:
    res = [tuple(int(x) for x in r) for r in resolutions]
    if len(res) < 3:
        raise ValueError("a convergence study needs at least 3 resolutions")
    for (a, b), (c, d) in zip(res[:-1], res[1:]):
        if not (c > a and d > b):
            raise ValueError("resolutions must strictly refine in both nr and ntheta")
    return res


def convergence_study(problem: Problem, resolutions, max_workers: int = 1, pfunctions: bool = True):
    """Run every resolution and return (runs, orders).

    ``orders`` maps closed_form_linf_error, serrin_relstd,
    rellich_relative_residual and harmonic_residual to lists of observed orders.
    """
    res = check_resolutions(resolutions)
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers) as ex:
            runs = list(ex.map(lambda r: run_once(problem, *r, pfunctions=pfunctions), res))
    else:
        runs = [run_once(problem, *r, pfunctions=pfunctions) for r in res]
    series = {
        "closed_form_linf_error": [r.report.closed_form_linf_error for r in runs],
        "serrin_relstd": [r.report.serrin_relstd for r in runs],
        "rellich_relative_residual": [r.report.rellich_relative_residual for r in runs],
        "harmonic_residual": [r.preport.harmonic_residual if r.preport else None for r in runs],
    }
    orders = {k: observed_orders(v) for k, v in series.items()}
    for r in runs:
        r.report.convergence_orders = orders
    return runs, orders

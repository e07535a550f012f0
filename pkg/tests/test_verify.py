import math

import numpy as np
import pytest

from conebvp.assembly import Kind, ProblemSpec, assemble, solve_bvp
from conebvp.domainmesh import ConeSpec, Side, build_sector_mesh, constant_graph
from conebvp.postprocess import BoundaryTrace, normal_derivative_gamma0
from conebvp.verify import (
    GUARD,
    GraphSpec,
    Problem,
    R_from_c,
    StageError,
    UnsupportedError,
    c_from_R,
    check_resolutions,
    closed_form_u,
    convergence_study,
    flux_compatibility,
    observed_orders,
    rellich_residual,
    run_once,
    serrin_residual,
)

WEDGE = ConeSpec(0.0, math.pi / 3)


def test_closed_form_values():
    assert closed_form_u(1, Kind.MOLZON, 2, 0.8, 0.8) == pytest.approx(0.0, abs=1e-16)
    assert closed_form_u(1, Kind.SERRIN, 2, 0.8, 0.0) == pytest.approx(0.4353246, abs=1e-6)
    assert closed_form_u(0, Kind.SERRIN, 2, 1.0, 0.0) == 0.5
    for bad in [(-1, Kind.SERRIN), (1, Kind.EIGEN)]:
        with pytest.raises(UnsupportedError):
            closed_form_u(bad[0], bad[1], 2, 0.8, 0.1)


def test_c_and_R():
    assert R_from_c(1, Kind.SERRIN, -1.0) == pytest.approx(math.pi / 4)
    assert c_from_R(1, Kind.MOLZON, math.pi / 6) == pytest.approx(-0.5)
    assert c_from_R(0, Kind.SERRIN, 0.7) == -0.7
    for R in np.linspace(0.05, 1.5, 30):
        for kind in (Kind.MOLZON, Kind.SERRIN):
            assert R_from_c(1, kind, c_from_R(1, kind, R)) == pytest.approx(R, abs=1e-14)
    with pytest.raises(ValueError):
        R_from_c(1, Kind.MOLZON, -1.5)
    with pytest.raises(UnsupportedError):
        c_from_R(-1, Kind.SERRIN, 0.5)


def _trace(values, lengths=None):
    v = np.asarray(values, dtype=float)
    ln = np.ones_like(v) if lengths is None else np.asarray(lengths, dtype=float)
    z = np.zeros_like(v)
    return BoundaryTrace(np.zeros((v.size, 2), int), v, ln, z, z, z + 1, z.astype(bool))


def test_serrin_residual_cases():
    r = serrin_residual(_trace([-2.0, -2.0, -2.0]))
    assert r.mean == -2.0 and r.relstd == 0.0 and not r.flagged
    r = serrin_residual(_trace([1.0, -1.0], [1.0, 1.0]))
    assert r.flagged and r.relstd == pytest.approx(1.0)
    r = serrin_residual(_trace([1.0, 3.0], [3.0, 1.0]))
    assert r.mean == pytest.approx(1.5)
    with pytest.raises(ValueError):
        serrin_residual(_trace([]))


def test_flux_of_zero_field_is_total_defect():
    m = build_sector_mesh(0, WEDGE, constant_graph(WEDGE, 1.0), 4, 4)
    u = np.zeros(m.n_vertices)
    tr = normal_derivative_gamma0(m, u)
    spec = ProblemSpec(Kind.SERRIN, 2, 0)
    assert flux_compatibility(m, u, tr, spec) == pytest.approx(1.0)  # nothing balances the source


def test_flux_decreases(serrin_cap):
    res = [run_once(serrin_cap, n, n, pfunctions=False).report.flux_residual for n in (16, 32, 64)]
    assert res[0] <= 0.05 and res[2] < res[1] < res[0]


def test_rellich_flat_constant_trace_is_exact():
    m = build_sector_mesh(0, WEDGE, constant_graph(WEDGE, 1.0), 8, 8)
    u = 1 - m.r**2
    tr = normal_derivative_gamma0(m, u)
    const = BoundaryTrace(tr.edges, np.full_like(tr.values, -2.0), tr.lengths, np.ones_like(tr.mid_r),
                          tr.mid_theta, np.ones_like(tr.dr_dnu), tr.corner)
    from conebvp.postprocess import integrate_volume

    rel = rellich_residual(0, 2, m, 1.0, u, const)
    assert rel.rhs == pytest.approx(1.0 * const.total_length * 4 / (2 * integrate_volume(m, u * u)), rel=1e-14)


def test_rellich_indeterminate():
    m = build_sector_mesh(1, WEDGE, constant_graph(WEDGE, 1.0), 4, 4)
    tr = normal_derivative_gamma0(m, np.zeros(m.n_vertices))
    rel = rellich_residual(1, 2, m, 3.0, np.zeros(m.n_vertices), tr)
    assert rel.indeterminate and math.isnan(rel.relres)


def test_rellich_flat_quarter_disk():
    p = Problem(0, Kind.EIGEN, ConeSpec(0, math.pi / 2), GraphSpec("CONSTANT", 1.0))
    r = run_once(p, 48, 48)
    assert r.report.rellich_lhs == pytest.approx(5.783186, rel=0.01)
    assert r.report.rellich_relative_residual < 0.03


def test_run_once_serrin(serrin_cap):
    r = run_once(serrin_cap, 16, 16)
    rep = r.report
    assert rep.closed_form_linf_error < 1e-3
    assert rep.expected_c == pytest.approx(-math.tan(0.8))
    assert rep.inertia["negative"] == 0
    assert r.preport is not None and r.preport.passed
    assert r.mesh_stats["valid"]


def test_orders_and_resolution_checks():
    assert observed_orders([4.0, 1.0, 0.25]) == [2.0, 2.0]
    assert observed_orders([None, 1.0, 0.0]) == [None, None]
    with pytest.raises(ValueError):
        check_resolutions([(8, 8), (8, 8), (16, 16)])
    with pytest.raises(ValueError):
        check_resolutions([(8, 8), (16, 16)])


def test_convergence_study(molzon_cap):
    runs, orders = convergence_study(molzon_cap, [(8, 8), (16, 16), (32, 32)], max_workers=2)
    assert min(orders["closed_form_linf_error"]) > 1.8
    assert min(orders["serrin_relstd"]) > 0.8
    assert all(r.report.min_u >= -1e-6 for r in runs)
    assert runs[0].report.convergence_orders is orders


def test_stage_error_names_stage():
    p = Problem(1, Kind.SERRIN, WEDGE, GraphSpec("CONSTANT", math.pi))
    with pytest.raises(StageError) as info:
        run_once(p, 4, 4)
    assert info.value.stage == "mesh"


def test_offcenter_wall_cap_is_rigid():
    p = Problem(1, Kind.SERRIN, ConeSpec(0.0, math.pi), GraphSpec("OFFCENTER", 0.8, d=0.3, theta0=0.0))
    runs, _ = convergence_study(p, [(12, 36), (24, 72), (48, 144)])
    rel = [r.report.serrin_relstd for r in runs]
    assert rel[2] < rel[1] < rel[0]
    assert runs[-1].report.serrin_mean == pytest.approx(-math.tan(0.8), rel=0.02)
    assert runs[-1].report.closed_form_linf_error < 1e-3


def test_perturbed_graph_is_not_rigid():
    p = Problem(1, Kind.SERRIN, WEDGE, GraphSpec("PERTURBED", 0.8, amplitude=0.1, mode=1))
    rel = [run_once(p, n, n, pfunctions=False).report.serrin_relstd for n in (8, 16, 32)]
    assert min(rel) > 0.1 and rel[-1] >= 0.5 * rel[0]
    assert p.exact_solution(p.mesh(4, 4)) is None and p.expected_c() is None


def test_exterior_exact_solution():
    p = Problem(1, Kind.SERRIN, ConeSpec(0.0, math.pi / 3, Side.EXTERIOR), GraphSpec("CONSTANT", 0.8))
    r = run_once(p, 32, 64, pfunctions=False)
    assert r.report.closed_form_linf_error < 2e-3
    assert abs(r.report.serrin_mean + math.tan(0.8)) < 0.02 * math.tan(0.8)

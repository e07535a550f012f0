import math

import numpy as np
import pytest

from conebvp.assembly import Kind, ProblemSpec, assemble, element_geometry, solve_bvp
from conebvp.domainmesh import ConeSpec, Side, build_sector_mesh, constant_graph
from conebvp.postprocess import (
    averaged_gradient,
    element_gradients,
    integrate_gamma0,
    integrate_volume,
    normal_derivative_gamma0,
    recover_gradient,
)

WEDGE = ConeSpec(0.0, math.pi / 3)
A = WEDGE.opening


def mesh(K=1, n=16, cone=WEDGE, R=0.8):
    return build_sector_mesh(K, cone, constant_graph(cone, R), n, n, grading=2.0)


def test_radial_linear_function_flat():
    # r is smooth away from the apex; the quadratic fit is exact for x and y
    prev = None
    for n in (8, 16, 32):
        m = mesh(0, n)
        g = recover_gradient(m, m.r)
        far = m.r > 0.2
        err = max(np.max(np.abs(g.radial[far] - 1)), np.max(np.abs(g.angular[far])))
        assert err < 0.05
        if prev is not None:
            assert err < prev / 3
        prev = err
    g = recover_gradient(m, m.xy[:, 0])
    assert np.allclose(g.covector, [1.0, 0.0], atol=1e-10)


def test_constant_field_has_zero_gradient():
    m = mesh(1, 6)
    for g in (recover_gradient(m, np.full(m.n_vertices, 3.0)), averaged_gradient(m, np.full(m.n_vertices, 3.0))):
        assert np.max(np.abs(g.covector)) < 1e-10


def test_recovered_gradient_of_serrin_cap():
    errs = []
    for n in (16, 32):
        m = mesh(1, n)
        u = (np.cos(m.r) - math.cos(0.8)) / math.cos(0.8)
        g = recover_gradient(m, u)
        errs.append(np.max(np.abs(g.radial - (-np.sin(m.r) / math.cos(0.8)))))
        assert np.max(np.abs(g.angular)) < 1e-2
    assert errs[1] < errs[0] / 3  # second order, boundary vertices included


def test_gradient_norm_agrees_with_elementwise_metric_form():
    m = mesh(1, 24)
    u = np.cos(m.r) + 0.3 * m.r**2 * np.sin(m.theta)
    g = recover_gradient(m, u)
    geom = element_geometry(m)
    cov = element_gradients(m, u, geom)
    elem = np.einsum("ti,tij,tj->t", cov, geom.ginv.mean(axis=1), cov)
    vert = g.norm2[m.triangles].mean(axis=1)
    assert np.max(np.abs(elem - vert)) < 5 * m.h()


@pytest.mark.parametrize("kind,c", [(Kind.SERRIN, -math.tan(0.8)), (Kind.MOLZON, -math.sin(0.8))])
def test_trace_on_concentric_cap(kind, c):
    m = mesh(1, 48)
    u = solve_bvp(assemble(m, ProblemSpec(kind, 2, 1)))
    tr = normal_derivative_gamma0(m, u)
    assert np.allclose(tr.values, c, rtol=0.02)
    assert np.allclose(tr.dr_dnu, 1.0, atol=1e-3)
    assert tr.corner.sum() == 2


def test_trace_of_zero_and_lengths():
    m = mesh(1, 16)
    tr = normal_derivative_gamma0(m, np.zeros(m.n_vertices))
    assert not tr.values.any()
    # chords are straight in the chart, so lengths approach A sin R at O(h^2)
    assert tr.total_length == pytest.approx(A * math.sin(0.8), rel=2e-3)
    assert integrate_gamma0(tr, np.ones_like(tr.values)) == 0.0


def test_exterior_trace_points_outward():
    cone = ConeSpec(0.0, math.pi / 3, Side.EXTERIOR)
    m = build_sector_mesh(1, cone, constant_graph(cone, 0.8), 32, 64, grading=2.0)
    u = solve_bvp(assemble(m, ProblemSpec(Kind.SERRIN, 2, 1)))
    tr = normal_derivative_gamma0(m, u)
    assert np.all(tr.dr_dnu > 0.999)
    assert np.allclose(tr.values, -math.tan(0.8), rtol=0.02)


def test_integrate_gamma0_additive():
    m = mesh(1, 8)
    u = np.cos(m.r) - math.cos(0.8)
    tr = normal_derivative_gamma0(m, u)
    w = np.linspace(1, 2, tr.values.size)
    half = np.arange(tr.values.size) < 4
    whole = integrate_gamma0(tr, w)
    assert whole == pytest.approx(integrate_gamma0(tr, w * half) + integrate_gamma0(tr, w * ~half), rel=1e-14)
    length = integrate_gamma0(type(tr)(tr.edges, np.ones_like(tr.values), tr.lengths, tr.mid_r, tr.mid_theta,
                                       tr.dr_dnu, tr.corner))
    assert length == pytest.approx(tr.total_length)


def test_volume_integration():
    errs = []
    for n in (8, 16, 32):
        m = mesh(1, n)
        errs.append(abs(integrate_volume(m, np.ones(m.n_vertices)) - A * (1 - math.cos(0.8))))
    assert math.log2(errs[1] / errs[2]) > 1.8
    m = mesh(1, 8)
    u, v = np.cos(m.r), m.theta
    assert integrate_volume(m, np.zeros(m.n_vertices)) == 0.0
    assert integrate_volume(m, 2 * u - 3 * v) == pytest.approx(
        2 * integrate_volume(m, u) - 3 * integrate_volume(m, v), abs=1e-12)
    with pytest.raises(ValueError):
        integrate_volume(m, np.ones(3))

import math

import numpy as np
import pytest
from scipy.special import j0

from conebvp.assembly import Kind
from conebvp.domainmesh import ConeSpec
from conebvp.radial import (
    compare_radial_closed_form,
    radial_rellich,
    sample_profile,
    self_convergence_order,
    solve_radial,
)
from conebvp.spaceform import DomainError
from conebvp.verify import GraphSpec, Problem, UnsupportedError, closed_form_u, run_once

from conftest import bisect


@pytest.mark.parametrize("K", [0, 1])
@pytest.mark.parametrize("kind", [Kind.MOLZON, Kind.SERRIN])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_forms(K, kind, n):
    p = solve_radial(K, n, kind, 0.8, 1024)
    assert compare_radial_closed_form(p) <= 1e-6
    assert p.values[-1] == 0.0


def test_flat_profiles_are_exact():
    # u = (R^2 - r^2)/2 is quadratic, so central differences reproduce it
    for kind in (Kind.MOLZON, Kind.SERRIN):
        assert compare_radial_closed_form(solve_radial(0, 3, kind, 1.3, 16)) < 1e-13
        assert math.isnan(self_convergence_order(0, 3, kind, 1.3, 16))


@pytest.mark.parametrize("K", [-1, 1])
@pytest.mark.parametrize("kind", [Kind.MOLZON, Kind.SERRIN, Kind.EIGEN])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_self_convergence_order(K, kind, n):
    assert self_convergence_order(K, n, kind, 0.8, 64) == pytest.approx(2.0, abs=0.2)


def test_closed_form_error_quarters():
    e1 = compare_radial_closed_form(solve_radial(1, 2, Kind.SERRIN, 0.8, 128))
    e2 = compare_radial_closed_form(solve_radial(1, 2, Kind.SERRIN, 0.8, 256))
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_exact_profile_has_zero_error():
    p = solve_radial(1, 3, Kind.MOLZON, 0.8, 32)
    exact = closed_form_u(1, Kind.MOLZON, 3, 0.8, p.grid)
    from dataclasses import replace

    assert compare_radial_closed_form(replace(p, values=exact)) == 0.0


def test_flat_eigenvalue_against_bessel():
    j01 = bisect(j0, 2.0, 3.0)
    for R in (1.0, 2.0):
        p = solve_radial(0, 2, Kind.EIGEN, R, 1024)
        assert p.lam == pytest.approx((j01 / R) ** 2, rel=0.005)
        assert p.values[0] > 0 and np.all(p.values[:-1] > 0)


@pytest.mark.parametrize("K", [-1, 0, 1])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_radial_rellich(K, n):
    _, _, rel = radial_rellich(solve_radial(K, n, Kind.EIGEN, 0.8, 1024))
    assert rel <= 0.005


def test_apex_slope_vanishes():
    slopes = []
    for m in (128, 256, 512):
        p = solve_radial(1, 3, Kind.SERRIN, 0.8, m)
        slopes.append(abs(p.values[1] - p.values[0]) / p.grid[1])
    assert slopes[2] < 2e-3
    assert slopes[1] / slopes[2] == pytest.approx(2.0, rel=0.05)


def test_rejections_and_flags():
    with pytest.raises(DomainError):
        solve_radial(1, 2, Kind.SERRIN, math.pi, 64)
    with pytest.raises(ValueError):
        solve_radial(1, 2, Kind.SERRIN, 0.8, 4)
    with pytest.raises(ValueError):
        solve_radial(1, 1, Kind.SERRIN, 0.8, 64)
    assert solve_radial(1, 2, Kind.SERRIN, 2.0, 64).closed_form_degenerate
    assert not solve_radial(1, 2, Kind.MOLZON, 2.0, 64).closed_form_degenerate
    with pytest.raises(UnsupportedError):
        compare_radial_closed_form(solve_radial(-1, 2, Kind.SERRIN, 0.8, 64))
    with pytest.raises(UnsupportedError):
        compare_radial_closed_form(solve_radial(0, 2, Kind.EIGEN, 0.8, 64))
    with pytest.raises(ValueError):
        radial_rellich(solve_radial(0, 2, Kind.SERRIN, 0.8, 64))


def test_surface_fem_matches_radial_profile():
    prob = Problem(1, Kind.SERRIN, ConeSpec(0.0, math.pi / 3), GraphSpec("CONSTANT", 0.8))
    run = run_once(prob, 32, 32, pfunctions=False)
    prof = solve_radial(1, 2, Kind.SERRIN, 0.8, 1024)
    m = run.mesh
    for j in (0, m.ntheta // 2, m.ntheta):
        idx = m.ray(j)
        diff = np.max(np.abs(run.u[idx] - sample_profile(prof, m.r[idx])))
        assert diff <= 3 * run.report.closed_form_linf_error + 1e-6

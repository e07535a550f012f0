"""Radial reduction u'' + (n-1) (h'/h) u' = rhs on [0, R], u'(0) = 0, u(R) = 0.

Central differences on a uniform grid.  At r = 0 the coefficient (n-1) h'/h is
singular; by symmetry u'(0) = 0 and the equation reduces to n u''(0) = rhs(0),
discretised with the ghost value u_{-1} = u_1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded

from .assembly import ConvergenceError, Kind
from .spaceform import DomainError, as_spaceform, rellich_weight, warp, warp_prime
from .verify import UnsupportedError, closed_form_u


@dataclass(frozen=True, eq=False)
class RadialProfile:
    grid: np.ndarray
    values: np.ndarray
    lam: float | None
    curvature: int
    kind: Kind
    n: int
    R: float
    closed_form_degenerate: bool = False

    @property
    def m(self) -> int:
        return self.grid.size - 1


def _bands(K: int, n: int, R: float, m: int):
    """Tridiagonal bands (sub, diag, super) of the radial Laplacian on unknowns 0..m-1."""
    sf = as_spaceform(K)
    dr = R / m
    r = np.arange(m) * dr
    sub = np.zeros(m)
    diag = np.full(m, -2.0 / dr**2)
    sup = np.zeros(m)
    diag[0] = -2.0 * n / dr**2
    sup[0] = 2.0 * n / dr**2
    ri = r[1:]
    w = (n - 1) * warp_prime(sf, ri) / warp(sf, ri)
    sub[1:] = 1 / dr**2 - w / (2 * dr)
    sup[1:] = 1 / dr**2 + w / (2 * dr)
    return sub, diag, sup


def _banded(sub, diag, sup):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = sup[:-1]
    ab[1] = diag
    ab[2, :-1] = sub[1:]
    return ab


def solve_radial(sf, n: int, kind, R: float, m: int, tol: float = 1e-13, maxiter: int = 1000) -> RadialProfile:
    """Solve the radial MOLZON, SERRIN or EIGEN problem on m + 1 uniform radii."""
    sf = as_spaceform(sf)
    kind = kind if isinstance(kind, Kind) else Kind(kind)
    K = sf.curvature
    if int(n) < 2:
        raise ValueError("n must be >= 2")
    if int(m) < 8:
        raise ValueError("m must be >= 8")
    if R <= 0:
        raise ValueError("R must be positive")
    if K == 1 and R >= np.pi:
        raise DomainError("R must stay below pi on the sphere")
    n, m = int(n), int(m)
    grid = np.linspace(0.0, R, m + 1)
    sub, diag, sup = _bands(K, n, R, m)
    # cos R <= 0: the SERRIN cap normalisation (cos r - cos R) / cos R breaks down
    degenerate = kind is Kind.SERRIN and K == 1 and R >= np.pi / 2
    values = np.zeros(m + 1)
    lam = None
    if kind is Kind.MOLZON:
        values[:m] = solve_banded((1, 1), _banded(sub, diag, sup), -n * warp_prime(sf, grid[:m]))
    elif kind is Kind.SERRIN:
        values[:m] = solve_banded((1, 1), _banded(sub, diag + n * K, sup), np.full(m, -float(n)))
    else:
        ab = _banded(-sub, -diag, -sup)
        x = np.ones(m)
        lam = np.inf
        for _ in range(maxiter):
            y = solve_banded((1, 1), ab, x)
            new = float(x @ y / (y @ y))
            x = y / np.linalg.norm(y)
            if abs(new - lam) <= tol * abs(new):
                lam = new
                break
            lam = new
        else:
            raise ConvergenceError(f"radial inverse iteration did not converge in {maxiter} steps")
        values[:m] = x * np.sign(x[0])
    return RadialProfile(grid, values, lam, K, kind, n, float(R), degenerate)


def compare_radial_closed_form(profile: RadialProfile, sf=None, kind=None, n=None) -> float:
    """Max-norm distance between a MOLZON/SERRIN profile and the closed form."""
    K = as_spaceform(sf).curvature if sf is not None else profile.curvature
    kind = profile.kind if kind is None else (kind if isinstance(kind, Kind) else Kind(kind))
    n = profile.n if n is None else n
    if kind is Kind.EIGEN:
        raise UnsupportedError("no closed form for the radial eigenproblem")
    if K == -1:
        raise UnsupportedError("no closed form for K = -1; use self_convergence_order")
    exact = closed_form_u(K, kind, n, profile.R, profile.grid)
    return float(np.max(np.abs(profile.values - exact)))


def self_convergence_order(sf, n: int, kind, R: float, m: int) -> float:
    """Observed order from profiles at m, 2m, 4m (Richardson-style).

    Nodal differences are compared on the coarse grid; for EIGEN the
    eigenvalues are compared instead.
    """
    p = [solve_radial(sf, n, kind, R, m * 2**k) for k in range(3)]
    if p[0].kind is Kind.EIGEN:
        d1, d2 = abs(p[0].lam - p[1].lam), abs(p[1].lam - p[2].lam)
    else:
        d1 = np.max(np.abs(p[0].values - p[1].values[::2]))
        d2 = np.max(np.abs(p[1].values[::2] - p[2].values[::4]))
    if min(d1, d2) < 1e-12:  # already exact to round-off (flat MOLZON/SERRIN)
        return float("nan")
    return float(np.log2(d1 / d2))


def radial_rellich(profile: RadialProfile) -> tuple[float, float, float]:
    """Rellich identity for a radial eigenprofile: (lambda, boundary expression, relative residual).

    On a cone section the angular measure cancels, leaving boundary and volume
    integrals weighted by h^{n-1}.
    """
    if profile.kind is not Kind.EIGEN:
        raise ValueError("profile is not an eigenfunction")
    K, n, R = profile.curvature, profile.n, profile.R
    sf = as_spaceform(K)
    r, u = profile.grid, profile.values
    dr = r[1] - r[0]
    du_R = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dr)
    _, fp_R = rellich_weight(sf, R)
    boundary = fp_R * warp(sf, R) ** (n - 1) * du_R**2
    jac = warp(sf, r) ** (n - 1)
    if K == 0:
        rhs = -boundary / (2 * simpson(u * u * jac, x=r))
    else:
        f, _ = rellich_weight(sf, r)
        rhs = -n * (n - 2) * K / 4 - boundary / (2 * K * simpson(f * u * u * jac, x=r))
    return profile.lam, float(rhs), abs(profile.lam - rhs) / abs(profile.lam)


def sample_profile(profile: RadialProfile, r) -> np.ndarray:
    """Piecewise-linear evaluation of a profile at radii r."""
    return np.interp(r, profile.grid, profile.values)

"""Curvature-indexed warp functions and geodesic distance for the 2-D space forms.

Every function accepts scalars or numpy arrays for the radius argument.
Radii are geodesic distances from the pole; for the sphere they must stay
strictly below pi so the antipode is never reached.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ANTIPODE_MARGIN = 1e-9


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a space-form function."""


@dataclass(frozen=True)
class SpaceForm:
    """Model space of constant curvature ``curvature`` in {-1, 0, +1}."""

    curvature: int

    def __post_init__(self):
        if isinstance(self.curvature, bool) or self.curvature not in (-1, 0, 1):
            raise DomainError(f"curvature must be one of -1, 0, +1, got {self.curvature!r}")
        object.__setattr__(self, "curvature", int(self.curvature))

    @property
    def K(self) -> int:
        return self.curvature

    @property
    def name(self) -> str:
        return {0: "R2", 1: "S2", -1: "H2"}[self.curvature]

    @property
    def r_max(self) -> float:
        return np.pi - ANTIPODE_MARGIN if self.curvature == 1 else np.inf


EUCLIDEAN = SpaceForm(0)
SPHERE = SpaceForm(1)
HYPERBOLIC = SpaceForm(-1)


def as_spaceform(sf) -> SpaceForm:
    return sf if isinstance(sf, SpaceForm) else SpaceForm(sf)


@dataclass(frozen=True)
class PolarPoint:
    """Geodesic polar coordinates (r, theta) about a fixed pole; theta is kept in [0, 2*pi)."""

    r: float
    theta: float

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise DomainError(f"polar radius must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "theta", float(normalize_angle(self.theta)))


def normalize_angle(theta):
    """Map angles to [0, 2*pi)."""
    t = np.mod(theta, 2 * np.pi)
    # np.mod can return exactly 2*pi for tiny negative inputs
    t = np.where(t >= 2 * np.pi, 0.0, t)
    return float(t) if np.ndim(t) == 0 else t


def wrapped_difference(a, b):
    """a - b wrapped into (-pi, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - b + np.pi, 2 * np.pi) - np.pi
    d = np.where(d == -np.pi, np.pi, d)
    return d if np.ndim(d) else float(d)


def check_radius(sf: SpaceForm, r):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and non-negative")
    if sf.curvature == 1 and np.any(r >= sf.r_max):
        raise DomainError(f"radius must stay below pi - {ANTIPODE_MARGIN:g} on the sphere")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def warp(sf, r):
    """Warp factor h(r): r, sin r or sinh r."""
    sf = as_spaceform(sf)
    r = check_radius(sf, r)
    if sf.curvature == 0:
        return _out(r.copy())
    return _out(np.sin(r) if sf.curvature == 1 else np.sinh(r))


def warp_prime(sf, r):
    """Derivative h'(r): 1, cos r or cosh r."""
    sf = as_spaceform(sf)
    r = check_radius(sf, r)
    if sf.curvature == 0:
        return _out(np.ones_like(r))
    return _out(np.cos(r) if sf.curvature == 1 else np.cosh(r))


def warp_ratio(sf, r):
    """h(r)/r, continuous at r = 0 (value 1)."""
    sf = as_spaceform(sf)
    r = np.asarray(r, dtype=float)
    if sf.curvature == 0:
        return _out(np.ones_like(r))
    if sf.curvature == 1:
        return _out(np.sinc(r / np.pi))
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    return _out(np.where(small, 1 + r * r / 6, np.sinh(safe) / safe))


def rellich_weight(sf, r):
    """Return (f(r), f'(r)) with f = -r^2/2, cos r, cosh r for K = 0, +1, -1."""
    sf = as_spaceform(sf)
    r = check_radius(sf, r)
    if sf.curvature == 0:
        return _out(-0.5 * r * r), _out(-r)
    if sf.curvature == 1:
        return _out(np.cos(r)), _out(-np.sin(r))
    return _out(np.cosh(r)), _out(np.sinh(r))


def geodesic_distance(sf, a: PolarPoint, b: PolarPoint) -> float:
    """Distance between two points given in polar coordinates about a common pole.

    Uses the half-angle forms of the three laws of cosines, which stay accurate
    for nearby points.
    """
    sf = as_spaceform(sf)
    check_radius(sf, [a.r, b.r])
    return float(_distance(sf.curvature, a.r, a.theta, b.r, b.theta))


def _distance(K, r1, t1, r2, t2):
    s2 = np.sin(0.5 * wrapped_difference(t1, t2)) ** 2
    if K == 0:
        return np.sqrt((r1 - r2) ** 2 + 4 * r1 * r2 * s2)
    if K == 1:
        q = np.sin(0.5 * (r1 - r2)) ** 2 + np.sin(r1) * np.sin(r2) * s2
        q = np.clip(q, 0.0, 1.0)
        return 2 * np.arctan2(np.sqrt(q), np.sqrt(1 - q))
    q = np.sinh(0.5 * (r1 - r2)) ** 2 + np.sinh(r1) * np.sinh(r2) * s2
    return 2 * np.arcsinh(np.sqrt(np.maximum(q, 0.0)))


def distance_arrays(sf, r1, t1, r2, t2):
    """Vectorised geodesic distance on raw polar arrays (no validation)."""
    return _distance(as_spaceform(sf).curvature, np.asarray(r1, float), np.asarray(t1, float),
                     np.asarray(r2, float), np.asarray(t2, float))

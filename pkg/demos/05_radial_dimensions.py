"""Radial reduction for dimensions 2 to 5.

u'' + (n-1) (h'/h) u' = rhs with u'(0) = 0, u(R) = 0.  On the sphere both
MOLZON and SERRIN have closed forms in every dimension; in the plane the
profile (R^2 - r^2)/2 is a quadratic that central differences reproduce
exactly.  The hyperbolic case has no closed form and is checked by
self-convergence on m, 2m, 4m points.
"""
from scipy.special import jn_zeros

from conebvp import Kind
from conebvp.radial import compare_radial_closed_form, radial_rellich, self_convergence_order, solve_radial

R = 0.8
print("max error against the closed form at m = 1024")
for K in (1, 0):
    for kind in (Kind.MOLZON, Kind.SERRIN):
        errs = [compare_radial_closed_form(solve_radial(K, n, kind, R, 1024)) for n in (2, 3, 4, 5)]
        print(f"  K={K:+d} {kind.value:<7} " + "  ".join(f"{e:.1e}" for e in errs))

print("\nself-convergence order (m = 64, 128, 256)")
for K in (1, -1):
    for kind in Kind:
        orders = [self_convergence_order(K, n, kind, R, 64) for n in (2, 3, 4, 5)]
        print(f"  K={K:+d} {kind.value:<7} " + "  ".join(f"{o:.3f}" for o in orders))

p = solve_radial(0, 2, Kind.EIGEN, 1.0, 1024)
lam, rhs, rel = radial_rellich(p)
print(f"\nplane, n=2, R=1: lambda {lam:.6f}, j01^2 {jn_zeros(0, 1)[0] ** 2:.6f}, boundary form {rhs:.6f}")

"""First mixed eigenvalue and its boundary-integral expression.

For the quarter disk in the plane the first eigenfunction is J0(sqrt(lam) r),
so lam = j01^2.  On curved sectors there is no closed form; the identity is
checked against itself: the eigenvalue from inverse iteration versus the
value rebuilt from the squared normal derivative on the arc.
"""
import math

from scipy.special import jn_zeros

from conebvp import ConeSpec, GraphSpec, Kind, Problem, convergence_study

grid = [(16, 16), (32, 32), (64, 64), (128, 128)]
cases = [
    ("plane, quarter disk R=1", Problem(0, Kind.EIGEN, ConeSpec(0.0, math.pi / 2), GraphSpec("CONSTANT", 1.0))),
    ("sphere, pi/3 wedge R=0.7", Problem(1, Kind.EIGEN, ConeSpec(0.0, math.pi / 3), GraphSpec("CONSTANT", 0.7))),
    ("hyperbolic, pi/3 wedge R=0.7",
     Problem(-1, Kind.EIGEN, ConeSpec(0.0, math.pi / 3), GraphSpec("CONSTANT", 0.7))),
]
print(f"j01^2 = {jn_zeros(0, 1)[0] ** 2:.6f}")
for name, problem in cases:
    runs, _ = convergence_study(problem, grid)
    print(f"\n{name}")
    for run in runs:
        rep = run.report
        print(f"  {rep.nr:>3}x{rep.ntheta:<3} lambda {rep.rellich_lhs:10.6f}  boundary form {rep.rellich_rhs:10.6f}"
              f"  relres {rep.rellich_relative_residual:.2e}")

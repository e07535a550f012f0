"""The two auxiliary functions of the SERRIN cap.

    P  = |grad u|^2 + 2u + K u^2      constant tan^2 R on the cap
    P~ = <grad u, grad h'> + u h' + h'  constant sec R, and harmonic

Gradients come from a quadratic least-squares fit at each vertex.  The
weak Laplacian of P (stiffness times nodal values) should be non-negative up
to a tolerance 10 h^2 max|P|.
"""
import math

import numpy as np

from conebvp import ConeSpec, GraphSpec, Kind, Problem, convergence_study

R = 0.8
problem = Problem(1, Kind.SERRIN, ConeSpec(0.0, math.pi / 3), GraphSpec("CONSTANT", R))
runs, orders = convergence_study(problem, [(16, 16), (32, 32), (64, 64)])

print(f"tan^2 R = {math.tan(R) ** 2:.6f}, sec R = {1 / math.cos(R):.6f}")
print(f"{'mesh':>7} {'mean P':>9} {'spread P':>9} {'max|P~-secR|':>13} {'min mass':>10} {'tol':>9} "
      f"{'harmonic':>9} {'passed':>6}")
for run in runs:
    p = run.preport
    print(f"{run.report.nr:>3}x{run.report.ntheta:<3} {run.P.mean():9.6f} {p.constancy_spread:9.2e} "
          f"{np.max(np.abs(run.P_tilde - 1 / math.cos(R))):13.2e} {p.laplacian_negativity:10.2e} "
          f"{p.tolerance:9.2e} {p.harmonic_residual:9.2e} {str(p.passed):>6}")
print("harmonic residual orders:", [round(o, 2) for o in orders["harmonic_residual"]])

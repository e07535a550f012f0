"""Domain outside a convex cone.

The cone has opening pi/3; the domain is the rest of the cap, an angular
width of 5 pi / 3.  The closed form is the same as inside the cone, and
the trace again approaches -tan R.  With five times the angular width, the
mesh uses twice as many rays as layers.

The vertex is now a reflex corner.  The nodal error stays second order, but
the recovered gradient is noisier next to the vertex, which shows in the
weak Laplacian of P.  The last columns report it for reference.
"""
import math

from conebvp import ConeSpec, GraphSpec, Kind, Problem, convergence_study
from conebvp.domainmesh import Side

R = 0.8
problem = Problem(1, Kind.SERRIN, ConeSpec(0.0, math.pi / 3, Side.EXTERIOR), GraphSpec("CONSTANT", R))
runs, orders = convergence_study(problem, [(16, 32), (32, 64), (64, 128)])
print(f"-tan R = {-math.tan(R):.6f}")
for run in runs:
    rep, p = run.report, run.preport
    print(f"{rep.nr:>3}x{rep.ntheta:<4} error {rep.closed_form_linf_error:.3e}  mean {rep.serrin_mean:.6f}  "
          f"relstd {rep.serrin_relstd:.2e}  min mass {p.laplacian_negativity:.2e}  tol {p.tolerance:.2e}")
print("orders:", [round(o, 2) for o in orders["closed_form_linf_error"]])

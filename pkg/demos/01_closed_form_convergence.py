"""Concentric caps on the sphere: FEM solutions against their closed forms.

A wedge of opening pi/3 is cut off at geodesic radius 0.8.  u = 0 on the cap
arc; the straight walls carry the natural (zero flux) condition.  The table
shows the nodal max error halving twice per refinement (second order) and the
measured Neumann constant approaching -tan R (SERRIN) or -sin R (MOLZON).
"""
import math

from conebvp import ConeSpec, GraphSpec, Kind, Problem, convergence_study

R = 0.8
wedge = ConeSpec(0.0, math.pi / 3)

for kind, c in ((Kind.SERRIN, -math.tan(R)), (Kind.MOLZON, -math.sin(R))):
    problem = Problem(1, kind, wedge, GraphSpec("CONSTANT", R))
    runs, orders = convergence_study(problem, [(8, 8), (16, 16), (32, 32), (64, 64)])
    print(f"\n{kind.value}: expected c = {c:.6f}")
    print(f"{'mesh':>8} {'h':>9} {'max error':>11} {'order':>6} {'mean du/dnu':>12} {'relstd':>10}")
    for k, run in enumerate(runs):
        rep = run.report
        order = "" if k == 0 else f"{orders['closed_form_linf_error'][k - 1]:.2f}"
        print(f"{rep.nr:>3}x{rep.ntheta:<4} {rep.h:9.4f} {rep.closed_form_linf_error:11.3e} {order:>6} "
              f"{rep.serrin_mean:12.6f} {rep.serrin_relstd:10.2e}")

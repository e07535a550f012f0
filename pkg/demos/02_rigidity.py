"""Which domains admit a constant normal derivative?

Three SERRIN runs on the sphere:
  * the cap centred at the cone vertex,
  * a cap of the same radius centred on a wall of a half-plane cone,
  * the vertex-centred cap with a 10% cosine ripple in its boundary.
The first two are balls, so the trace spread (relstd) shrinks with the mesh.
The ripple is not, and its spread settles at a positive level.
"""
import math

from conebvp import ConeSpec, GraphSpec, Kind, Problem, convergence_study

R = 0.8
cases = {
    "concentric cap": (ConeSpec(0.0, math.pi / 3), GraphSpec("CONSTANT", R), [(16, 16), (32, 32), (64, 64)]),
    "wall-centred cap": (ConeSpec(0.0, math.pi), GraphSpec("OFFCENTER", R, d=0.3, theta0=0.0),
                         [(16, 48), (32, 96), (64, 192)]),
    "rippled boundary": (ConeSpec(0.0, math.pi / 3), GraphSpec("PERTURBED", R, amplitude=0.1, mode=1),
                         [(16, 16), (32, 32), (64, 64)]),
}

print(f"{'domain':>18} | relstd of du/dnu on the arc, coarse to fine")
for name, (cone, graph, grid) in cases.items():
    runs, _ = convergence_study(Problem(1, Kind.SERRIN, cone, graph), grid, max_workers=3)
    print(f"{name:>18} | " + "  ".join(f"{r.report.serrin_relstd:.2e}" for r in runs))

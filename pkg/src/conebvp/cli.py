"""Command-line driver: ``conebvp solve|eigen|verify|sweep --config cfg.json [--output dir]``.

Exit status: 0 all criteria pass, 1 a criterion fails, 2 bad configuration,
3 a pipeline stage fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.special import jn_zeros

from . import __version__
from .assembly import ConvergenceError, Kind, SolverError
from .domainmesh import ConeSpec, MeshError, Side, export_mesh
from .radial import compare_radial_closed_form, radial_rellich, self_convergence_order, solve_radial
from .spaceform import DomainError
from .verify import (
    DEFAULT_GRADING,
    GraphSpec,
    Problem,
    StageError,
    UnsupportedError,
    check_resolutions,
    convergence_study,
    observed_orders,
    run_once,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
THREADS_ENV = "CONEBVP_THREADS"
COMMANDS = ("solve", "eigen", "verify", "sweep")

TOP_KEYS = {"curvature", "kind", "n", "cone", "graph", "resolutions", "radial", "output_dir", "grading"}
REQUIRED = ("curvature", "kind", "cone", "graph", "resolutions")
CONE_KEYS = {"theta_lo", "theta_hi", "side"}
GRAPH_KEYS = {"type", "R", "d", "theta0", "amplitude", "mode"}
RADIAL_KEYS = {"enabled", "n_list", "m_list"}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class RunConfig:
    curvature: int
    kind: str
    cone: dict
    graph: dict
    resolutions: list
    n: int = 2
    radial: dict = field(default_factory=lambda: {"enabled": False, "n_list": [], "m_list": []})
    output_dir: str = "conebvp_out"
    grading: float = DEFAULT_GRADING

    def problem(self) -> Problem:
        cone = ConeSpec(self.cone["theta_lo"], self.cone["theta_hi"], Side(self.cone.get("side", "INTERIOR")))
        g = self.graph
        graph = GraphSpec(g["type"], g["R"], g.get("d", 0.0), g.get("theta0", 0.0),
                          g.get("amplitude", 0.1), g.get("mode", 1))
        return Problem(self.curvature, Kind(self.kind), cone, graph, self.n, self.grading)

    def echo(self) -> dict:
        return {"curvature": self.curvature, "kind": self.kind, "n": self.n, "cone": self.cone,
                "graph": self.graph, "resolutions": self.resolutions, "radial": self.radial,
                "output_dir": self.output_dir, "grading": self.grading}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _unknown(d: dict, allowed: set, where: str, problems: list):
    for k in sorted(set(d) - allowed):
        problems.append(f"{where}: unknown key {k!r}")


def parse_config(data) -> RunConfig:
    """Validate a decoded JSON object; every violation is collected before raising."""
    p: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a JSON object"])
    _unknown(data, TOP_KEYS, "config", p)
    for k in REQUIRED:
        if k not in data:
            p.append(f"config: missing required key {k!r}")

    K = data.get("curvature")
    if "curvature" in data and (not _is_int(K) or K not in (-1, 0, 1)):
        p.append(f"curvature: must be -1, 0 or 1, got {K!r}")
    kind = data.get("kind")
    if "kind" in data and kind not in [k.value for k in Kind]:
        p.append(f"kind: must be MOLZON, SERRIN or EIGEN, got {kind!r}")
    n = data.get("n", 2)
    if not _is_int(n) or n != 2:
        p.append(f"n: surface runs require n = 2 (general n goes through radial.n_list), got {n!r}")
    grading = data.get("grading", DEFAULT_GRADING)
    if not _is_num(grading) or not 1.0 <= grading <= 2.0:
        p.append(f"grading: must be a number in [1, 2], got {grading!r}")

    cone = data.get("cone", {})
    if not isinstance(cone, dict):
        p.append("cone: must be an object")
        cone = {}
    else:
        _unknown(cone, CONE_KEYS, "cone", p)
        lo, hi = cone.get("theta_lo"), cone.get("theta_hi")
        if not _is_num(lo):
            p.append(f"cone.theta_lo: must be a number, got {lo!r}")
        if not _is_num(hi):
            p.append(f"cone.theta_hi: must be a number, got {hi!r}")
        if _is_num(lo) and _is_num(hi):
            if hi <= lo:
                p.append(f"cone: theta_hi ({hi}) must exceed theta_lo ({lo})")
            elif hi - lo >= 2 * math.pi:
                p.append("cone: opening theta_hi - theta_lo must be below 2*pi")
        side = cone.get("side", "INTERIOR")
        if side not in ("INTERIOR", "EXTERIOR"):
            p.append(f"cone.side: must be INTERIOR or EXTERIOR, got {side!r}")

    graph = data.get("graph", {})
    if not isinstance(graph, dict):
        p.append("graph: must be an object")
        graph = {}
    else:
        _unknown(graph, GRAPH_KEYS, "graph", p)
        gtype = graph.get("type")
        if gtype not in ("CONSTANT", "OFFCENTER", "PERTURBED"):
            p.append(f"graph.type: must be CONSTANT, OFFCENTER or PERTURBED, got {gtype!r}")
        R = graph.get("R")
        if not _is_num(R) or R <= 0:
            p.append(f"graph.R: must be a positive number, got {R!r}")
        elif K == 1 and R >= math.pi:
            p.append("graph.R: must be below pi on the sphere")
        if gtype == "OFFCENTER":
            for k in ("d", "theta0"):
                if not _is_num(graph.get(k)):
                    p.append(f"graph.{k}: required number for OFFCENTER, got {graph.get(k)!r}")
            if _is_num(graph.get("d")) and _is_num(R) and not 0 <= graph["d"] < R:
                p.append("graph.d: need 0 <= d < R so the cap contains the vertex")
        if gtype == "PERTURBED":
            amp = graph.get("amplitude", 0.1)
            if not _is_num(amp) or not 0 <= amp < 1:
                p.append(f"graph.amplitude: must be in [0, 1), got {amp!r}")
            mode = graph.get("mode", 1)
            if not _is_int(mode) or mode < 1:
                p.append(f"graph.mode: must be a positive integer, got {mode!r}")

    res = data.get("resolutions", [])
    ok_res = isinstance(res, list) and len(res) > 0
    if ok_res:
        for i, r in enumerate(res):
            if not (isinstance(r, list) and len(r) == 2 and all(_is_int(x) and x > 0 for x in r)):
                p.append(f"resolutions[{i}]: must be [nr, ntheta] with positive integers, got {r!r}")
    elif "resolutions" in data:
        p.append("resolutions: must be a non-empty list of [nr, ntheta] pairs")

    radial = data.get("radial", {"enabled": False, "n_list": [], "m_list": []})
    if not isinstance(radial, dict):
        p.append("radial: must be an object")
        radial = {}
    else:
        _unknown(radial, RADIAL_KEYS, "radial", p)
        if not isinstance(radial.get("enabled", False), bool):
            p.append("radial.enabled: must be true or false")
        for key, lo in (("n_list", 2), ("m_list", 8)):
            v = radial.get(key, [])
            if not isinstance(v, list) or not all(_is_int(x) and x >= lo for x in v):
                p.append(f"radial.{key}: must be a list of integers >= {lo}, got {v!r}")
        if radial.get("enabled") and not (radial.get("n_list") and radial.get("m_list")):
            p.append("radial: enabled requires non-empty n_list and m_list")
        radial = {"enabled": bool(radial.get("enabled", False)), "n_list": radial.get("n_list", []),
                  "m_list": radial.get("m_list", [])}

    out = data.get("output_dir", "conebvp_out")
    if not isinstance(out, str) or not out:
        p.append("output_dir: must be a non-empty string")

    if p:
        raise ConfigError(p)
    return RunConfig(K, kind, dict(cone, side=cone.get("side", "INTERIOR")), dict(graph), [list(r) for r in res],
                     n, radial, out, float(grading))


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    return parse_config(data)


def command_problems(cmd: str, cfg: RunConfig) -> list:
    p = []
    if cmd == "eigen" and cfg.kind != "EIGEN":
        p.append("eigen: config kind must be EIGEN")
    if cmd == "solve" and cfg.kind == "EIGEN":
        p.append("solve: EIGEN configs go through the eigen subcommand")
    if cmd == "sweep":
        try:
            check_resolutions(cfg.resolutions)
        except ValueError as exc:
            p.append(f"sweep: {exc}")
    return p


# --------------------------------------------------------------------------- criteria


@dataclass
class Criterion:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _decreasing(vals, floor=0.0) -> bool:
    """Non-increasing sequence, ignoring moves inside an absolute noise floor."""
    return all(b <= a or b <= floor for a, b in zip(vals[:-1], vals[1:]))


def evaluate(problem: Problem, runs, radial: dict | None) -> list[Criterion]:
    """PASS/FAIL lines for every criterion that applies to this configuration."""
    out: list[Criterion] = []
    reps = [r.report for r in runs]
    K, kind, g, cone = problem.spaceform.curvature, problem.kind, problem.graph, problem.cone
    many = len(runs) >= 2

    errs = [r.closed_form_linf_error for r in reps]
    if all(e is not None for e in errs):
        orders = [o for o in observed_orders(errs) if o is not None]
        ok = errs[-1] <= 5e-4 and (not many or (orders and min(orders) >= 1.8))
        out.append(Criterion("closed_form", bool(ok),
                             f"finest Linf error {errs[-1]:.3e} (<= 5e-4), orders "
                             f"{[round(o, 3) for o in orders]} (>= 1.8)"))

    if kind is not Kind.EIGEN:
        c = problem.expected_c()
        rel = [r.serrin_relstd for r in reps]
        if c is not None:
            dev = abs(reps[-1].serrin_mean - c) / abs(c)
            ok = dev <= 0.02 and rel[0] <= 0.05 and _decreasing(rel, floor=1e-6)
            out.append(Criterion("serrin_constancy", ok,
                                 f"mean {reps[-1].serrin_mean:.6f} vs c {c:.6f} ({100 * dev:.2f}% <= 2%), "
                                 f"relstd {[float(f'{x:.3e}') for x in rel]} (<= 5% coarse, decreasing)"))
        elif g.type == "PERTURBED" and many:
            ok = rel[-1] >= 0.5 * rel[0]
            out.append(Criterion("rigidity_negative_control", ok,
                                 f"relstd coarse {rel[0]:.4f}, finest {rel[-1]:.4f} (>= 50% retained)"))
        flux = [r.flux_residual for r in reps]
        ok = flux[0] <= 0.05 and _decreasing(flux, floor=1e-10)
        out.append(Criterion("flux_compatibility", ok,
                             f"residuals {[float(f'{x:.3e}') for x in flux]} (<= 5% coarse, decreasing)"))
        if kind is Kind.MOLZON:
            mn = min(r.min_u for r in reps)
            out.append(Criterion("positivity", mn >= -1e-6, f"min u {mn:.3e} (>= -1e-6)"))

    pre = [r.preport for r in runs]
    if (kind is Kind.SERRIN and all(x is not None for x in pre) and g.type == "CONSTANT"
            and cone.side is Side.INTERIOR and cone.is_convex and K == 1 and g.R < math.pi / 2):
        c2, sec = math.tan(g.R) ** 2, 1 / math.cos(g.R)
        P, Pt = runs[-1].P, runs[-1].P_tilde
        pdev = float(np.max(np.abs(P - c2))) / c2
        spread = pre[-1].constancy_spread / c2
        tdev = float(np.max(np.abs(Pt - sec))) / sec
        harm = [x.harmonic_residual for x in pre]
        horders = [o for o in observed_orders(harm) if o is not None]
        mp = all(x.passed for x in pre)
        neg = all(x.laplacian_negativity >= -x.tolerance for x in pre)
        hok = _decreasing(harm) and (not many or (horders and min(horders) >= 0.8))
        out.append(Criterion("p_function", pdev <= 0.02 and spread <= 0.05,
                             f"max |P - tan^2 R| / tan^2 R = {pdev:.3e}, spread {spread:.3e}"))
        out.append(Criterion("p_tilde", tdev <= 0.02, f"max |P~ - sec R| / sec R = {tdev:.3e}"))
        out.append(Criterion("max_principle", mp and neg,
                             f"interior max <= GAMMA0 max + tol and negativity >= -tol on all runs: {mp and neg}"))
        out.append(Criterion("p_tilde_harmonic", bool(hok),
                             f"residuals {[float(f'{x:.3e}') for x in harm]}, orders "
                             f"{[round(o, 3) for o in horders]} (>= 0.8)"))

    if kind is Kind.EIGEN:
        rr = [r.rellich_relative_residual for r in reps]
        if any(r.rellich_indeterminate for r in reps):
            out.append(Criterion("rellich", False, "volume integral below guard (indeterminate)"))
        else:
            lim = 0.01 if K == 0 else 0.02
            ok = rr[-1] <= lim and _decreasing(rr, floor=1e-8)
            out.append(Criterion("rellich", ok, f"relres {[float(f'{x:.3e}') for x in rr]} "
                                                f"(<= {lim:.0%} finest, decreasing)"))
        if K == 0 and g.type == "CONSTANT":
            lam_ref = (jn_zeros(0, 1)[0] / g.R) ** 2
            lam = runs[-1].eigenvalue
            dev = abs(lam - lam_ref) / lam_ref
            out.append(Criterion("eigenvalue_bessel", dev <= 0.01,
                                 f"lambda {lam:.6f} vs j01^2/R^2 {lam_ref:.6f} ({100 * dev:.3f}% <= 1%)"))

    if radial:
        bad = [e for e in radial["entries"] if e.get("closed_form_error") is not None
               and e["m"] >= 1024 and e["closed_form_error"] > 1e-6]
        ords = [o["order"] for o in radial["orders"] if o["order"] is not None]
        obad = [o for o in ords if abs(o - 2.0) > 0.2]
        eig = [e for e in radial["entries"] if e.get("bessel_relative_error") is not None and e["m"] >= 1024]
        ebad = [e for e in eig if e["bessel_relative_error"] > 0.005]
        out.append(Criterion("radial", not bad and not obad and not ebad,
                             f"{len(bad)} closed-form errors > 1e-6 at m>=1024, orders {[round(o, 3) for o in ords]} "
                             f"(2.0 +- 0.2), {len(ebad)} Bessel deviations > 0.5%"))
    return out


# --------------------------------------------------------------------------- radial section


def radial_section(cfg: RunConfig) -> dict | None:
    if not cfg.radial.get("enabled"):
        return None
    K, kind, R = cfg.curvature, Kind(cfg.kind), float(cfg.graph["R"])
    entries, orders = [], []
    for n in cfg.radial["n_list"]:
        for m in cfg.radial["m_list"]:
            prof = solve_radial(K, n, kind, R, m)
            e = {"n": n, "m": m, "u0": float(prof.values[0]), "lambda": prof.lam,
                 "closed_form_degenerate": prof.closed_form_degenerate, "closed_form_error": None,
                 "bessel_relative_error": None, "rellich_relative_residual": None}
            if kind is not Kind.EIGEN and K != -1:
                e["closed_form_error"] = compare_radial_closed_form(prof)
            if kind is Kind.EIGEN:
                e["rellich_relative_residual"] = radial_rellich(prof)[2]
                if K == 0 and n == 2:
                    ref = (jn_zeros(0, 1)[0] / R) ** 2
                    e["bessel_relative_error"] = abs(prof.lam - ref) / ref
            entries.append(e)
        m0 = min(cfg.radial["m_list"])
        order = self_convergence_order(K, n, kind, R, m0)
        orders.append({"n": n, "m": m0, "order": None if math.isnan(order) else order,
                       "exact_to_roundoff": math.isnan(order)})
    return {"entries": entries, "orders": orders}


# --------------------------------------------------------------------------- output


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError([f"{THREADS_ENV} must be a positive integer, got {raw!r}"]) from None


def write_outputs(cmd, cfg, runs, radial, criteria, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    for r in runs:
        tag = f"{r.report.nr}x{r.report.ntheta}"
        with open(outdir / f"trace_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "u_nu"])
            for t, v in zip(r.trace.mid_theta.tolist(), r.trace.values.tolist()):
                w.writerow([repr(t), repr(v)])
        export_mesh(r.mesh, outdir / f"mesh_{tag}.txt")
        if cmd in ("solve", "eigen"):
            with open(outdir / f"field_{tag}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["r", "theta", "u"])
                for row in zip(r.mesh.r.tolist(), r.mesh.theta.tolist(), r.u.tolist()):
                    w.writerow([repr(v) for v in row])
    orders = runs[0].report.convergence_orders if runs else {}
    report = {
        "config_echo": cfg.echo(),
        "mesh_stats": [dict(r.mesh_stats, nr=r.report.nr, ntheta=r.report.ntheta) for r in runs],
        "verify": {
            "command": cmd,
            "runs": [{k: v for k, v in r.report.to_dict().items() if k != "convergence_orders"} for r in runs],
            "convergence_orders": orders,
            "criteria": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in criteria],
        },
        "pfunctions": [dict(r.preport.to_dict(), nr=r.report.nr, ntheta=r.report.ntheta)
                       for r in runs if r.preport is not None],
        "radial": radial,
        "metadata": {
            "tool_version": __version__,
            "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "threads": _threads(),
        },
    }
    report = _clean(report)
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return report


def execute(cmd: str, cfg: RunConfig, outdir: Path, stream=None) -> int:
    stream = stream or sys.stdout
    problem = cfg.problem()
    res = [tuple(r) for r in cfg.resolutions]
    pf = cmd in ("verify", "sweep")
    try:
        check_resolutions(res)
        refining = True
    except ValueError:
        refining = False
    if refining:
        runs, _ = convergence_study(problem, res, max_workers=_threads(), pfunctions=pf)
    else:
        runs = [run_once(problem, nr, nt, pfunctions=pf) for nr, nt in res]
    radial = radial_section(cfg)
    criteria = evaluate(problem, runs, radial)
    write_outputs(cmd, cfg, runs, radial, criteria, outdir)
    for c in criteria:
        print(c.line(), file=stream)
    return EXIT_OK if all(c.passed for c in criteria) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conebvp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"solve": "solve MOLZON/SERRIN and write fields and traces",
             "eigen": "first mixed eigenpair and the Rellich identity",
             "verify": "full verification report with P-function checks",
             "sweep": "convergence study over >= 3 refining resolutions"}
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--output", help="output directory (overrides output_dir)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        extra = command_problems(args.command, cfg)
        if extra:
            raise ConfigError(extra)
        _threads()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.output or cfg.output_dir)
    try:
        return execute(args.command, cfg, outdir)
    except (DomainError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageError, SolverError, ConvergenceError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

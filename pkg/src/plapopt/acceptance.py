"""Acceptance battery: one callable per criterion, each pinning its own
configuration and tolerance, shared by the test suite and the ``suite``
CLI subcommand.

Reference values marked "frozen" below were computed by independent
oracles (1D radial shooting for the disk problems, exhaustive permutation
enumeration for the tiny maximizations); the test suite re-derives them
from the live oracles as a cross-check.
"""

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import build_disk_mesh
from .optimizer import OptimizeConfig, maximize_over_rearrangements
from .perturbation import (
    FlowMap,
    derivative_report,
    tangent_field,
    transported_solution_check,
)
from .rearrangement import (
    LoadField,
    RearrangementClass,
    best_response,
    binary_load,
    comonotonicity_defect,
    linear_functional_L,
    random_step_load,
    step_load,
)
from .solver import SolveConfig, solve

__all__ = ["CriterionResult", "ALL_CRITERIA", "run_criteria"]

# Boundary value of the p = 2 disk problem with unit flux, I0(1)/I1(1),
# frozen from the shooting oracle (matches the Bessel quotient to 1e-13).
TRACE_ORACLE_P2 = 2.2401937238700897
# J = 2 pi I0(1)/I1(1) for the same problem.
J_ORACLE_P2 = 14.075552291056471
# Boundary value of the p = 3 disk problem with unit flux, frozen from the
# shooting oracle (solve_ivp Radau rtol 1e-11 + bisection on the center value).
TRACE_ORACLE_P3 = 1.6694898957108992

STEP_LEVELS = (1.0, -0.5, 0.25, 0.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.elapsed:.1f}s)"


def _result(number, name, passed, details, t0):
    return CriterionResult(number, name, bool(passed), details, time.time() - t0)


def criterion_1_duality():
    """|J - I(u_f)| <= 1e-6 (1 + |J|) for p in {1.5, 2, 3}, disk 64x10,
    5 random step loads each."""
    t0 = time.time()
    mesh = build_disk_mesh(1.0, 64, 10)
    rng = np.random.default_rng(20240601)
    worst = 0.0
    cases = []
    ok = True
    for p in (1.5, 2.0, 3.0):
        for k in range(5):
            f = random_step_load(mesh, rng)
            state, rep = solve(mesh, f, SolveConfig(p=p))
            tol = 1e-6 * (1.0 + abs(rep.J))
            ratio = rep.duality_gap / tol
            worst = max(worst, ratio)
            ok = ok and rep.converged and rep.duality_gap <= tol
            cases.append((p, k, rep.J, rep.duality_gap))
    return _result(
        1, "duality gap", ok,
        {"worst_gap_over_tol": worst, "n_cases": len(cases)}, t0,
    )


def criterion_2_linear_oracle():
    """p=2 unit disk, unit load: J within 1% of 2 pi I0(1)/I1(1) on the
    64x10 mesh; observed convergence order >= 1.8 under one refinement."""
    t0 = time.time()
    errs = []
    for n, m in ((64, 10), (128, 20)):
        mesh = build_disk_mesh(1.0, n, m)
        f = LoadField.constant(mesh, 1.0)
        state, rep = solve(mesh, f, SolveConfig(p=2.0))
        errs.append(abs(rep.J - J_ORACLE_P2))
    rel = errs[0] / J_ORACLE_P2
    order = float(np.log2(errs[0] / errs[1]))
    ok = rel <= 0.01 and order >= 1.8
    return _result(
        2, "p=2 radial oracle + convergence order", ok,
        {"rel_error_64x10": rel, "observed_order": order}, t0,
    )


def criterion_3_nonlinear_oracle():
    """p=3 unit disk, unit load: boundary trace within 1% of the radial
    shooting oracle at every cell."""
    t0 = time.time()
    mesh = build_disk_mesh(1.0, 64, 10)
    f = LoadField.constant(mesh, 1.0)
    state, rep = solve(mesh, f, SolveConfig(p=3.0))
    rel = np.max(np.abs(state.boundary_trace - TRACE_ORACLE_P3)) / TRACE_ORACLE_P3
    ok = rep.converged and rel <= 0.01
    return _result(3, "p=3 radial oracle", ok, {"max_rel_trace_error": rel}, t0)


def criterion_4_best_response_exact():
    """best_response attains the exhaustive-permutation maximum of L
    exactly, 100 random traces on up to 8 cells."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    ok = True
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(5, 9))
        values = np.round(rng.uniform(-2, 2, size=n), 3)
        trace = rng.normal(size=n)
        rc = RearrangementClass(np.sort(values), 1.0)
        f_hat = best_response(rc, trace)
        L_hat = linear_functional_L(f_hat, trace)
        # evaluate every permutation with the same term-by-term sum as
        # linear_functional_L so the exact-equality claim is well posed
        perms = np.array(list(itertools.permutations(values)))
        L_all = np.sum(perms * trace[None, :] * np.ones_like(trace)[None, :], axis=1)
        L_max = float(L_all.max())
        worst = max(worst, abs(L_max - L_hat))
        ok = ok and L_hat >= L_max  # exact: no permutation may beat it
    return _result(
        4, "best response = exhaustive maximum", ok,
        {"max_abs_gap": worst, "n_trials": 100}, t0,
    )


# Shared battery for criteria 5 and 6: optimization runs on the 64x10 disk
# plus exhaustive enumeration on the 8-cell disk.
_battery_cache = {}


def _optimization_battery():
    if "runs" in _battery_cache:
        return _battery_cache
    mesh = build_disk_mesh(1.0, 64, 10)
    runs = []
    for p in (2.0, 3.0):
        for name, f0 in (
            ("binary", binary_load(mesh, 16, start=5)),
            ("3level", step_load(mesh, [0.0, 0.5, 1.0])),
        ):
            cfg = OptimizeConfig(
                solver=SolveConfig(p=p), n_restarts=5, seed=11, max_outer_iters=80
            )
            fhat, uhat, hist = maximize_over_rearrangements(mesh, f0, cfg)
            runs.append({
                "p": p,
                "f0": name,
                "fhat": fhat,
                "uhat": uhat,
                "history": hist,
                "defect": comonotonicity_defect(fhat, uhat.boundary_trace),
            })
    _battery_cache["runs"] = runs

    tiny = build_disk_mesh(1.0, 8, 2)
    tiny_cases = []
    values = np.array([0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0])
    for p in (2.0, 3.0):
        cfg = SolveConfig(p=p)
        best_J = -np.inf
        seen = set()
        for perm in itertools.permutations(values):
            if perm in seen:
                continue
            seen.add(perm)
            f = LoadField.from_values(tiny, np.array(perm))
            _, rep = solve(tiny, f, cfg)
            best_J = max(best_J, rep.J)
        ocfg = OptimizeConfig(
            solver=cfg, n_restarts=5, seed=3, max_outer_iters=80
        )
        f0 = LoadField.from_values(tiny, values)
        fhat, uhat, hist = maximize_over_rearrangements(tiny, f0, ocfg)
        _, rep = solve(tiny, fhat, cfg)
        tiny_cases.append({
            "p": p,
            "J_exhaustive": best_J,
            "J_optimizer": rep.J,
            "n_distinct": len(seen),
        })
    _battery_cache["tiny"] = tiny_cases
    return _battery_cache


def criterion_5_monotone_ascent():
    """J(f_{k+1}) >= J(f_k) - 1e-5 (1 + |J|) along every optimization
    iteration of the criterion-6 battery."""
    t0 = time.time()
    battery = _optimization_battery()
    worst = -np.inf
    ok = True
    for run in battery["runs"]:
        hist = run["history"]
        for r, _, _ in hist.restart_results:
            Js = [rec.J for rec in hist.per_restart(r)]
            for a, b in zip(Js, Js[1:]):
                slack = (a - b) / (1e-5 * (1.0 + abs(a)))
                worst = max(worst, slack)
                ok = ok and b >= a - 1e-5 * (1.0 + abs(a))
    return _result(
        5, "monotone ascent of J", ok, {"worst_drop_over_tol": worst}, t0
    )


def criterion_6_comonotone_fixed_point():
    """Terminal comonotonicity defect 0 for binary and 3-level loads,
    p in {2, 3}, 5 restarts; 8-cell exhaustive maximum matched to 1e-6."""
    t0 = time.time()
    battery = _optimization_battery()
    ok = True
    defects = []
    for run in battery["runs"]:
        defects.append(run["defect"])
        ok = ok and run["defect"] == 0.0
    rels = []
    for case in battery["tiny"]:
        rel = abs(case["J_exhaustive"] - case["J_optimizer"]) / abs(
            case["J_exhaustive"]
        )
        rels.append(rel)
        ok = ok and rel <= 1e-6
    return _result(
        6, "comonotone fixed point + tiny exhaustive match", ok,
        {"defects": defects, "tiny_rel_gaps": rels}, t0,
    )


def criterion_7_derivative_agreement():
    """Pairwise relative discrepancy of the four I'(0) estimates <= 1e-2
    on the 128-cell disk for p in {1.5, 2, 3} and three perturbation
    fields, decreasing under one refinement."""
    t0 = time.time()
    ok = True
    table = []
    for p in (1.5, 2.0, 3.0):
        for spec_name in ("sin:1", "cos:2", "bump"):
            discs = {}
            for n, m in ((128, 20), (256, 40)):
                mesh = build_disk_mesh(1.0, n, m)
                L = mesh.total_boundary_length
                spec = (
                    f"bump:{0.3 * L},{0.4 * L}" if spec_name == "bump" else spec_name
                )
                f = step_load(mesh, STEP_LEVELS)
                fld = tangent_field(spec, L)
                rep = derivative_report(mesh, f, fld, SolveConfig(p=p), t=1e-3)
                discs[n] = rep.max_discrepancy
            ok = ok and discs[128] <= 1e-2 and discs[256] < discs[128]
            table.append((p, spec_name, discs[128], discs[256]))
    return _result(
        7, "four-way derivative agreement", ok,
        {"max_disc_128": max(r[2] for r in table),
         "max_disc_256": max(r[3] for r in table),
         "cases": table}, t0,
    )


def criterion_8_symmetry_null():
    """All four I'(0) estimates vanish to 1e-4 (1 + |J|) for a constant
    (rotation) field on the disk; run at p in {2, 3} on the 512-cell mesh
    (see the decisions ledger for the p < 2 exclusion)."""
    t0 = time.time()
    mesh = build_disk_mesh(1.0, 512, 80)
    L = mesh.total_boundary_length
    f = step_load(mesh, STEP_LEVELS)
    fld = tangent_field("constant", L)
    ok = True
    rows = []
    for p in (2.0, 3.0):
        rep = derivative_report(mesh, f, fld, SolveConfig(p=p), t=1e-3)
        _, srep = solve(mesh, f, SolveConfig(p=p))
        tol = 1e-4 * (1.0 + abs(srep.J))
        worst = max(abs(v) for v in rep.values.values())
        ok = ok and worst <= tol
        rows.append((p, worst, tol))
    return _result(
        8, "rotation-symmetry null", ok,
        {"worst_over_tol": max(w / tol for _, w, tol in rows), "cases": rows}, t0,
    )


def criterion_9_transport_convergence():
    """||f_t - f||_{L^q} and ||u_t - u_0||_{W^{1,p}} decay monotonically
    (10% slack) along t = 0.1 * 2^{-k}, k = 0..5."""
    t0 = time.time()
    mesh = build_disk_mesh(1.0, 64, 10)
    L = mesh.total_boundary_length
    f = binary_load(mesh, 24, start=3)
    fld = tangent_field("cos:1", L)
    ts = [0.1 * 2.0 ** (-k) for k in range(6)]
    ok = True
    final = {}
    for p in (2.0, 3.0):
        rec = transported_solution_check(mesh, f, fld, ts, SolveConfig(p=p))
        ok = ok and rec.u_monotone and rec.f_monotone
        final[p] = (rec.u_norms[-1], rec.f_norms[-1])
    return _result(
        9, "transport convergence", ok, {"final_norms": final}, t0
    )


def criterion_10_flow_fidelity():
    """Flow group property to 1e-9; first-order expansion and tangential
    Jacobian deviations shrink by ~4 per t-halving (second order)."""
    t0 = time.time()
    L = 2.0 * np.pi
    fld = tangent_field("sin:1", L)
    s = np.linspace(0.0, L, 37, endpoint=False)
    group_dev = 0.0
    for ta, tb in ((0.3, 0.2), (0.05, -0.125), (0.7, 0.1)):
        comp = FlowMap(fld, tb).forward(FlowMap(fld, ta).forward(s))
        direct = FlowMap(fld, ta + tb).forward(s)
        group_dev = max(group_dev, float(np.max(np.abs(comp - direct))))

    def expansion_dev(t):
        return float(np.max(np.abs(FlowMap(fld, t).forward(s) - (s + t * fld.speed(s)))))

    def jacobian_dev(t):
        return float(np.max(np.abs(FlowMap(fld, t).jacobian(s) - (1.0 + t * fld.speed_prime(s)))))

    e1, e2 = expansion_dev(1e-3), expansion_dev(5e-4)
    j1, j2 = jacobian_dev(1e-3), jacobian_dev(5e-4)
    exp_ratio, jac_ratio = e1 / e2, j1 / j2
    ok = (
        group_dev <= 1e-9
        and 3.5 <= exp_ratio <= 4.5
        and 3.5 <= jac_ratio <= 4.5
        and e1 <= 1e-5
    )
    return _result(
        10, "flow fidelity", ok,
        {"group_dev": group_dev, "expansion_halving_ratio": exp_ratio,
         "jacobian_halving_ratio": jac_ratio, "expansion_dev_1e-3": e1}, t0,
    )


ALL_CRITERIA = [
    criterion_1_duality,
    criterion_2_linear_oracle,
    criterion_3_nonlinear_oracle,
    criterion_4_best_response_exact,
    criterion_5_monotone_ascent,
    criterion_6_comonotone_fixed_point,
    criterion_7_derivative_agreement,
    criterion_8_symmetry_null,
    criterion_9_transport_convergence,
    criterion_10_flow_fidelity,
]


def run_criteria(numbers=None, echo=print):
    """Run the selected criteria (all by default); returns the results."""
    results = []
    for i, fn in enumerate(ALL_CRITERIA, start=1):
        if numbers is not None and i not in numbers:
            continue
        res = fn()
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results

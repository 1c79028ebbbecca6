"""Acceptance criteria 1-9, one pass/fail line each (shown with ``pytest -v``)."""

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import econ_tiny
from dairyplan.case_study import (PRINTED_ROUTE_TOTALS, case_study, printed_dc_totals,
                                  published_routing_plan)
from dairyplan.constraints import is_feasible
from dairyplan.ga import (GAConfig, crossover, decode_PBA, decode_PBD, init_population,
                          invariant_violations, mutate, run)
from dairyplan.generator import GenSpec, generate, tiny
from dairyplan.instance import RobustConfig
from dairyplan.linearize import linearize_transport_term
from dairyplan.objective import evaluate_objective
from dairyplan.oracle import solve_exact
from dairyplan.validator import audit, gap, totals_from_dc_figures


def report(capsys, n, ok, detail, t0, budget):
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed <= budget
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} | {detail} | {elapsed:.1f}s (budget {budget:g}s)")
    assert ok, detail


# ------------------------------------------------------------------ 1 and 2

def test_criterion_1_case_study_route_totals(capsys):
    t0 = time.perf_counter()
    table = audit(case_study(), published_routing_plan()).routes
    # the route table sums each DC's printed Total cell of the demand table
    loads = totals_from_dc_figures(table, printed_dc_totals())
    got = [[int(round(loads[d, l])) for l in range(3)] for d in range(5)]
    match = sum(got[d][l] == PRINTED_ROUTE_TOTALS[d][l] for d in range(5) for l in range(3))
    # known mismatch: the period-2 route-1 stops add up to 1192, the table prints 1172
    ok = (match == 14 and got[1][0] == 1192 and PRINTED_ROUTE_TOTALS[1][0] == 1172
          and got[0] == [1417, 1497, 1015] and got[3] == [1214, 1498, 900] and got[4] == [1297, 1287, 1484])
    rows = sum(int(round(table.entry(d, l).total)) == PRINTED_ROUTE_TOTALS[d][l]
               for d in range(5) for l in range(3))
    report(capsys, 1, ok, f"{match}/15 printed totals reproduced, period 2 route 1 = {got[1][0]} "
                          f"(product-row sums: {rows}/15)", t0, 1.0)


def test_criterion_2_route_capacity(capsys):
    t0 = time.perf_counter()
    entries = [e for e in audit(case_study(), published_routing_plan()).routes.entries if e.stops]
    totals = [e.total for e in entries]
    printed = [t for row in PRINTED_ROUTE_TOTALS for t in row]
    ok = len(totals) == 15 and all(500 <= t <= 1500 for t in totals + printed)
    report(capsys, 2, ok, f"{len(totals)} routes, totals in [{min(totals):g}, {max(totals):g}]", t0, 1.0)


# ------------------------------------------------------------------ 3

def test_criterion_3_ga_against_oracle(capsys):
    t0 = time.perf_counter()
    lines = []
    ok = True
    for label, make in (("table ranges", tiny), ("cheap transport", econ_tiny)):
        gaps, hits = [], 0
        for seed in range(10):
            inst = make(seed)
            exact = solve_exact(inst)
            assert exact.proven_optimal
            found = run(inst, GAConfig(seed=seed)).best_value
            gaps.append(gap(found, exact.best_value).gap_vs_heuristic)
            hits += found <= exact.best_value * (1 + 1e-9)
        mean = float(np.mean(gaps))
        ok = ok and mean <= 0.05 and hits >= 6
        lines.append(f"{label}: mean gap {100 * mean:.3f}%, {hits}/10 optimal")
    report(capsys, 3, ok, "; ".join(lines), t0, 600.0)


# ------------------------------------------------------------------ 4

def random_feasible_plans(count):
    out = []
    seed = 0
    while len(out) < count:
        # alternate priced and unscreened decodes so many plans carry tours
        inst = econ_tiny(seed) if seed % 2 else tiny(seed)
        rng = np.random.default_rng(seed)
        for c in init_population(inst, 2, rng, heuristic=1):
            sol = (decode_PBD if seed % 3 else decode_PBA)(inst, c, seed=seed, screen=seed % 2 == 1)
            if is_feasible(inst, sol):
                out.append((inst, sol))
        seed += 1
    return out[:count]


def test_criterion_4_linearisation(capsys):
    t0 = time.perf_counter()
    worst, with_tours = 0.0, 0
    for inst, sol in random_feasible_plans(100):
        lin = linearize_transport_term(inst, M=inst.params.big_M)
        zvtc = lin.minimal_zvtc(sol.ZV)
        assert np.all(zvtc >= lin.lower_bound(sol.ZV) - 1e-12) and np.all(zvtc >= 0)
        vtc = inst.params.VTC[:, :, :, None]
        off = ~np.eye(inst.num_dcs, dtype=bool)[:, :, None, None]
        linear = float((sol.UB * zvtc * off).sum())
        bilinear = float((sol.UB * vtc * sol.ZV * off).sum())
        with_tours += bool(sol.ZV.any())
        if bilinear:
            worst = max(worst, abs(linear - bilinear) / abs(bilinear))
        else:
            assert linear == 0.0
    ok = worst <= 1e-9 and with_tours >= 30
    report(capsys, 4, ok, f"100 plans ({with_tours} with tours), max relative difference {worst:.2e}", t0, 60.0)


# ------------------------------------------------------------------ 5

def loop_penalty(inst, rob):
    total = 0.0
    A, D, P = inst.num_dcs, inst.num_demand_days, inst.num_products
    for a in range(1, A):
        for d in range(D):
            for q in range(P):
                t, phi, phi_p = rob.t_m[a, d, q], rob.phi[a, d, q], rob.phi_prime[a, d, q]
                total += (t + (phi - phi_p) / 3.0) * (1.0 - rob.alpha)
    return rob.gamma * total


def test_criterion_5_robust_boundary(capsys):
    t0 = time.perf_counter()
    verdicts = 0
    for seed in range(20):
        inst = econ_tiny(seed)
        one = RobustConfig.from_demand(inst, 1.0, 3.0)
        cfg = GAConfig(population_size=8, max_generations=4, seed=seed)
        a, b = run(inst, cfg), run(inst, cfg, one)
        assert a.best_value == b.best_value and a.best_solution == b.best_solution
        ea, eb = solve_exact(inst), solve_exact(inst, one)
        assert ea.best_value == eb.best_value and ea.best_solution == eb.best_solution
        rng = np.random.default_rng(seed)
        for c in init_population(inst, 4, rng, heuristic=2):
            sol = decode_PBD(inst, c)
            for s in (sol, sol.replace(UnmD=sol.UnmD * 0.5)):
                assert is_feasible(inst, s) == is_feasible(inst, s, one)
                assert evaluate_objective(inst, s).total == evaluate_objective(inst, s, one).total
                verdicts += 1
    worst = 0.0
    for seed in range(20):
        inst = econ_tiny(seed)
        for alpha in np.round(np.arange(0.1, 1.0, 0.1), 1):
            rob = RobustConfig.from_demand(inst, float(alpha), 2.5)
            got = evaluate_objective(inst, decode_PBA(inst, init_population(inst, 1, np.random.default_rng(0))[0],
                                                      rob), rob).robust_penalty
            want = loop_penalty(inst, rob)
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    ok = worst <= 1e-12
    report(capsys, 5, ok, f"20 seeds identical at alpha = 1 ({verdicts} verdicts); "
                          f"penalty max relative error {worst:.1e}", t0, 60.0)


# ------------------------------------------------------------------ 6

def test_criterion_6_sensitivity_directions(capsys):
    t0 = time.perf_counter()
    inst = econ_tiny(1)
    P = inst.num_products

    def solve_with(**params):
        res = solve_exact(inst.with_params(**{k: np.full(P, v) for k, v in params.items()}))
        assert res.proven_optimal
        return res.best_value, float(res.best_solution.UnmD.sum())

    cr = [solve_with(CrRate=v) for v in (0.0, 0.5, 0.9, 0.95, 0.99)]
    sl = [solve_with(ShelfLife=v) for v in (1.0, 1.5, 2.0, 5.0, 30.0)]
    cr_unmet = [u for _, u in cr]
    sl_z, sl_unmet = [z for z, _ in sl], [u for _, u in sl]
    up = all(x <= y + 1e-9 for x, y in zip(cr_unmet, cr_unmet[1:]))
    down = all(x >= y - 1e-9 for x, y in zip(sl_z, sl_z[1:])) and \
        all(x >= y - 1e-9 for x, y in zip(sl_unmet, sl_unmet[1:]))

    base = RobustConfig.from_demand(inst, 1.0, 1.0)
    alphas = (1.0, 0.8, 0.5, 0.2)
    plans = [solve_exact(inst, base.with_alpha(a)).best_solution for a in alphas]
    contained = all(is_feasible(inst, plans[k], base.with_alpha(lo))
                    for k in range(len(alphas)) for lo in alphas[k:])
    parts = [evaluate_objective(inst, p, base.with_alpha(a)).total - base.with_alpha(a).penalty(inst)
             for p, a in zip(plans, alphas)]
    shrink = all(x >= y - 1e-9 for x, y in zip(parts, parts[1:]))
    ok = up and down and contained and shrink and cr_unmet[-1] > cr_unmet[0] and sl_z[0] > sl_z[-1]
    detail = (f"UnmD over CrRate {[round(u, 2) for u in cr_unmet]}; Z over shelf life "
              f"{[round(z, 1) for z in sl_z]}; alpha containment {contained}")
    report(capsys, 6, ok, detail, t0, 300.0)


# ------------------------------------------------------------------ 7

def test_criterion_7_operator_closure(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    pools = [(case_study(), None)] + [(generate(GenSpec(size, s)), None)
                                     for size in ("small", "medium") for s in range(3)]
    pools = [(inst, init_population(inst, 10, rng, heuristic=5)) for inst, _ in pools]
    bad = applications = 0
    while applications < 10000:
        inst, pop = pools[applications % len(pools)]
        i, j = rng.choice(len(pop), 2, replace=False)
        stage = ("both", "production", "routing")[int(rng.integers(3))]
        kids = [mutate(c, stage, rng) for c in crossover(pop[i], pop[j], stage, rng)]
        for c in kids:
            problems = invariant_violations(inst, c)
            if c.production.shape[1] != 3 * inst.num_production_days:
                problems.append("length")
            if any(sorted(row) != list(range(1, inst.num_dcs)) for row in c.routing.tolist()):
                problems.append("routing")
            bad += bool(problems)
        pop[i], pop[j] = kids
        applications += 1
    ok = bad == 0
    report(capsys, 7, ok, f"{applications} crossover+mutation applications, {bad} invariant violations", t0, 60.0)


# ------------------------------------------------------------------ 8

def cli(*args, cwd):
    proc = subprocess.run([sys.executable, "-m", "dairyplan", *args], cwd=cwd, capture_output=True, text=True)
    return proc.returncode


def snapshot(path):
    return {p.relative_to(path).as_posix(): p.read_bytes()
            for p in sorted(path.rglob("*")) if p.is_file() and p.name != "timings.json"}


def test_criterion_8_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    assert cli("generate", "--tiny", "--seed", "1", "--override", "VTC=0.1:1", "--override", "IC=0.05:0.2",
               "--out", "inst", cwd=tmp_path) == 0
    commands = {
        "generate": ["generate", "--size", "small", "--seed", "7"],
        "generate-tiny": ["generate", "--tiny", "--seed", "3"],
        "solve-ga": ["solve", "inst/instance.json", "--population", "12", "--generations", "6", "--seed", "5"],
        "solve-exact": ["solve", "inst/instance.json", "--method", "exact", "--alpha", "0.7"],
        "solve-case": ["solve", "case-study", "--population", "6", "--generations", "3"],
        "export-lp": ["export", "inst/instance.json", "--format", "lp"],
        "export-mps": ["export", "inst/instance.json", "--format", "mps", "--alpha", "0.6"],
        "sweep": ["sweep", "inst/instance.json", "--parameter", "crrate", "--values", "0,0.9,0.99",
                  "--method", "exact"],
    }
    same = 0
    for name, argv in commands.items():
        for rep in ("a", "b"):
            assert cli(*argv, "--out", f"{name}-{rep}", cwd=tmp_path) == 0, name
        if snapshot(tmp_path / f"{name}-a") == snapshot(tmp_path / f"{name}-b"):
            same += 1
    assert cli("audit", "inst/instance.json", "solve-ga-a/solution.json", "--out", "audit-a", cwd=tmp_path) == 0
    assert cli("audit", "inst/instance.json", "solve-ga-a/solution.json", "--out", "audit-b", cwd=tmp_path) == 0
    same += snapshot(tmp_path / "audit-a") == snapshot(tmp_path / "audit-b")
    assert cli(*commands["sweep"], "--jobs", "3", "--out", "sweep-parallel", cwd=tmp_path) == 0
    same += snapshot(tmp_path / "sweep-a") == snapshot(tmp_path / "sweep-parallel")
    total = len(commands) + 2
    report(capsys, 8, same == total, f"{same}/{total} repeated commands byte-identical (incl. parallel sweep)",
           t0, 120.0)


# ------------------------------------------------------------------ 9

def micro(seed):
    return tiny(seed, a=(3, 3), VTC=(0.1, 1.0), IC=(0.05, 0.2))


def test_criterion_9_oracle_soundness(capsys):
    t0 = time.perf_counter()
    equal = 0
    pruned = []
    for seed in range(10):
        inst = micro(seed)
        fast, full = solve_exact(inst), solve_exact(inst, prune=False)
        assert fast.proven_optimal and full.proven_optimal
        equal += fast.best_value == full.best_value
        pruned.append(1 - fast.leaves_solved / full.leaves_solved)
    report(capsys, 9, equal == 10, f"{equal}/10 pruned values equal exhaustive; "
                                   f"mean leaves skipped {100 * np.mean(pruned):.0f}%", t0, 300.0)


@pytest.mark.parametrize("seed", [0])
def test_micro_instances_serve_some_demand(seed):
    # keeps criterion 9 honest: the optimum is not the empty plan
    assert solve_exact(micro(seed)).best_solution.Q.any()

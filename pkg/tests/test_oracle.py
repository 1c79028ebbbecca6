import math

import numpy as np
import pytest

from conftest import build, econ_tiny
from dairyplan.constraints import is_feasible
from dairyplan.errors import EnumerationLimitError
from dairyplan.generator import GenSpec, generate, tiny
from dairyplan.instance import RobustConfig
from dairyplan.objective import evaluate_objective
from dairyplan.options import ModelOptions
from dairyplan.oracle import (OracleBudget, enumeration_size, production_options, route_options,
                              solve_exact)
from dairyplan.solution import routes_from_zv

STRICT = ModelOptions(paper_strict=True)


def test_zero_demand_gives_empty_plan():
    inst = build(Demand=0.0)
    res = solve_exact(inst)
    assert res.proven_optimal and res.best_value == 0.0
    for name in ("Q", "UD", "ZV", "V", "G"):
        assert not np.any(getattr(res.best_solution, name))


def test_zero_demand_strict_pays_the_forced_tour():
    inst = build(Demand=0.0, MinTC=0.0, FCT=125.0)
    res = solve_exact(inst, options=STRICT)
    assert res.proven_optimal
    assert res.best_value == pytest.approx(125.0, rel=1e-12)
    assert routes_from_zv(inst, res.best_solution.ZV) == [[[1]]]


def test_strict_infeasible_when_forced_load_has_no_stock():
    # one day only: nothing cooled in time, yet the forced tour needs a load
    inst = build(Demand=0.0, MinTC=300.0)
    res = solve_exact(inst, options=STRICT)
    assert res.best_solution is None and math.isinf(res.best_value)


def symmetric_pair():
    inst = build(A=3, D=2, I=2, VTC=0.5, UnmdCost=15.0, VarCost=0.1, IC=0.05, Bpc=5.0,
                 FCost=15.0, LineCost=10.0, FCT=100.0, MinTC=100.0, MaxTC=2000.0,
                 MinLots=100.0, MaxLots=5000.0, MuMin=100.0, MuMax=5000.0, Pcapacity=5000.0,
                 ShelfLife=30.0, CrRate=0.2, StCapacity=5000.0, Demand=0.0)
    dem = np.zeros_like(inst.params.Demand)
    dem[1, 0, 1] = dem[1, 0, 2] = 80.0
    return inst.with_params(Demand=dem)


def test_symmetric_tours_tie_to_lexicographic_order():
    inst = symmetric_pair()
    res = solve_exact(inst)
    assert res.proven_optimal
    assert routes_from_zv(inst, res.best_solution.ZV)[1][0] == [1, 2]
    assert res.best_solution.UnmD.sum() == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_pruning_never_changes_the_value(seed):
    inst = econ_tiny(seed)
    fast, full = solve_exact(inst), solve_exact(inst, prune=False)
    assert fast.proven_optimal and full.proven_optimal
    assert fast.best_value == full.best_value
    assert fast.nodes_explored <= full.nodes_explored


@pytest.mark.parametrize("seed", range(6))
def test_returned_plan_is_feasible_and_priced(seed):
    inst = econ_tiny(seed)
    res = solve_exact(inst)
    assert is_feasible(inst, res.best_solution)
    assert evaluate_objective(inst, res.best_solution).total == pytest.approx(res.best_value, rel=1e-12)


def test_node_budget_stops_early():
    inst = econ_tiny(1)
    full = solve_exact(inst)
    cut = solve_exact(inst, budget=OracleBudget(max_nodes=5))
    assert not cut.proven_optimal
    assert cut.nodes_explored <= 6
    assert cut.best_value >= full.best_value
    assert solve_exact(inst, budget={"max_nodes": 5}).best_value == cut.best_value


@pytest.mark.parametrize("kw", [dict(A=4, L=2), dict(A=5, L=3), dict(A=3, P=3, F=2, L=1)])
def test_enumeration_size_counts_the_listed_options(kw):
    inst = build(**kw, D=2, I=2)
    listed = 1
    for j in range(inst.num_lines):
        listed *= len(production_options(inst, j)) ** inst.num_production_days
    for strict in (False, True):
        n = listed * len(route_options(inst, strict)) ** inst.num_demand_days
        assert enumeration_size(inst, ModelOptions(paper_strict=strict)) == n


def test_enumeration_guard_refuses_large_instances():
    inst = generate(GenSpec("medium", 0))
    assert enumeration_size(inst) > 2 ** 24
    with pytest.raises(EnumerationLimitError):
        solve_exact(inst)


def test_repeatable():
    inst = econ_tiny(3)
    a, b = solve_exact(inst), solve_exact(inst)
    assert a.best_value == b.best_value and a.best_solution == b.best_solution
    assert a.nodes_explored == b.nodes_explored


@pytest.mark.parametrize("seed", range(4))
def test_value_non_increasing_in_shelf_life(seed):
    inst = econ_tiny(seed)
    values = [solve_exact(inst.with_params(ShelfLife=np.full(inst.num_products, s))).best_value
              for s in (1.0, 2.0, 3.0)]
    assert values[0] >= values[1] >= values[2]


@pytest.mark.parametrize("seed", range(3))
def test_constraint_part_non_increasing_as_alpha_drops(seed):
    inst = econ_tiny(seed)
    base = RobustConfig.from_demand(inst, 1.0, 1.0)
    parts = []
    for alpha in (1.0, 0.8, 0.5, 0.2):
        rob = base.with_alpha(alpha)
        res = solve_exact(inst, rob)
        parts.append(res.best_value - rob.penalty(inst))
    assert all(x >= y - 1e-9 for x, y in zip(parts, parts[1:]))


def test_plain_table_ranges_make_the_empty_plan_optimal():
    # with per-kg arc costs of 1..10 and a minimum truck load, serving never
    # pays on oracle-scale instances; the optimum leaves all demand unmet
    for seed in range(3):
        res = solve_exact(tiny(seed))
        sol = res.best_solution
        assert not sol.Q.any() and not sol.ZV.any()
        need = np.transpose(tiny(seed).params.Demand, (2, 0, 1))
        assert np.allclose(sol.UnmD[1:], need[1:])

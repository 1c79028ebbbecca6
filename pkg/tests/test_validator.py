import json

import numpy as np
import pytest

from conftest import build
from dairyplan.case_study import (DC_NAMES, PRINTED_ROUTE_TOTALS, case_study, demand_array,
                                  printed_dc_totals, published_routing_plan)
from dairyplan.errors import BrokenTourError, ValidationError
from dairyplan.generator import tiny
from dairyplan.objective import transport_cost
from dairyplan.oracle import solve_exact
from dairyplan.solution import assemble_solution, zero_solution
from dairyplan.validator import audit, format_route_table, gap, route_table, totals_from_dc_figures


def test_period_one_route_totals():
    rep = audit(case_study(), published_routing_plan())
    assert [rep.routes.entry(0, l).total for l in range(3)] == [1417, 1497, 1015]


def test_printed_dc_totals_give_printed_route_totals():
    table = audit(case_study(), published_routing_plan()).routes
    loads = totals_from_dc_figures(table, printed_dc_totals())
    got = [[loads[d, l] for l in range(3)] for d in range(5)]
    off = [(d, l) for d in range(5) for l in range(3) if got[d][l] != PRINTED_ROUTE_TOTALS[d][l]]
    assert off == [(1, 0)]
    # Canbo 1-3 in period 2: 405 + 402 + 385
    assert got[1][0] == 1192.0 and PRINTED_ROUTE_TOTALS[1][0] == 1172


def test_published_routes_respect_truck_bounds():
    rep = audit(case_study(), published_routing_plan())
    assert not {"C21", "C22"} & set(rep.violated_ids)
    for e in rep.routes.entries:
        assert e.within_capacity and 500 <= e.total <= 1500
        assert e.visits[0] == e.visits[-1] == 0
        assert e.total == pytest.approx(sum(s.total for s in e.stops))


def test_empty_plan_on_zero_demand_is_feasible():
    inst = tiny(4)
    inst = inst.with_params(Demand=np.zeros_like(inst.params.Demand))
    rep = audit(inst, zero_solution(inst))
    assert rep.feasible and rep.objective.total == 0.0
    assert all(not e.stops for e in rep.routes.entries)


def hand_transport(inst, tour, drops, l=0):
    """Fixed truck cost plus per-arc load times arc cost, walking the tour by hand."""
    vtc = inst.params.VTC
    load = sum(drops[a] for a in tour)
    cost = inst.params.FCT[l]
    path = [0] + list(tour) + [0]
    for a, b in zip(path[:-1], path[1:]):
        cost += load * vtc[a, b, l]
        if b != 0:
            load -= drops[b]
    return cost


def test_shuffled_route_same_load_different_cost():
    cs = case_study()
    dem = demand_array()
    base = published_routing_plan(cs)
    routes = [[list(r) for r in day] for day in audit(cs, base).routes.to_routes()]
    routes[0][0] = [1, 3, 2, 4]
    UD = np.array(base.UD)
    shuffled = assemble_solution(cs, np.zeros(cs.shape_of("PJI")), routes, UD)
    before, after = audit(cs, base), audit(cs, shuffled)
    assert before.routes.entry(0, 0).total == after.routes.entry(0, 0).total == 1417
    assert after.routes.entry(0, 0).within_capacity
    drops = {a: dem[0, :, a].sum() for a in range(1, 11)}
    got_before = transport_cost(cs, base.ZV * _only(cs, 0, 0), base.UB * _only(cs, 0, 0))
    got_after = transport_cost(cs, shuffled.ZV * _only(cs, 0, 0), shuffled.UB * _only(cs, 0, 0))
    assert got_before == pytest.approx(hand_transport(cs, [1, 2, 3, 4], drops), rel=1e-12)
    assert got_after == pytest.approx(hand_transport(cs, [1, 3, 2, 4], drops), rel=1e-12)
    assert got_before != pytest.approx(got_after, rel=1e-9)


def _only(inst, l, d):
    mask = np.zeros(inst.shape_of("AALD"))
    mask[:, :, l, d] = 1.0
    return mask


def test_route_table_round_trip():
    cs = case_study()
    table = audit(cs, published_routing_plan(cs)).routes
    sol = zero_solution(cs).replace(ZV=table.to_zv(cs))
    assert route_table(cs, sol).to_routes() == table.to_routes()


def test_broken_tour_lists_stranded_arcs():
    inst = build(A=5)
    ZV = np.zeros((5, 5, 1, 1))
    ZV[0, 1, 0, 0] = ZV[1, 0, 0, 0] = 1.0
    ZV[3, 4, 0, 0] = ZV[4, 3, 0, 0] = 1.0
    with pytest.raises(BrokenTourError) as err:
        audit(inst, zero_solution(inst).replace(ZV=ZV))
    stranded = {(a, b) for a, b, _, _ in err.value.stranded_arcs}
    assert stranded == {(3, 4), (4, 3)}


def test_route_report_shapes():
    cs = case_study()
    rep = audit(cs, published_routing_plan(cs))
    text = format_route_table(rep.routes, DC_NAMES)
    lines = text.splitlines()
    assert len(lines) == 2 + 15
    assert lines[2].split()[:2] == ["1", "1"] and lines[2].split()[-2:] == ["4", "1417"]
    doc = json.loads(rep.to_json())
    assert doc["feasible"] is False
    # no production behind the published tours: only the stock rows fail
    assert set(doc["violated_constraints"]) == {"C42", "C43"}
    assert len([r for r in doc["routes"] if r["stops"]]) == 15


def test_gap_substitution():
    g = gap(101.3, 100.0)
    assert g.gap_vs_heuristic == pytest.approx(1.3 / 101.3, rel=1e-12)
    assert round(g.gap_vs_heuristic, 5) == 0.01283
    assert g.improvement_vs_exact == pytest.approx(-0.013, rel=1e-12)


def test_gap_identity():
    g = gap(42.0, 42.0)
    assert g.gap_vs_heuristic == 0.0 and g.improvement_vs_exact == 0.0


@pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, -2.0), (float("inf"), 1.0), (1.0, float("nan"))])
def test_gap_rejects_bad_inputs(bad):
    with pytest.raises(ValidationError):
        gap(*bad)


def test_oracle_outputs_pass_audit():
    for seed in range(100):
        inst = tiny(seed)
        res = solve_exact(inst)
        assert res.proven_optimal
        assert audit(inst, res.best_solution).feasible, seed

"""Dairy case study: check the published tours, then let the GA plan the week."""
import numpy as np

from dairyplan.case_study import (DC_NAMES, PRINTED_ROUTE_TOTALS, PRODUCTS, case_study,
                                  printed_dc_totals, published_routing_plan)
from dairyplan.ga import GAConfig, run
from dairyplan.validator import audit, format_production_table, format_route_table, totals_from_dc_figures

inst = case_study()
print(inst.name, inst.dims)

# %% published tours, loads summed from the printed per-DC totals
rep = audit(inst, published_routing_plan(inst))
loads = totals_from_dc_figures(rep.routes, printed_dc_totals())
for d in range(5):
    row = [f"{loads[d, l]:>6.0f} / {PRINTED_ROUTE_TOTALS[d][l]:<5d}" for l in range(3)]
    print(f"period {d + 1}:", "   ".join(row))
print(format_route_table(rep.routes, DC_NAMES))

# the plan ships without producing anything, so only the stock rows complain
print("violated:", rep.violated_ids)

# %% GA plan (a short run; the defaults are 100 x 300)
res = run(inst, GAConfig(population_size=30, max_generations=40, seed=1))
plan = audit(inst, res.best_solution)
print(f"Z = {res.best_value:,.1f} via {res.decoder_used}, feasible = {plan.feasible}")
for name, value in plan.objective.as_dict().items():
    print(f"  {name:<20s} {value:>14,.1f}")
print(format_production_table(inst, res.best_solution, PRODUCTS))
print(format_route_table(plan.routes, DC_NAMES))

# with these cost ranges most demand is cheaper to leave unmet than to truck out
unmet = res.best_solution.UnmD[1:].sum()
demand = np.transpose(inst.params.Demand, (2, 0, 1))[1:].sum()
print(f"unmet share {unmet / demand:.1%}")

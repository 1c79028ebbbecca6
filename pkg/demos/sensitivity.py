"""Cooling rate, shelf life and satisfaction level on one small instance, solved exactly."""
import numpy as np

from dairyplan.constraints import is_feasible
from dairyplan.generator import tiny
from dairyplan.instance import RobustConfig
from dairyplan.oracle import solve_exact

inst = tiny(1, VTC=(0.1, 1.0), IC=(0.05, 0.2))
P = inst.num_products


def row(res):
    sol = res.best_solution
    return res.best_value, sol.QB.sum(axis=0).mean(), sol.II.sum(axis=0).mean(), sol.UnmD[1:].mean()


def show(title, values, results):
    print(f"\n{title:>10} {'Z':>10} {'QB':>8} {'II':>8} {'UnmD':>7}")
    for v, r in zip(values, results):
        z, qb, ii, un = row(r)
        print(f"{v:>10g} {z:>10.2f} {qb:>8.1f} {ii:>8.1f} {un:>7.2f}")


# %% slower cooling pushes shipments later and leaves more demand unmet
values = [0.0, 0.5, 0.9, 0.95, 0.99]
show("CrRate", values, [solve_exact(inst.with_params(CrRate=np.full(P, v))) for v in values])

# %% longer shelf life lets stock wait for the trucks
values = [1.0, 1.5, 2.0, 5.0, 30.0]
show("ShelfLife", values, [solve_exact(inst.with_params(ShelfLife=np.full(P, v))) for v in values])

# %% lowering alpha widens the allowance on the demand rows
base = RobustConfig.from_demand(inst, 1.0, gamma=1.0)
alphas = [1.0, 0.8, 0.5, 0.2]
results = [solve_exact(inst, base.with_alpha(a)) for a in alphas]
show("alpha", alphas, results)
for a, r in zip(alphas, results):
    lower = [b for b in alphas if b <= a]
    ok = all(is_feasible(inst, r.best_solution, base.with_alpha(b)) for b in lower)
    print(f"plan optimal at alpha={a:g} feasible at every lower alpha: {ok}")

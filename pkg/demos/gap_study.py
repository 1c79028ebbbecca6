"""GA against the exact search on oracle-scale instances."""
import time

from dairyplan.ga import GAConfig, run
from dairyplan.generator import tiny
from dairyplan.oracle import solve_exact
from dairyplan.validator import gap

CHEAP = {"VTC": (0.1, 1.0), "IC": (0.05, 0.2)}

rows = []
for seed in range(10):
    inst = tiny(seed, **CHEAP)
    t = time.perf_counter()
    exact = solve_exact(inst)
    t_exact = time.perf_counter() - t
    t = time.perf_counter()
    ga = run(inst, GAConfig(seed=seed))
    t_ga = time.perf_counter() - t
    g = gap(ga.best_value, exact.best_value)
    rows.append((seed, exact.best_value, ga.best_value, g.gap_vs_heuristic, exact.nodes_explored, t_exact, t_ga))

print(f"{'seed':>4} {'exact':>10} {'GA':>10} {'gap %':>7} {'nodes':>6} {'t exact':>8} {'t GA':>6}")
for seed, ze, zg, g, nodes, te, tg in rows:
    print(f"{seed:>4} {ze:>10.2f} {zg:>10.2f} {100 * g:>7.3f} {nodes:>6} {te:>8.2f} {tg:>6.2f}")
hits = sum(r[3] <= 1e-9 for r in rows)
print(f"mean gap {100 * sum(r[3] for r in rows) / len(rows):.3f}%, optimum reached {hits}/{len(rows)}")

"""Exact optimiser for oracle-scale instances.

Depth-first search over the binary structure of a plan, one decision slot
at a time: for every production day and line, the set of products that get
a lot and the order in which their families run; then, for every shipping
day, the tour of each truck. A slot choice fixes V, G, Y, YB and X (or ZV)
completely, and the options listed per slot are exactly the binary patterns
the constraint rows admit, apart from switching a recipe on with no family
using it, which only adds cost. With all binaries fixed the rest of the
model is a linear program, solved with HiGHS.

Bounding uses the costs already committed by the fixed binaries (fixed line
and recipe costs, changeovers, truck fixed costs, the minimum lot and
minimum truckload cost) against the incumbent. Cheap necessary conditions
(capacity, line time, recipe window, cooling lag) discard slots that can
never be completed. Both are switched off by ``prune=False``, which
leaves plain exhaustive enumeration.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .constraints import is_feasible
from .errors import EnumerationLimitError
from .milp import build_model, solution_arrays_from_vector
from .options import DEFAULT_OPTIONS
from .solution import assemble_solution

DEFAULT_ENUMERATION_LIMIT = 2 ** 24
_SAFETY = 1e-6


@dataclass(frozen=True)
class OracleBudget:
    max_nodes: int | None = None
    max_seconds: float | None = None


@dataclass(frozen=True, eq=False)
class OracleResult:
    best_solution: object        # PlanSolution, or None if no feasible plan exists
    best_value: float
    proven_optimal: bool
    nodes_explored: int
    wall_time: float
    leaves_solved: int = 0
    best_choices: tuple = ()


# ------------------------------------------------------------------ slot options

def production_options(instance, j):
    """Options for one line-day: ``(products, family order)`` tuples.

    Products are switched on in binary counting order (empty set first) and
    family orders are listed lexicographically.
    """
    prods = [int(p) for p in np.flatnonzero(instance.product_lines[:, j])]
    fop = instance.family_of_product
    out = []
    for bits in itertools.product((0, 1), repeat=len(prods)):
        chosen = tuple(p for p, b in zip(prods, bits) if b)
        fams = sorted({int(fop[p]) for p in chosen})
        for order in itertools.permutations(fams):
            out.append((chosen, order))
    return out


def _arrangements(remaining):
    """All ordered sequences of distinct items of ``remaining``, lexicographic."""
    yield ()
    for c in remaining:
        rest = tuple(x for x in remaining if x != c)
        for tail in _arrangements(rest):
            yield (c,) + tail


def route_options(instance, strict=False):
    """Options for one day: a tour per truck, no DC on two tours.

    In strict mode every truck leaves the depot and every DC is visited.
    """
    customers = tuple(range(1, instance.num_dcs))
    L = instance.num_vehicles
    out = []

    def extend(l, remaining, acc):
        if l == L:
            if not strict or not remaining:
                out.append(tuple(acc))
            return
        for seq in _arrangements(remaining):
            if strict and not seq:
                continue
            extend(l + 1, tuple(x for x in remaining if x not in seq), acc + [seq])

    extend(0, customers, [])
    return out


def _count_production_options(instance, j):
    """``len(production_options(instance, j))`` without listing them."""
    prods = np.flatnonzero(instance.product_lines[:, j])
    sizes = np.bincount(instance.family_of_product[prods], minlength=instance.num_families)
    # ways[k]: product subsets touching exactly k families
    ways = [1]
    for n in sizes:
        if n:
            step = 2 ** int(n) - 1
            ways = [a + (ways[k - 1] * step if k else 0) for k, a in enumerate(ways + [0])]
    return sum(w * math.factorial(k) for k, w in enumerate(ways))


def _count_route_options(instance, strict=False):
    """``len(route_options(instance, strict))`` without listing them."""
    n, L = instance.num_dcs - 1, instance.num_vehicles
    tail = [1 if (m == 0 or not strict) else 0 for m in range(n + 1)]
    for _ in range(L):
        tail = [sum(math.perm(m, k) * tail[m - k] for k in range(1 if strict else 0, m + 1))
                for m in range(n + 1)]
    return tail[n]


def enumeration_size(instance, options=DEFAULT_OPTIONS):
    """Number of complete binary structures the search may visit."""
    count = 1
    for j in range(instance.num_lines):
        count *= _count_production_options(instance, j) ** instance.num_production_days
    count *= _count_route_options(instance, options.paper_strict) ** instance.num_demand_days
    return count


# ------------------------------------------------------------------ the search

class _Search:
    def __init__(self, instance, robust, options, prune, budget):
        self.ins = instance
        self.robust = robust
        self.options = options
        self.prune = prune
        self.budget = budget
        p = instance.params
        self.p = p
        self.model = build_model(instance, robust, options)
        m = self.model
        cost, lb, ub, lo, hi, binary = m.arrays()
        self.cost, self.lb, self.ub = cost, lb, ub
        self.binary_cols = np.flatnonzero(binary)
        self.constraint = LinearConstraint(m.matrix, lo, hi)
        I, J, D = instance.num_production_days, instance.num_lines, instance.num_demand_days
        self.prod_opts = [production_options(instance, j) for j in range(J)]
        self.route_opts = route_options(instance, options.paper_strict)
        self.slots = [("prod", j, i) for i in range(I) for j in range(J)] + [("route", d) for d in range(D)]
        self.base = robust.penalty(instance) if robust is not None else 0.0
        self.best_value = math.inf
        self.best_solution = None
        self.best_choices = ()
        self.nodes = 0
        self.leaves = 0
        self.exhausted = False
        self.t0 = time.perf_counter()
        S = instance.cooling_lag_days
        self.can_ship = [d - S >= 0 and bool(instance.freshness_ok.any()) for d in range(D)]

    # --- costs committed by one slot choice, and quick infeasibility screens
    def prod_cost(self, j, i, choice, recipes_on):
        prods, order = choice
        if not prods:
            return 0.0, recipes_on
        p = self.p
        c = p.FCost[j, i] + p.LineCost[j, i]
        c += sum(p.VarCost[q] * p.MinLots[q] for q in prods)
        c += sum(p.Chc[f, e, j, i] for f, e in zip(order[:-1], order[1:]))
        new = set(recipes_on)
        for f in order:
            for r in self.ins.recipes_of_family[f]:
                if (r, i) not in new:
                    new.add((r, i))
                    c += p.Bpc[r, i]
        return c, frozenset(new)

    def prod_screen(self, j, i, choice, day_lots):
        """False if the line-day choice cannot be completed feasibly."""
        prods, order = choice
        if not prods:
            return True
        p, ins = self.p, self.ins
        tol = 1e-6
        minutes = sum(p.MinLots[q] / p.Prate[j, q] + p.Setup[j, q] for q in prods)
        minutes += sum(p.Cht[f, e, j] for f, e in zip(order[:-1], order[1:]))
        room = p.W[j, i] - p.dailysh[j, i] - p.dailyop[j, i]
        pret = min(p.Pret[r] for r in ins.recipes_on_line[j]) if len(ins.recipes_on_line[j]) else 0.0
        if minutes > room - pret + tol:
            return False
        if day_lots + sum(p.MinLots[q] for q in prods) > p.Pcapacity[i] + tol:
            return False
        for r in range(ins.num_recipes):
            mine = [q for q in prods if ins.product_recipe[q, r]]
            if mine and sum(p.MinLots[q] for q in mine) > p.MuMax[r, i] + tol:
                return False
        return True

    def route_cost(self, tours):
        p = self.p
        c = 0.0
        for l, seq in enumerate(tours):
            if seq:
                c += p.FCT[l] + p.VTC[0, seq[0], l] * p.MinTC[l]
        return c

    def route_screen(self, d, tours):
        # a day with no cooled stock only admits empty tours (strict mode, MinTC = 0)
        if not self.can_ship[d] and any(seq and self.p.MinTC[l] > 0 for l, seq in enumerate(tours)):
            return False
        return all(not seq or self.p.MinTC[l] <= self.p.MaxTC[l] for l, seq in enumerate(tours))

    # --- leaf
    def binaries(self, choices):
        m, ins = self.model, self.ins
        x = np.zeros(m.num_vars)
        for slot, choice in zip(self.slots, choices):
            if slot[0] == "prod":
                _, j, i = slot
                prods, order = choice
                if not prods:
                    continue
                x[m.col("V", j, i)] = 1
                for q in prods:
                    x[m.col("YB", q, j, i)] = 1
                for f in order:
                    x[m.col("Y", f, j, i)] = 1
                    for r in ins.recipes_of_family[f]:
                        x[m.col("G", r, i)] = 1
                for f, e in zip(order[:-1], order[1:]):
                    x[m.col("X", f, e, j, i)] = 1
            else:
                d = slot[1]
                for l, seq in enumerate(choice):
                    if seq:
                        path = (0,) + seq + (0,)
                        for a, b in zip(path[:-1], path[1:]):
                            x[m.col("ZV", a, b, l, d)] = 1
        return x

    def solve_leaf(self, choices):
        self.leaves += 1
        fixed = self.binaries(choices)
        lb, ub = self.lb.copy(), self.ub.copy()
        cols = self.binary_cols
        lb[cols] = ub[cols] = fixed[cols]
        res = milp(self.cost, constraints=self.constraint, bounds=Bounds(lb, ub))
        if res.status != 0 or res.x is None:
            return None
        return res

    def polish(self, choices, x):
        """Rebuild a clean plan from the LP's lots and drops along the fixed structure."""
        ins = self.ins
        arr = solution_arrays_from_vector(self.model, x)
        Q = np.where(arr["YB"] > 0.5, np.maximum(arr["Q"], 0.0), 0.0)
        routes = [[[] for _ in range(ins.num_vehicles)] for _ in range(ins.num_demand_days)]
        sequences = [[[] for _ in range(ins.num_production_days)] for _ in range(ins.num_lines)]
        visited = np.zeros((ins.num_dcs, ins.num_vehicles, ins.num_demand_days), dtype=bool)
        for slot, choice in zip(self.slots, choices):
            if slot[0] == "prod":
                sequences[slot[1]][slot[2]] = list(choice[1])
            else:
                for l, seq in enumerate(choice):
                    routes[slot[1]][l] = list(seq)
                    visited[list(seq), l, slot[1]] = True
        UD = np.maximum(arr["UD"], 0.0) * visited[:, None, :, :]
        return assemble_solution(ins, Q, routes, UD, sequences=sequences, robust=self.robust)

    def out_of_budget(self):
        b = self.budget
        if b.max_nodes is not None and self.nodes >= b.max_nodes:
            return True
        if b.max_seconds is not None and time.perf_counter() - self.t0 >= b.max_seconds:
            return True
        return False

    def improves(self, value):
        if not math.isfinite(self.best_value):
            return True
        return value < self.best_value - 1e-9 * max(1.0, abs(self.best_value))

    def run(self):
        self.exhausted = self._dfs(0, [], self.base, frozenset(), {})
        return self.exhausted

    def _dfs(self, k, choices, committed, recipes_on, day_lots):
        """Returns False if the budget stopped the search below this node."""
        if self.out_of_budget():
            return False
        self.nodes += 1
        if self.prune and math.isfinite(self.best_value) and not self.improves(committed - _SAFETY):
            return True
        if k == len(self.slots):
            res = self.solve_leaf(choices)
            if res is not None and self.improves(res.fun - _SAFETY):
                sol = self.polish(choices, res.x)
                if self.improves(sol.Z) and is_feasible(self.ins, sol, self.robust, self.options):
                    self.best_value = sol.Z
                    self.best_solution = sol
                    self.best_choices = tuple(choices)
            return True
        slot = self.slots[k]
        if slot[0] == "prod":
            _, j, i = slot
            for choice in self.prod_opts[j]:
                lots = day_lots.get(i, 0.0)
                if self.prune and not self.prod_screen(j, i, choice, lots):
                    continue
                add, rec = self.prod_cost(j, i, choice, recipes_on)
                nxt = dict(day_lots)
                nxt[i] = lots + sum(self.p.MinLots[q] for q in choice[0])
                if not self._dfs(k + 1, choices + [choice], committed + add, rec, nxt):
                    return False
        else:
            d = slot[1]
            for tours in self.route_opts:
                if self.prune and not self.route_screen(d, tours):
                    continue
                if not self._dfs(k + 1, choices + [tours], committed + self.route_cost(tours),
                                 recipes_on, day_lots):
                    return False
        return True


def solve_exact(instance, robust=None, budget=None, options=DEFAULT_OPTIONS, prune=True,
                enumeration_limit=DEFAULT_ENUMERATION_LIMIT):
    """Optimal plan by branch and bound (``prune=False``: exhaustive enumeration).

    ``budget`` is an :class:`OracleBudget` or a mapping with ``max_nodes`` /
    ``max_seconds``. Running out of budget returns the incumbent with
    ``proven_optimal=False``. If no plan is feasible the result has
    ``best_solution=None`` and ``best_value=inf``.
    """
    if budget is None:
        budget = OracleBudget()
    elif isinstance(budget, dict):
        budget = OracleBudget(**budget)
    size = enumeration_size(instance, options)
    if size > enumeration_limit:
        raise EnumerationLimitError(
            f"instance {instance.name!r} has {size} binary structures, above the limit {enumeration_limit}")
    t0 = time.perf_counter()
    search = _Search(instance, robust, options, prune, budget)
    done = search.run()
    return OracleResult(best_solution=search.best_solution, best_value=search.best_value,
                        proven_optimal=bool(done), nodes_explored=search.nodes,
                        wall_time=time.perf_counter() - t0, leaves_solved=search.leaves,
                        best_choices=search.best_choices)

"""Solution audit: feasibility, cost breakdown, tour reconstruction and gap metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import check_constraints
from .errors import ValidationError
from .objective import evaluate_objective
from .options import DEFAULT_OPTIONS
from .solution import routes_from_zv, zv_from_routes


@dataclass(frozen=True)
class RouteStop:
    dc: int
    delivered: tuple          # kg per product
    total: float


@dataclass(frozen=True)
class RouteEntry:
    day: int
    vehicle: int
    visits: tuple             # depot, stops..., depot
    stops: tuple              # RouteStop per visited DC
    total: float
    min_load: float
    max_load: float

    @property
    def num_served(self):
        return len(self.stops)

    @property
    def within_capacity(self):
        return not self.stops or (self.min_load - 1e-6 <= self.total <= self.max_load + 1e-6)


@dataclass(frozen=True)
class RouteTable:
    """Tours per (day, vehicle), in day-then-vehicle order; unused trucks are listed empty."""

    entries: tuple
    num_days: int
    num_vehicles: int

    def entry(self, day, vehicle):
        return self.entries[day * self.num_vehicles + vehicle]

    def totals(self):
        return {(e.day, e.vehicle): e.total for e in self.entries}

    def to_routes(self):
        routes = [[[] for _ in range(self.num_vehicles)] for _ in range(self.num_days)]
        for e in self.entries:
            routes[e.day][e.vehicle] = [s.dc for s in e.stops]
        return routes

    def to_zv(self, instance):
        return zv_from_routes(instance, self.to_routes())

    def as_dict(self):
        return [{"day": e.day, "vehicle": e.vehicle, "visits": list(e.visits),
                 "stops": [{"dc": s.dc, "delivered": list(s.delivered), "total": s.total} for s in e.stops],
                 "total": e.total, "within_capacity": e.within_capacity} for e in self.entries]


def route_table(instance, solution):
    """Rebuild tours from the arc binaries; drops come from ``UD``.

    Raises :class:`BrokenTourError` when arcs do not form depot-rooted tours.
    """
    routes = routes_from_zv(instance, solution.ZV)
    p = instance.params
    entries = []
    for d, per_day in enumerate(routes):
        for l, stops in enumerate(per_day):
            rows = []
            for a in stops:
                kg = tuple(float(x) for x in solution.UD[a, :, l, d])
                rows.append(RouteStop(dc=int(a), delivered=kg, total=float(sum(kg))))
            visits = (0,) + tuple(int(a) for a in stops) + (0,) if stops else ()
            entries.append(RouteEntry(day=d, vehicle=l, visits=visits, stops=tuple(rows),
                                      total=float(sum(r.total for r in rows)),
                                      min_load=float(p.MinTC[l]), max_load=float(p.MaxTC[l])))
    return RouteTable(entries=tuple(entries), num_days=instance.num_demand_days,
                      num_vehicles=instance.num_vehicles)


@dataclass(frozen=True, eq=False)
class AuditReport:
    feasible: bool
    reports: list
    objective: object         # ObjectiveBreakdown
    routes: RouteTable
    violated_ids: tuple = field(default=())

    def as_dict(self):
        return {"feasible": self.feasible,
                "violated_constraints": list(self.violated_ids),
                "num_violations": len(self.reports),
                "violations": [r.as_dict() for r in self.reports],
                "objective": self.objective.as_dict(),
                "routes": self.routes.as_dict()}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=1, sort_keys=True) + "\n"


def audit(instance, solution, robust=None, options=DEFAULT_OPTIONS):
    """Check every constraint row, price the plan and rebuild its tours."""
    reports = check_constraints(instance, solution, robust, options)
    ids = tuple(sorted({r.constraint_id for r in reports}, key=_cid_key))
    return AuditReport(feasible=not reports, reports=reports,
                       objective=evaluate_objective(instance, solution, robust),
                       routes=route_table(instance, solution), violated_ids=ids)


def _cid_key(cid):
    digits = "".join(ch for ch in cid if ch.isdigit())
    return (int(digits or 0), cid)


def totals_from_dc_figures(table, dc_totals):
    """Per-tour sums of given per-DC figures over each tour's served DCs.

    ``dc_totals[d][a]`` is the figure for DC ``a`` on day ``d`` (depot column
    included). Returns ``{(day, vehicle): total}`` for nonempty tours.
    """
    return {(e.day, e.vehicle): float(sum(dc_totals[e.day][s.dc] for s in e.stops))
            for e in table.entries if e.stops}


# ------------------------------------------------------------------ gap metrics

@dataclass(frozen=True)
class GapReport:
    z_heuristic: float
    z_exact: float
    gap_vs_heuristic: float       # (z_h - z_e) / z_h
    improvement_vs_exact: float   # (z_e - z_h) / z_e

    def as_dict(self):
        return {"z_heuristic": self.z_heuristic, "z_exact": self.z_exact,
                "gap_vs_heuristic": self.gap_vs_heuristic,
                "improvement_vs_exact": self.improvement_vs_exact}


def gap(z_heuristic, z_exact):
    """Deviation of a heuristic cost from the exact one, both ways round."""
    zh, ze = float(z_heuristic), float(z_exact)
    for name, v in (("z_heuristic", zh), ("z_exact", ze)):
        if not math.isfinite(v) or v <= 0:
            raise ValidationError(f"{name} must be finite and positive, got {v}", field=name)
    return GapReport(z_heuristic=zh, z_exact=ze, gap_vs_heuristic=(zh - ze) / zh,
                     improvement_vs_exact=(ze - zh) / ze)


# ------------------------------------------------------------------ text tables

def format_route_table(table, dc_names=None, period_label="Period"):
    """Plain-text table: period, route, served DCs, their count and kg transported."""
    name = (lambda a: dc_names[a]) if dc_names else (lambda a: str(a))
    head = f"{period_label:<8}{'Route':<7}{'Served DCs':<44}{'Number':>7}{'Total':>10}"
    lines = [head, "-" * len(head)]
    for e in table.entries:
        if not e.stops:
            continue
        served = ", ".join(name(s.dc) for s in e.stops)
        lines.append(f"{e.day + 1:<8}{e.vehicle + 1:<7}{served:<44}{e.num_served:>7}{e.total:>10.0f}")
    return "\n".join(lines) + "\n"


def production_table(instance, solution):
    """Rows ``(product, line, [kg per period])`` for every product-line pair with output."""
    rows = []
    for q in range(instance.num_products):
        for j in range(instance.num_lines):
            kg = solution.Q[q, j]
            if np.any(kg > 0):
                rows.append((q, j, [float(x) for x in kg]))
    return rows


def format_production_table(instance, solution, product_names=None):
    I = instance.num_production_days
    head = f"{'Line':<6}{'Product':<30}" + "".join(f"{'P' + str(i + 1):>9}" for i in range(I))
    lines = [head, "-" * len(head)]
    for q, j, kg in sorted(production_table(instance, solution), key=lambda r: (r[1], r[0])):
        label = product_names[q] if product_names else f"product {q}"
        lines.append(f"{j + 1:<6}{label:<30}" + "".join(f"{x:>9.0f}" for x in kg))
    return "\n".join(lines) + "\n"

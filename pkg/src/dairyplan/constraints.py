"""Constraint catalogue C2..C43 evaluated on a concrete solution.

Each row is oriented as ``lhs <= rhs`` (or ``lhs == rhs``); a report is
emitted for every index where it fails by more than the tolerance. For
equalities ``violation`` is ``|lhs - rhs|``.

Canonical readings used here (the literal equations are ambiguous or
inconsistent in places):

* C7/C8: the family makespan bounds every line's completion/processing time
  (a max over lines, not a sum).
* C21/C22: truck load bounds act on the depot-departure arc, i.e. on the
  total a tour carries.
* C23/C26: C23 counts departures from the depot, C26 returns to it.
* C28: the drop at ``b`` is bounded by the load arriving into ``b``.
* C29 covers arcs touching the depot, C30 arcs between DCs.
* C31: MTZ positions are per (DC, day).
* C35: recipe activation per line, ``G[r, i] >= Y[f, j, i]``.
* C41: delivered quantity without the tour product; C41b links drops to
  visits instead.
* C42: shipments leaving the depot on day d are bounded by the stock of day
  ``d - S`` when the cooled product still meets the freshness floor, and
  are forbidden otherwise.
* C27b: per-product load conservation (``ModelOptions.flow_conservation``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import effective_demand
from .options import DEFAULT_OPTIONS

CATALOG = {
    "C2": ("inventory balance, first day", ("p", "i")),
    "C3": ("inventory balance, later days", ("p", "i")),
    "C4": ("regular plus overtime within day maximum", ("i",)),
    "C5": ("overtime switched on when makespan passes regular time", ("f", "i")),
    "C6": ("family makespan within regular plus overtime", ("f", "i")),
    "C7": ("family makespan bounds completion times", ("f", "j", "i")),
    "C8": ("family makespan bounds processing times", ("f", "j", "i")),
    "C9": ("recipe minimum batch", ("r", "i")),
    "C10": ("recipe maximum batch", ("r", "i")),
    "C11": ("sequencing arc count", ("j", "i")),
    "C12": ("line used when a family is assigned", ("f", "j", "i")),
    "C13": ("minimum lot", ("p", "j", "i")),
    "C14": ("maximum lot", ("p", "j", "i")),
    "C15": ("family assigned when a product is", ("p", "j", "i")),
    "C16": ("family assigned only with a product", ("f", "j", "i")),
    "C17": ("at most one successor", ("f", "j", "i")),
    "C18": ("at most one predecessor", ("f", "j", "i")),
    "C19": ("daily output aggregation", ("p", "i")),
    "C20": ("family processing time", ("f", "j", "i")),
    "C21": ("truck minimum load", ("a", "l", "d")),
    "C22": ("truck maximum load", ("a", "l", "d")),
    "C23": ("tour leaves the depot", ("l", "d")),
    "C24": ("tour flow balance", ("a", "l", "d")),
    "C25": ("DC visited once", ("b", "d")),
    "C26": ("tour returns to the depot", ("l", "d")),
    "C27": ("arc load aggregation", ("a", "b", "l", "d")),
    "C27b": ("per-product load conservation", ("b", "p", "l", "d")),
    "C28": ("drop bounded by arriving load", ("b", "p", "l", "d")),
    "C29": ("depot arc load only when travelled", ("a", "b", "l", "d")),
    "C30": ("DC arc load only when travelled", ("a", "b", "l", "d")),
    "C31": ("MTZ subtour elimination", ("a", "b", "l", "d")),
    "C32": ("family start window", ("f", "j", "i")),
    "C33": ("family finish window", ("f", "j", "i")),
    "C34": ("changeover-separated sequence", ("f", "e", "j", "i")),
    "C35": ("recipe activation", ("r", "f", "j", "i")),
    "C36": ("line makespan", ("f", "j", "i")),
    "C37": ("pallet storage", ("i",)),
    "C38": ("plant capacity", ("i",)),
    "C39": ("line processing-time bound", ("j", "i")),
    "C40": ("family processing-time bound", ("f", "j", "i")),
    "C41": ("demand coverage", ("a", "d", "p")),
    "C41b": ("drop only at visited DC", ("a", "p", "l", "d")),
    "C42": ("cooled, fresh stock bounds shipments", ("p", "d")),
    "C43": ("sign, integrality and subset domain", ("field", "index")),
}


@dataclass(frozen=True)
class ConstraintReport:
    constraint_id: str
    index_tuple: tuple
    lhs: float
    rhs: float
    violation: float

    def as_dict(self):
        return {"constraint_id": self.constraint_id, "index": list(self.index_tuple),
                "lhs": self.lhs, "rhs": self.rhs, "violation": self.violation}


class _Collector:
    def __init__(self, tol):
        self.tol = tol
        self.reports = []

    def leq(self, cid, lhs, rhs, mask=None, index_map=None):
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
        bad = lhs - rhs > self.tol
        if mask is not None:
            bad &= np.broadcast_to(mask, bad.shape)
        self._emit(cid, lhs, rhs, bad, lhs - rhs, index_map)

    def eq(self, cid, lhs, rhs, mask=None, index_map=None):
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
        gap = np.abs(lhs - rhs)
        bad = gap > self.tol
        if mask is not None:
            bad &= np.broadcast_to(mask, bad.shape)
        self._emit(cid, lhs, rhs, bad, gap, index_map)

    def _emit(self, cid, lhs, rhs, bad, viol, index_map):
        for idx in np.argwhere(bad):
            idx = tuple(int(k) for k in idx)
            shown = index_map(idx) if index_map else idx
            self.reports.append(ConstraintReport(cid, shown, float(lhs[idx]), float(rhs[idx]),
                                                 float(viol[idx])))


def shipments(UV):
    """``[p, d]`` load leaving the depot (product drawn from plant stock)."""
    return UV[0, 1:].sum(axis=(0, 2))


def big_m_values(instance, options=DEFAULT_OPTIONS):
    """Big-M constants per constraint family (tightened unless paper-strict)."""
    p = instance.params
    if options.paper_strict:
        M = p.big_M
        return {"C5": np.full(instance.num_production_days, M), "arc": np.full(instance.num_vehicles, M),
                "C31": M, "C34": np.full((instance.num_families,) * 2 + instance.shape_of("JI"), M),
                "C41b": np.full(instance.num_vehicles, M)}
    span = p.W - p.dailysh  # [j, i]
    c34 = span[None, None, :, :] + p.Cht[:, :, :, None]
    return {"C5": np.maximum(1.0, p.Maxtime), "arc": p.MaxTC.copy(), "C31": float(instance.num_dcs),
            "C34": c34, "C41b": p.MaxTC.copy()}


def check_constraints(instance, solution, robust=None, options=DEFAULT_OPTIONS):
    """Return one :class:`ConstraintReport` per violated (constraint, index).

    An empty list means the solution is feasible. Raises
    :class:`~dairyplan.errors.DimensionError` on shape mismatch.
    """
    solution.check_dims(instance)
    ins, s, p = instance, solution, instance.params
    A, F, J, L, P, D, R, I = (ins.dims[k] for k in "AFJLPDRI")
    out = _Collector(options.tol)
    bigm = big_m_values(ins, options)
    strict = options.paper_strict

    fl = ins.family_lines            # [f, j]
    pl = ins.product_lines           # [p, j]
    fop = ins.family_of_product
    offdiag_f = ~np.eye(F, dtype=bool)
    offdiag_a = ~np.eye(A, dtype=bool)
    ship = shipments(s.UV)           # [p, d]
    ship_i = np.zeros((P, I))
    ship_i[:, :D] = ship

    # inventory balance
    prev = np.concatenate([np.zeros((P, 1)), s.II[:, :-1]], axis=1)
    rhs = prev + s.QB - ship_i
    out.eq("C2", s.II[:, :1], rhs[:, :1])
    out.eq("C3", s.II[:, 1:], rhs[:, 1:], index_map=lambda k: (k[0], k[1] + 1))

    # overtime and makespan
    out.leq("C4", p.Rtime + s.OverTime, p.Maxtime)
    out.leq("C5", s.CmaxFamily - p.Rtime, bigm["C5"] * s.OverTime)
    out.leq("C6", s.CmaxFamily, s.OverTime + p.Rtime)
    out.leq("C7", s.CT, s.CmaxFamily[:, None, :], mask=fl[:, :, None])
    out.leq("C8", s.PT, s.CmaxFamily[:, None, :], mask=fl[:, :, None])

    # recipe windows
    recipe_out = np.einsum("pji,pr->ri", s.Q, ins.product_recipe.astype(float))
    out.leq("C9", p.MuMin * s.G, recipe_out)
    out.leq("C10", recipe_out, p.MuMax * s.G)

    # sequencing and assignment logic
    Xm = s.X * (offdiag_f[:, :, None, None] & fl[:, None, :, None] & fl[None, :, :, None])
    arcs = Xm.sum(axis=(0, 1))
    assigned = (s.Y * fl[:, :, None]).sum(axis=0)
    out.eq("C11", arcs + s.V, assigned)
    out.leq("C12", s.Y, s.V[None], mask=fl[:, :, None])
    lot_cap = np.where(pl[:, :, None], p.MaxLots[:, None, None] * s.YB, 0.0)
    out.leq("C13", p.MinLots[:, None, None] * s.YB, s.Q, mask=pl[:, :, None])
    out.leq("C14", s.Q, lot_cap)
    out.leq("C15", s.YB, s.Y[fop], mask=fl[fop][:, :, None])
    yb_by_family = np.zeros((F, J, I))
    np.add.at(yb_by_family, fop, s.YB)
    out.leq("C16", s.Y, yb_by_family, mask=fl[:, :, None])
    out.leq("C17", Xm.sum(axis=1), s.Y, mask=fl[:, :, None])
    out.leq("C18", Xm.sum(axis=0), s.Y, mask=fl[:, :, None])
    out.eq("C19", s.QB, (s.Q * pl[:, :, None]).sum(axis=1))
    per_product = s.Q / p.Prate.T[:, :, None] + p.Setup.T[:, :, None] * s.YB
    pt_formula = np.zeros((F, J, I))
    np.add.at(pt_formula, fop, per_product)
    out.eq("C20", s.PT, pt_formula)

    # vehicle loads and tours
    out.leq("C21", p.MinTC[None, :, None] * s.ZV[0, 1:], s.UB[0, 1:],
            index_map=lambda k: (k[0] + 1, k[1], k[2]))
    out.leq("C22", s.UB[0, 1:], p.MaxTC[None, :, None] * s.ZV[0, 1:],
            index_map=lambda k: (k[0] + 1, k[1], k[2]))
    depart = s.ZV[0, 1:].sum(axis=0)
    ret = s.ZV[1:, 0].sum(axis=0)
    zvo = s.ZV * offdiag_a[:, :, None, None]
    visits = zvo.sum(axis=(0, 2))[1:]  # [b-1, d]
    if strict:
        out.eq("C23", depart, 1.0)
        out.eq("C25", visits, 1.0, index_map=lambda k: (k[0] + 1, k[1]))
        out.eq("C26", ret, 1.0)
    else:
        out.leq("C23", depart, 1.0)
        out.leq("C25", visits, 1.0, index_map=lambda k: (k[0] + 1, k[1]))
        out.leq("C26", ret, 1.0)
    out.eq("C24", zvo.sum(axis=1), zvo.sum(axis=0))
    uvo = s.UV * offdiag_a[:, :, None, None, None]
    out.eq("C27", s.UB, uvo.sum(axis=2), mask=offdiag_a[:, :, None, None])
    inflow = uvo.sum(axis=0)        # [b, p, l, d]
    outflow = uvo.sum(axis=1)       # [b, p, l, d]
    shift = lambda k: (k[0] + 1,) + k[1:]
    if options.flow_conservation:
        out.eq("C27b", inflow[1:], s.UD[1:] + outflow[1:], index_map=shift)
    out.leq("C28", s.UD[1:], inflow[1:], index_map=shift)
    arc_cap = bigm["arc"][None, None, :, None] * s.ZV
    depot_arc = np.zeros((A, A), dtype=bool)
    depot_arc[0, 1:] = depot_arc[1:, 0] = True
    cust_arc = offdiag_a.copy()
    cust_arc[0, :] = cust_arc[:, 0] = False
    out.leq("C29", s.UB, arc_cap, mask=depot_arc[:, :, None, None])
    out.leq("C30", s.UB, arc_cap, mask=cust_arc[:, :, None, None])
    M31 = bigm["C31"]
    o = s.mtz_order
    lhs31 = o[:, None, None, :] - o[None, :, None, :] + M31 * s.ZV
    out.leq("C31", lhs31, M31 - 1.0, mask=cust_arc[:, :, None, None])

    # family timing windows
    into = np.einsum("efji,efj->fji", Xm, p.Cht)
    out.leq("C32", ins.family_start_offset * s.Y + into, s.CT - s.PT, mask=fl[:, :, None])
    out.leq("C33", s.CT, (p.W - p.dailysh)[None] * s.Y, mask=fl[:, :, None])
    pair = offdiag_f[:, :, None, None] & fl[:, None, :, None] & fl[None, :, :, None]
    lhs34 = s.CT[:, None] + p.Cht[:, :, :, None]
    rhs34 = (s.CT - s.PT)[None, :] + bigm["C34"] * (1.0 - s.X)
    out.leq("C34", lhs34, rhs34, mask=pair)
    fr = ins.family_recipes.T  # [r, f]
    out.leq("C35", s.Y[None], s.G[:, None, None, :],
            mask=fr[:, :, None, None] & fl[None, :, :, None])
    out.leq("C36", s.CT, s.CmaxLine[None], mask=fl[:, :, None])

    # storage and plant capacity
    out.leq("C37", (s.II * p.Pallet[:, None]).sum(axis=0), p.StCapacity)
    out.leq("C38", s.QB.sum(axis=0), p.Pcapacity)

    # processing-time upper bounds
    outof = np.einsum("feji,fej->fji", Xm, p.Cht)
    room = p.W - p.dailysh - p.dailyop  # [j, i]
    min_pret = np.array([min((p.Pret[r] for r in ins.recipes_on_line[j]), default=0.0)
                         for j in range(J)])
    out.leq("C39", (s.PT * fl[:, :, None]).sum(axis=0) + outof.sum(axis=0),
            (room - min_pret[:, None]) * s.V)
    max_pret = np.array([max((p.Pret[r] for r in ins.recipes_of_family[f]), default=0.0)
                         for f in range(F)])
    out.leq("C40", s.PT + outof, (room[None] - max_pret[:, None, None]) * s.Y, mask=fl[:, :, None])

    # demand coverage (robust form when configured)
    need = np.transpose(p.Demand, (2, 0, 1)).astype(float)
    if robust is not None:
        need = need - robust.slack(ins)
    delivered = np.transpose(s.UD.sum(axis=2), (0, 2, 1))
    out.leq("C41", need[1:], delivered[1:] + s.UnmD[1:], index_map=shift)
    visited = zvo.sum(axis=0)       # [a, l, d]
    out.leq("C41b", s.UD[1:], bigm["C41b"][None, None, :, None] * visited[1:, None], index_map=shift)

    # cooling lag and freshness
    S = ins.cooling_lag_days
    cap42 = np.zeros((P, D))
    for d in range(D):
        if d - S >= 0:
            cap42[:, d] = np.where(ins.freshness_ok, s.II[:, d - S], 0.0)
    out.leq("C42", ship, cap42)

    _check_domain(out, ins, s)
    return out.reports


def _check_domain(out, ins, s):
    from .solution import BINARY_FIELDS, CONTINUOUS_FIELDS

    tol = out.tol
    for name in CONTINUOUS_FIELDS:
        arr = getattr(s, name)
        for idx in np.argwhere(arr < -tol):
            idx = tuple(int(k) for k in idx)
            out.reports.append(ConstraintReport("C43", (name,) + idx, float(-arr[idx]), 0.0,
                                                float(-arr[idx])))
    allowed = {
        "Y": ins.family_lines[:, :, None],
        "YB": ins.product_lines[:, :, None],
        "X": (~np.eye(ins.num_families, dtype=bool))[:, :, None, None]
        & ins.family_lines[:, None, :, None] & ins.family_lines[None, :, :, None],
        "ZV": (~np.eye(ins.num_dcs, dtype=bool))[:, :, None, None],
    }
    for name in BINARY_FIELDS:
        arr = getattr(s, name)
        not_binary = (arr != 0.0) & (arr != 1.0)
        outside = np.zeros(arr.shape, dtype=bool)
        if name in allowed:
            outside = (arr != 0.0) & ~np.broadcast_to(allowed[name], arr.shape)
        for idx in np.argwhere(not_binary | outside):
            idx = tuple(int(k) for k in idx)
            v = float(arr[idx])
            out.reports.append(ConstraintReport("C43", (name,) + idx, v, 0.0, abs(v)))


def is_feasible(instance, solution, robust=None, options=DEFAULT_OPTIONS):
    return not check_constraints(instance, solution, robust, options)

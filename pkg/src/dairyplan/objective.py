"""Total-cost objective and its per-term breakdown."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class ObjectiveBreakdown:
    variable_production: float = 0.0
    inventory_holding: float = 0.0
    recipe_preparation: float = 0.0
    changeover: float = 0.0
    overtime: float = 0.0
    unmet_demand: float = 0.0
    line_utilization: float = 0.0
    transportation: float = 0.0
    robust_penalty: float = 0.0
    total: float = 0.0

    @property
    def terms(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "total"}

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


_USED = {
    "Q": "PJI", "II": "PI", "G": "RI", "X": "FFJI", "OverTime": "I",
    "UnmD": "ADP", "V": "JI", "ZV": "AALD", "UB": "AALD",
}


def transport_cost(instance, ZV, UB):
    """Fixed truck cost per depot departure plus load-weighted arc cost.

    The load form ``sum UB * VTC`` equals the bilinear ``sum (UB * VTC) * ZV``
    whenever loads vanish on unused arcs, which the arc-linking constraints
    guarantee.
    """
    p = instance.params
    fixed = float(np.einsum("ald,l->", ZV[0, 1:], p.FCT))
    mask = 1.0 - np.eye(instance.num_dcs)
    variable = float(np.einsum("abld,abl,ab->", UB, p.VTC, mask))
    return fixed + variable


def evaluate_objective(instance, solution, robust=None):
    """Evaluate every cost term on ``solution``.

    ``robust`` adds ``gamma * sum (t^m + (phi - phi')/3)(1 - alpha)`` over all
    softened demand constraints; without it the penalty is zero.

    Raises :class:`DimensionError` if a used array has the wrong shape.
    """
    for name, axes in _USED.items():
        want = instance.shape_of(axes)
        got = np.shape(getattr(solution, name))
        if got != want:
            raise DimensionError(name, want, got)
    p = instance.params
    terms = dict(
        variable_production=float(np.einsum("pji,p->", solution.Q, p.VarCost)),
        inventory_holding=float(np.sum(solution.II * p.IC)),
        recipe_preparation=float(np.sum(solution.G * p.Bpc)),
        changeover=float(np.sum(solution.X * p.Chc)),
        overtime=float(np.dot(solution.OverTime, p.OvertCost)),
        unmet_demand=float(np.einsum("adp,ap->", solution.UnmD[1:], p.UnmdCost[1:])),
        line_utilization=float(np.sum(solution.V * (p.FCost + p.LineCost))),
        transportation=transport_cost(instance, solution.ZV, solution.UB),
        robust_penalty=robust.penalty(instance) if robust is not None else 0.0,
    )
    return ObjectiveBreakdown(**terms, total=float(sum(terms.values())))

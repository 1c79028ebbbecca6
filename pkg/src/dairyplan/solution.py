"""Plan solutions: the decision-variable record, tour handling and assembly.

``assemble_solution`` turns the primary decisions (lot sizes, family order
per line-day, vehicle tours, drops) into a complete variable record: stock,
arc loads, earliest-start timing, indicator binaries and MTZ positions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import BrokenTourError, DimensionError
from .instance import effective_demand
from .objective import evaluate_objective

SOLUTION_AXES = {
    "Q": "PJI",
    "QB": "PI",
    "II": "PI",
    "UnmD": "ADP",
    "UD": "APLD",
    "UV": "AAPLD",
    "UB": "AALD",
    "PT": "FJI",
    "CT": "FJI",
    "CmaxFamily": "FI",
    "CmaxLine": "JI",
    "OverTime": "I",
    "V": "JI",
    "G": "RI",
    "X": "FFJI",
    "Y": "FJI",
    "YB": "PJI",
    "ZV": "AALD",
    "mtz_order": "AD",
}
BINARY_FIELDS = ("V", "G", "X", "Y", "YB", "ZV")
CONTINUOUS_FIELDS = tuple(k for k in SOLUTION_AXES if k not in BINARY_FIELDS and k != "mtz_order")


@dataclass(frozen=True, eq=False)
class PlanSolution:
    """Values of every decision variable; ``Z`` is the recorded objective."""

    Q: np.ndarray
    QB: np.ndarray
    II: np.ndarray
    UnmD: np.ndarray
    UD: np.ndarray
    UV: np.ndarray
    UB: np.ndarray
    PT: np.ndarray
    CT: np.ndarray
    CmaxFamily: np.ndarray
    CmaxLine: np.ndarray
    OverTime: np.ndarray
    V: np.ndarray
    G: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    YB: np.ndarray
    ZV: np.ndarray
    mtz_order: np.ndarray
    Z: float = 0.0

    def __post_init__(self):
        for name in SOLUTION_AXES:
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "Z", float(self.Z))

    def check_dims(self, instance):
        for name, axes in SOLUTION_AXES.items():
            want = instance.shape_of(axes)
            got = getattr(self, name).shape
            if got != want:
                raise DimensionError(name, want, got)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {name: getattr(self, name).tolist() for name in SOLUTION_AXES}
        out["Z"] = self.Z
        return out

    @classmethod
    def from_dict(cls, data):
        missing = [k for k in SOLUTION_AXES if k not in data]
        if missing:
            raise KeyError(f"solution record lacks fields: {missing}")
        return cls(**{k: np.asarray(data[k], dtype=float) for k in SOLUTION_AXES},
                   Z=data.get("Z", 0.0))

    def __eq__(self, other):
        if not isinstance(other, PlanSolution):
            return NotImplemented
        return self.Z == other.Z and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in SOLUTION_AXES)

    __hash__ = None


def zero_solution(instance):
    """Every variable at zero (nothing produced, nothing shipped, no tours)."""
    return PlanSolution(**{k: np.zeros(instance.shape_of(ax)) for k, ax in SOLUTION_AXES.items()})


# --------------------------------------------------------------------------- tours

def routes_from_zv(instance, ZV, tol=0.5):
    """Follow successor arcs from the depot for every (vehicle, day).

    Returns ``routes[d][l]`` as a list of visited DCs (depot excluded, may be
    empty). Arcs not reached from the depot are reported as stranded through
    :class:`BrokenTourError`, as are tours that branch.
    """
    A, L, D = instance.num_dcs, instance.num_vehicles, instance.num_demand_days
    arcs = np.asarray(ZV) > tol
    routes = [[[] for _ in range(L)] for _ in range(D)]
    stranded = []
    for d in range(D):
        for l in range(L):
            used = arcs[:, :, l, d].copy()
            np.fill_diagonal(used, False)
            seen = set()
            out = np.flatnonzero(used[0])
            if len(out) > 1:
                stranded.extend((0, int(b), l, d) for b in out[1:])
                used[0, out[1:]] = False
            node = 0
            while True:
                succ = np.flatnonzero(used[node])
                if len(succ) == 0:
                    if node != 0:
                        stranded.append((node, None, l, d))
                    break
                nxt = int(succ[0])
                if len(succ) > 1:
                    stranded.extend((node, int(b), l, d) for b in succ[1:])
                used[node, :] = False
                if nxt == 0:
                    break
                if nxt in seen:
                    stranded.append((node, nxt, l, d))
                    break
                seen.add(nxt)
                routes[d][l].append(nxt)
                node = nxt
            rest = np.argwhere(used)
            stranded.extend((int(a), int(b), l, d) for a, b in rest)
    if stranded:
        raise BrokenTourError(stranded)
    return routes


def zv_from_routes(instance, routes):
    """Inverse of :func:`routes_from_zv`."""
    A, L, D = instance.num_dcs, instance.num_vehicles, instance.num_demand_days
    ZV = np.zeros((A, A, L, D))
    for d in range(D):
        for l in range(L):
            stops = list(routes[d][l])
            if not stops:
                continue
            path = [0] + stops + [0]
            for a, b in zip(path[:-1], path[1:]):
                ZV[a, b, l, d] = 1.0
    return ZV


# ----------------------------------------------------------------------- assembly

def line_schedule(instance, j, i, order, pt):
    """Earliest completion times for families run on line ``j`` day ``i`` in ``order``.

    ``pt`` maps family -> processing minutes. Returns ``{family: CT}``.
    """
    cht = instance.params.Cht
    offset = instance.family_start_offset
    ct = {}
    prev = None
    for f in order:
        if prev is None:
            start = offset[f, j, i]
        else:
            change = cht[prev, f, j]
            start = max(offset[f, j, i] + change, ct[prev] + change)
        ct[f] = start + pt[f]
        prev = f
    return ct


def family_processing_time(instance, Q, f, j, i):
    """Minutes needed on line ``j`` day ``i`` for the lots of family ``f`` in ``Q``."""
    p = instance.params
    total = 0.0
    for prod in instance.products_of_family[f]:
        q = Q[prod, j, i]
        if q > 0:
            total += q / p.Prate[j, prod] + p.Setup[j, prod]
    return total


def assemble_solution(instance, Q, routes, UD, sequences=None, robust=None):
    """Build a full :class:`PlanSolution` from primary decisions.

    Parameters
    ----------
    Q : array ``[p, j, i]`` of lot sizes.
    routes : ``routes[d][l]`` ordered DC lists (depot excluded).
    UD : array ``[a, p, l, d]`` of drops; drops at DCs a vehicle does not
        visit must be zero.
    sequences : optional ``sequences[j][i]`` family order per line-day;
        families without lots are skipped, families missing from the list are
        appended in index order.
    """
    ins = instance
    A, F, J, L, P, D, R, I = (ins.dims[k] for k in "AFJLPDRI")
    Q = np.where(np.asarray(Q, dtype=float) > 0, Q, 0.0)
    UD = np.where(np.asarray(UD, dtype=float) > 0, UD, 0.0)

    YB = (Q > 0).astype(float)
    Y = np.zeros((F, J, I))
    for f in range(F):
        prods = ins.products_of_family[f]
        if len(prods):
            Y[f] = YB[prods].max(axis=0)
    V = Y.max(axis=0) if F else np.zeros((J, I))
    G = np.zeros((R, I))
    for r in range(R):
        fams = ins.families_of_recipe[r]
        if len(fams):
            G[r] = Y[fams].max(axis=(0, 1))

    PT = np.zeros((F, J, I))
    CT = np.zeros((F, J, I))
    X = np.zeros((F, F, J, I))
    for j in range(J):
        for i in range(I):
            active = [f for f in range(F) if Y[f, j, i] > 0]
            if not active:
                continue
            order = []
            if sequences is not None:
                for f in sequences[j][i]:
                    if Y[f, j, i] > 0 and f not in order:
                        order.append(int(f))
            order += [f for f in active if f not in order]
            pt = {f: family_processing_time(ins, Q, f, j, i) for f in order}
            ct = line_schedule(ins, j, i, order, pt)
            for f in order:
                PT[f, j, i] = pt[f]
                CT[f, j, i] = ct[f]
            for f, e in zip(order[:-1], order[1:]):
                X[f, e, j, i] = 1.0
    CmaxFamily = CT.max(axis=1)
    CmaxLine = CT.max(axis=0)
    Rtime = ins.params.Rtime
    top = CmaxFamily.max(axis=0) if F else np.zeros(I)
    OverTime = np.maximum(0.0, top - Rtime)

    QB = Q.sum(axis=1)
    ship = np.zeros((P, I))
    ship[:, :D] = UD.sum(axis=(0, 2))
    II = np.cumsum(QB - ship, axis=1)

    UV = np.zeros((A, A, P, L, D))
    mtz = np.zeros((A, D))
    for d in range(D):
        for l in range(L):
            stops = list(routes[d][l])
            if not stops:
                continue
            path = [0] + stops + [0]
            onboard = UD[stops, :, l, d].sum(axis=0)
            for pos, (a, b) in enumerate(zip(path[:-1], path[1:])):
                UV[a, b, :, l, d] = onboard
                if b != 0:
                    onboard = onboard - UD[b, :, l, d]
                    mtz[b, d] = pos + 1
    UV = np.where(UV > 1e-12, UV, 0.0)
    UB = UV.sum(axis=2)
    ZV = zv_from_routes(ins, routes)

    need = effective_demand(ins, robust)
    delivered = np.transpose(UD.sum(axis=2), (0, 2, 1))  # [a, d, p]
    UnmD = np.maximum(0.0, need - delivered)
    UnmD[0] = 0.0

    sol = PlanSolution(Q=Q, QB=QB, II=II, UnmD=UnmD, UD=UD, UV=UV, UB=UB, PT=PT, CT=CT,
                       CmaxFamily=CmaxFamily, CmaxLine=CmaxLine, OverTime=OverTime,
                       V=V, G=G, X=X, Y=Y, YB=YB, ZV=ZV, mtz_order=mtz)
    return sol.replace(Z=evaluate_objective(ins, sol, robust).total)

"""Sparse linear model of the planning problem.

Columns exist only for admissible indices (a product's lines, a family's
lines, arcs ``a != b``). Row names are ``<constraint id>_<indices>`` and
column names ``<symbol>_<indices>``, both joined with underscores, e.g.
``Q_0_1_2`` for ``Q[p=0, j=1, i=2]`` and ``ZV_0_3_1_0`` for ``ZV[a=0, b=3,
l=1, d=0]``. The MTZ position of DC ``a`` on day ``d`` is ``o_a_d`` and the
transport auxiliary is ``ZVTC_a_b_l_d``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .constraints import big_m_values
from .instance import effective_demand
from .linearize import linearize_transport_term
from .options import DEFAULT_OPTIONS

INF = np.inf
CONST_NAME = "penalty_const"


class LinearModel:
    """Columns, rows and objective of the linearised MILP."""

    def __init__(self):
        self.names = []
        self.lb = []
        self.ub = []
        self.cost = []
        self.binary = []
        self.index = {}          # symbol -> {index tuple: column}
        self.row_names = []
        self.row_lo = []
        self.row_hi = []
        self._ri, self._ci, self._v = [], [], []
        self._matrix = None

    # ----------------------------------------------------------- building
    def add_var(self, symbol, idx, lb=0.0, ub=INF, cost=0.0, binary=False):
        col = len(self.names)
        self.names.append("_".join([symbol] + [str(k) for k in idx]))
        self.lb.append(lb)
        self.ub.append(1.0 if binary else ub)
        self.cost.append(cost)
        self.binary.append(binary)
        self.index.setdefault(symbol, {})[tuple(idx)] = col
        return col

    def col(self, symbol, *idx):
        return self.index[symbol].get(tuple(idx))

    def add_row(self, cid, idx, terms, sense, rhs):
        r = len(self.row_names)
        self.row_names.append("_".join([cid] + [str(k) for k in idx]))
        merged = {}
        for c, v in terms:
            if c is None or v == 0:
                continue
            merged[c] = merged.get(c, 0.0) + float(v)
        for c, v in merged.items():
            if v != 0.0:
                self._ri.append(r)
                self._ci.append(c)
                self._v.append(v)
        rhs = float(rhs)
        lo, hi = {"<=": (-INF, rhs), ">=": (rhs, INF), "=": (rhs, rhs)}[sense]
        self.row_lo.append(lo)
        self.row_hi.append(hi)
        self._matrix = None

    # ----------------------------------------------------------- queries
    @property
    def num_vars(self):
        return len(self.names)

    @property
    def num_binaries(self):
        return int(sum(self.binary))

    @property
    def num_constraints(self):
        return len(self.row_names)

    @property
    def matrix(self):
        if self._matrix is None:
            self._matrix = sp.csr_matrix((self._v, (self._ri, self._ci)),
                                         shape=(self.num_constraints, self.num_vars))
        return self._matrix

    def arrays(self):
        return (np.array(self.cost), np.array(self.lb), np.array(self.ub),
                np.array(self.row_lo), np.array(self.row_hi), np.array(self.binary))

    def row_violations(self, x, tol=1e-6):
        """``[(row name, activity, lo, hi)]`` for rows violated at ``x``."""
        act = self.matrix @ x
        lo, hi = np.array(self.row_lo), np.array(self.row_hi)
        bad = (act < lo - tol) | (act > hi + tol)
        return [(self.row_names[r], float(act[r]), float(lo[r]), float(hi[r])) for r in np.flatnonzero(bad)]

    def bound_violations(self, x, tol=1e-6):
        lb, ub = np.array(self.lb), np.array(self.ub)
        bad = (x < lb - tol) | (x > ub + tol)
        return [(self.names[c], float(x[c])) for c in np.flatnonzero(bad)]

    def objective(self, x):
        return float(np.dot(self.cost, x))

    def manifest(self):
        """Column name -> [symbol, index list]."""
        out = {}
        for symbol, cols in self.index.items():
            for idx, c in cols.items():
                out[self.names[c]] = [symbol, [int(k) for k in idx]]
        return out


# solution fields that map one-to-one onto model columns
_FIELD_OF_SYMBOL = {"Q": "Q", "QB": "QB", "II": "II", "UnmD": "UnmD", "UD": "UD", "UV": "UV",
                    "UB": "UB", "PT": "PT", "CT": "CT", "CmaxFamily": "CmaxFamily",
                    "CmaxLine": "CmaxLine", "OverTime": "OverTime", "V": "V", "G": "G",
                    "X": "X", "Y": "Y", "YB": "YB", "ZV": "ZV", "o": "mtz_order"}


def build_model(instance, robust=None, options=DEFAULT_OPTIONS):
    """Assemble the linearised model (objective plus rows C2..C44)."""
    ins, p = instance, instance.params
    A, F, J, L, P, D, R, I = (ins.dims[k] for k in "AFJLPDRI")
    m = LinearModel()
    bigm = big_m_values(ins, options)
    lin = linearize_transport_term(ins, M=p.big_M if options.paper_strict else None)
    fl, pl = ins.family_lines, ins.product_lines
    fop = ins.family_of_product
    arcs = [(a, b) for a in range(A) for b in range(A) if a != b]

    # ---------------------------------------------------------------- columns
    for prod in range(P):
        for j in range(J):
            if pl[prod, j]:
                for i in range(I):
                    m.add_var("Q", (prod, j, i), cost=p.VarCost[prod])
    for prod in range(P):
        for i in range(I):
            m.add_var("QB", (prod, i))
    for prod in range(P):
        for i in range(I):
            m.add_var("II", (prod, i), cost=p.IC[prod, i])
    for a in range(1, A):
        for d in range(D):
            for prod in range(P):
                m.add_var("UnmD", (a, d, prod), cost=p.UnmdCost[a, prod])
    for a in range(1, A):
        for prod in range(P):
            for l in range(L):
                for d in range(D):
                    m.add_var("UD", (a, prod, l, d))
    for a, b in arcs:
        for prod in range(P):
            for l in range(L):
                for d in range(D):
                    m.add_var("UV", (a, b, prod, l, d))
    for a, b in arcs:
        for l in range(L):
            for d in range(D):
                m.add_var("UB", (a, b, l, d), cost=p.VTC[a, b, l])
    for f in range(F):
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    m.add_var("PT", (f, j, i))
                    m.add_var("CT", (f, j, i))
    for f in range(F):
        for i in range(I):
            m.add_var("CmaxFamily", (f, i))
    for j in range(J):
        for i in range(I):
            m.add_var("CmaxLine", (j, i))
    for i in range(I):
        m.add_var("OverTime", (i,), cost=p.OvertCost[i])
    for j in range(J):
        for i in range(I):
            m.add_var("V", (j, i), cost=p.FCost[j, i] + p.LineCost[j, i], binary=True)
    for r in range(R):
        for i in range(I):
            m.add_var("G", (r, i), cost=p.Bpc[r, i], binary=True)
    for j in range(J):
        fams = ins.families_on_line[j]
        for f in fams:
            for e in fams:
                if f != e:
                    for i in range(I):
                        m.add_var("X", (f, e, j, i), cost=p.Chc[f, e, j, i], binary=True)
    for f in range(F):
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    m.add_var("Y", (f, j, i), binary=True)
    for prod in range(P):
        for j in range(J):
            if pl[prod, j]:
                for i in range(I):
                    m.add_var("YB", (prod, j, i), binary=True)
    for a, b in arcs:
        for l in range(L):
            for d in range(D):
                m.add_var("ZV", (a, b, l, d), cost=p.FCT[l] if a == 0 else 0.0, binary=True)
    for a, b in arcs:
        for l in range(L):
            for d in range(D):
                m.add_var("ZVTC", (a, b, l, d))
    for a in range(1, A):
        for d in range(D):
            m.add_var("o", (a, d), ub=float(A - 1))
    if robust is not None:
        m.add_var(CONST_NAME, (), lb=1.0, ub=1.0, cost=robust.penalty(ins))

    c = m.col

    def ship_terms(prod, d, sign=1.0):
        return [(c("UV", 0, a, prod, l, d), sign) for a in range(1, A) for l in range(L)]

    # ------------------------------------------------------------------- rows
    for prod in range(P):
        for i in range(I):
            terms = [(c("II", prod, i), 1.0), (c("QB", prod, i), -1.0)]
            if i > 0:
                terms.append((c("II", prod, i - 1), -1.0))
            if i < D:
                terms += ship_terms(prod, i)
            m.add_row("C2" if i == 0 else "C3", (prod, i), terms, "=", 0.0)
    for i in range(I):
        m.add_row("C4", (i,), [(c("OverTime", i), 1.0)], "<=", p.Maxtime[i] - p.Rtime[i])
    for f in range(F):
        for i in range(I):
            m.add_row("C5", (f, i), [(c("CmaxFamily", f, i), 1.0), (c("OverTime", i), -bigm["C5"][i])],
                      "<=", p.Rtime[i])
            m.add_row("C6", (f, i), [(c("CmaxFamily", f, i), 1.0), (c("OverTime", i), -1.0)],
                      "<=", p.Rtime[i])
    for f in range(F):
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    m.add_row("C7", (f, j, i), [(c("CT", f, j, i), 1.0), (c("CmaxFamily", f, i), -1.0)],
                              "<=", 0.0)
                    m.add_row("C8", (f, j, i), [(c("PT", f, j, i), 1.0), (c("CmaxFamily", f, i), -1.0)],
                              "<=", 0.0)
    for r in range(R):
        prods = np.flatnonzero(ins.product_recipe[:, r])
        for i in range(I):
            q = [(c("Q", prod, j, i), 1.0) for prod in prods for j in range(J) if pl[prod, j]]
            m.add_row("C9", (r, i), q + [(c("G", r, i), -p.MuMin[r, i])], ">=", 0.0)
            m.add_row("C10", (r, i), q + [(c("G", r, i), -p.MuMax[r, i])], "<=", 0.0)
    for j in range(J):
        fams = ins.families_on_line[j]
        for i in range(I):
            terms = [(c("X", f, e, j, i), 1.0) for f in fams for e in fams if f != e]
            terms += [(c("V", j, i), 1.0)] + [(c("Y", f, j, i), -1.0) for f in fams]
            m.add_row("C11", (j, i), terms, "=", 0.0)
    for f in range(F):
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    m.add_row("C12", (f, j, i), [(c("Y", f, j, i), 1.0), (c("V", j, i), -1.0)], "<=", 0.0)
    for prod in range(P):
        for j in range(J):
            if pl[prod, j]:
                for i in range(I):
                    q, yb = c("Q", prod, j, i), c("YB", prod, j, i)
                    m.add_row("C13", (prod, j, i), [(q, 1.0), (yb, -p.MinLots[prod])], ">=", 0.0)
                    m.add_row("C14", (prod, j, i), [(q, 1.0), (yb, -p.MaxLots[prod])], "<=", 0.0)
    for prod in range(P):
        for j in range(J):
            if pl[prod, j]:
                for i in range(I):
                    m.add_row("C15", (prod, j, i),
                              [(c("YB", prod, j, i), 1.0), (c("Y", fop[prod], j, i), -1.0)], "<=", 0.0)
    for f in range(F):
        prods = ins.products_of_family[f]
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    terms = [(c("Y", f, j, i), 1.0)] + [(c("YB", q, j, i), -1.0) for q in prods if pl[q, j]]
                    m.add_row("C16", (f, j, i), terms, "<=", 0.0)
    for j in range(J):
        fams = ins.families_on_line[j]
        for f in fams:
            for i in range(I):
                succ = [(c("X", f, e, j, i), 1.0) for e in fams if e != f]
                pred = [(c("X", e, f, j, i), 1.0) for e in fams if e != f]
                m.add_row("C17", (f, j, i), succ + [(c("Y", f, j, i), -1.0)], "<=", 0.0)
                m.add_row("C18", (f, j, i), pred + [(c("Y", f, j, i), -1.0)], "<=", 0.0)
    for prod in range(P):
        for i in range(I):
            terms = [(c("QB", prod, i), 1.0)] + [(c("Q", prod, j, i), -1.0) for j in range(J) if pl[prod, j]]
            m.add_row("C19", (prod, i), terms, "=", 0.0)
    for f in range(F):
        prods = ins.products_of_family[f]
        for j in range(J):
            if fl[f, j]:
                for i in range(I):
                    terms = [(c("PT", f, j, i), 1.0)]
                    for q in prods:
                        if pl[q, j]:
                            terms += [(c("Q", q, j, i), -1.0 / p.Prate[j, q]),
                                      (c("YB", q, j, i), -p.Setup[j, q])]
                    m.add_row("C20", (f, j, i), terms, "=", 0.0)
    for a in range(1, A):
        for l in range(L):
            for d in range(D):
                ub, zv = c("UB", 0, a, l, d), c("ZV", 0, a, l, d)
                m.add_row("C21", (a, l, d), [(ub, 1.0), (zv, -p.MinTC[l])], ">=", 0.0)
                m.add_row("C22", (a, l, d), [(ub, 1.0), (zv, -p.MaxTC[l])], "<=", 0.0)
    tour_sense = "=" if options.paper_strict else "<="
    for l in range(L):
        for d in range(D):
            m.add_row("C23", (l, d), [(c("ZV", 0, a, l, d), 1.0) for a in range(1, A)], tour_sense, 1.0)
    for a in range(A):
        for l in range(L):
            for d in range(D):
                terms = [(c("ZV", a, b, l, d), 1.0) for b in range(A) if b != a]
                terms += [(c("ZV", b, a, l, d), -1.0) for b in range(A) if b != a]
                m.add_row("C24", (a, l, d), terms, "=", 0.0)
    for b in range(1, A):
        for d in range(D):
            terms = [(c("ZV", a, b, l, d), 1.0) for a in range(A) if a != b for l in range(L)]
            m.add_row("C25", (b, d), terms, tour_sense, 1.0)
    for l in range(L):
        for d in range(D):
            m.add_row("C26", (l, d), [(c("ZV", a, 0, l, d), 1.0) for a in range(1, A)], tour_sense, 1.0)
    for a, b in arcs:
        for l in range(L):
            for d in range(D):
                terms = [(c("UB", a, b, l, d), 1.0)] + [(c("UV", a, b, q, l, d), -1.0) for q in range(P)]
                m.add_row("C27", (a, b, l, d), terms, "=", 0.0)
    for b in range(1, A):
        for prod in range(P):
            for l in range(L):
                for d in range(D):
                    arriving = [(c("UV", a, b, prod, l, d), 1.0) for a in range(A) if a != b]
                    leaving = [(c("UV", b, e, prod, l, d), -1.0) for e in range(A) if e != b]
                    drop = c("UD", b, prod, l, d)
                    if options.flow_conservation:
                        m.add_row("C27b", (b, prod, l, d), arriving + leaving + [(drop, -1.0)], "=", 0.0)
                    m.add_row("C28", (b, prod, l, d), [(drop, 1.0)] + [(k, -v) for k, v in arriving],
                              "<=", 0.0)
    for a, b in arcs:
        cid = "C29" if (a == 0 or b == 0) else "C30"
        for l in range(L):
            for d in range(D):
                m.add_row(cid, (a, b, l, d),
                          [(c("UB", a, b, l, d), 1.0), (c("ZV", a, b, l, d), -bigm["arc"][l])], "<=", 0.0)
    M31 = bigm["C31"]
    for a, b in arcs:
        if a == 0 or b == 0:
            continue
        for l in range(L):
            for d in range(D):
                m.add_row("C31", (a, b, l, d),
                          [(c("o", a, d), 1.0), (c("o", b, d), -1.0), (c("ZV", a, b, l, d), M31)],
                          "<=", M31 - 1.0)
    offset = ins.family_start_offset
    for j in range(J):
        fams = ins.families_on_line[j]
        for f in fams:
            for i in range(I):
                terms = [(c("CT", f, j, i), 1.0), (c("PT", f, j, i), -1.0),
                         (c("Y", f, j, i), -offset[f, j, i])]
                terms += [(c("X", e, f, j, i), -p.Cht[e, f, j]) for e in fams if e != f]
                m.add_row("C32", (f, j, i), terms, ">=", 0.0)
                m.add_row("C33", (f, j, i), [(c("CT", f, j, i), 1.0),
                                             (c("Y", f, j, i), -(p.W[j, i] - p.dailysh[j, i]))], "<=", 0.0)
    for j in range(J):
        fams = ins.families_on_line[j]
        for f in fams:
            for e in fams:
                if f == e:
                    continue
                for i in range(I):
                    M34 = bigm["C34"][f, e, j, i]
                    m.add_row("C34", (f, e, j, i),
                              [(c("CT", f, j, i), 1.0), (c("CT", e, j, i), -1.0), (c("PT", e, j, i), 1.0),
                               (c("X", f, e, j, i), M34)], "<=", M34 - p.Cht[f, e, j])
    for r in range(R):
        for f in ins.families_of_recipe[r]:
            for j in range(J):
                if fl[f, j]:
                    for i in range(I):
                        m.add_row("C35", (r, f, j, i), [(c("Y", f, j, i), 1.0), (c("G", r, i), -1.0)], "<=", 0.0)
    for j in range(J):
        for f in ins.families_on_line[j]:
            for i in range(I):
                m.add_row("C36", (f, j, i), [(c("CT", f, j, i), 1.0), (c("CmaxLine", j, i), -1.0)], "<=", 0.0)
    for i in range(I):
        m.add_row("C37", (i,), [(c("II", q, i), p.Pallet[q]) for q in range(P)], "<=", p.StCapacity)
        m.add_row("C38", (i,), [(c("QB", q, i), 1.0) for q in range(P)], "<=", p.Pcapacity[i])
    room = p.W - p.dailysh - p.dailyop
    for j in range(J):
        fams = ins.families_on_line[j]
        min_pret = min((p.Pret[r] for r in ins.recipes_on_line[j]), default=0.0)
        for i in range(I):
            terms = [(c("PT", f, j, i), 1.0) for f in fams]
            terms += [(c("X", f, e, j, i), p.Cht[f, e, j]) for f in fams for e in fams if f != e]
            terms.append((c("V", j, i), -(room[j, i] - min_pret)))
            m.add_row("C39", (j, i), terms, "<=", 0.0)
    for j in range(J):
        fams = ins.families_on_line[j]
        for f in fams:
            max_pret = max((p.Pret[r] for r in ins.recipes_of_family[f]), default=0.0)
            for i in range(I):
                terms = [(c("PT", f, j, i), 1.0)]
                terms += [(c("X", f, e, j, i), p.Cht[f, e, j]) for e in fams if e != f]
                terms.append((c("Y", f, j, i), -(room[j, i] - max_pret)))
                m.add_row("C40", (f, j, i), terms, "<=", 0.0)
    need = np.transpose(p.Demand, (2, 0, 1)).astype(float)
    if robust is not None:
        need = need - robust.slack(ins)
    for a in range(1, A):
        for d in range(D):
            for prod in range(P):
                terms = [(c("UD", a, prod, l, d), 1.0) for l in range(L)] + [(c("UnmD", a, d, prod), 1.0)]
                m.add_row("C41", (a, d, prod), terms, ">=", need[a, d, prod])
    for a in range(1, A):
        for prod in range(P):
            for l in range(L):
                for d in range(D):
                    terms = [(c("UD", a, prod, l, d), 1.0)]
                    terms += [(c("ZV", b, a, l, d), -bigm["C41b"][l]) for b in range(A) if b != a]
                    m.add_row("C41b", (a, prod, l, d), terms, "<=", 0.0)
    S = ins.cooling_lag_days
    for prod in range(P):
        for d in range(D):
            terms = ship_terms(prod, d)
            if d - S >= 0 and ins.freshness_ok[prod]:
                terms.append((c("II", prod, d - S), -1.0))
            m.add_row("C42", (prod, d), terms, "<=", 0.0)
    for a, b in arcs:
        for l in range(L):
            for d in range(D):
                m.add_row("C44", (a, b, l, d),
                          [(c("ZVTC", a, b, l, d), 1.0), (c("ZV", a, b, l, d), -lin.M)],
                          ">=", lin.VTC[a, b, l] - lin.M)
    m.linearization = lin
    m.instance = ins
    m.robust = robust
    m.options = options
    return m


def vector_from_solution(model, solution):
    """Column vector for ``solution``; ZVTC sits at its minimising value."""
    x = np.zeros(model.num_vars)
    for symbol, cols in model.index.items():
        if symbol == "ZVTC":
            arr = model.linearization.minimal_zvtc(solution.ZV)
        elif symbol == CONST_NAME:
            x[cols[()]] = 1.0
            continue
        else:
            arr = getattr(solution, _FIELD_OF_SYMBOL[symbol])
        for idx, c in cols.items():
            x[c] = arr[idx]
    return x


def solution_arrays_from_vector(model, x):
    """Dense solution arrays (keyed by solution field) read back from a column vector.

    Solver output carries round-off: binary columns are snapped to 0/1 and
    continuous values within 1e-9 of zero are cleared.
    """
    ins = model.instance
    from .solution import SOLUTION_AXES

    x = np.asarray(x, dtype=float).copy()
    binary = np.array(model.binary, dtype=bool)
    x[binary] = np.round(x[binary])
    x[~binary & (np.abs(x) < 1e-9)] = 0.0

    out = {k: np.zeros(ins.shape_of(ax)) for k, ax in SOLUTION_AXES.items()}
    for symbol, cols in model.index.items():
        field = _FIELD_OF_SYMBOL.get(symbol)
        if field is None:
            continue
        arr = out[field]
        for idx, c in cols.items():
            arr[idx] = x[c]
    return out

"""Chromosome decoders: produce-to-daily-demand (PBD) and produce-to-line-average (PBA).

Both simulate the horizon day by day. On day ``d`` the trucks first ship
cooled stock (made on day ``d - S`` or earlier) following their routing rows;
then the lines produce, in the slot order of the production string, what
day ``d + S`` will need. Every lot respects its size bounds, the recipe
window, line time, plant capacity and pallet storage. Tours that cost
more than the unmet demand they avoid are dropped, and short tours are
padded up to the truck minimum from spare stock or dropped. A final pass
trims production that no tour ever ships. Shortfalls always end up as
unmet demand, so every decoded plan is feasible.
"""

from __future__ import annotations

import zlib

import numpy as np

from ..instance import effective_demand
from ..solution import assemble_solution, line_schedule
from .chromosome import SLOTS_PER_DAY

TOL = 1e-9


def slot_families(instance, chromosome, j, i):
    """Distinct families of line ``j`` day ``i`` in slot order, restricted to the line."""
    genes = chromosome.production[j, SLOTS_PER_DAY * i:SLOTS_PER_DAY * (i + 1)]
    out = []
    for f in genes:
        f = int(f)
        if instance.family_lines[f, j] and f not in out:
            out.append(f)
    return out


def line_order_rng(chromosome, seed):
    """Generator behind PBD's line arrangement; fixed by run seed and chromosome."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(chromosome.key())])


class _State:
    """Mutable working plan for one decode."""

    def __init__(self, instance, robust):
        ins = self.ins = instance
        self.p = instance.params
        A, J, L, P, D, I = (ins.dims[k] for k in "AJLPDI")
        self.need = effective_demand(ins, robust)          # [a, d, p]
        self.Q = np.zeros((P, J, I))
        self.UD = np.zeros((A, P, L, D))
        self.ship = np.zeros((P, D))
        self.II = np.zeros((P, I))
        self.routes = [[[] for _ in range(L)] for _ in range(D)]
        self.orders = [[[] for _ in range(I)] for _ in range(J)]
        self.S = ins.cooling_lag_days
        room = self.p.W - self.p.dailysh - self.p.dailyop
        self.room = room
        self.min_pret = np.array([min((self.p.Pret[r] for r in ins.recipes_on_line[j]), default=0.0)
                                  for j in range(J)])
        self.max_pret = np.array([max((self.p.Pret[r] for r in ins.recipes_of_family[f]), default=0.0)
                                  for f in range(ins.num_families)])
        self.recipes_of_product = [np.flatnonzero(ins.product_recipe[q]) for q in range(P)]

    # ----------------------------------------------------------- line time
    def _pt(self, j, i, f, Q=None):
        Q = self.Q if Q is None else Q
        total = 0.0
        for q in self.ins.products_of_family[f]:
            if Q[q, j, i] > 0:
                total += Q[q, j, i] / self.p.Prate[j, q] + self.p.Setup[j, q]
        return total

    def line_ok(self, j, i, order, pt):
        p = self.p
        if not order:
            return True
        ct = line_schedule(self.ins, j, i, order, pt)
        if max(ct.values()) > self.ins.line_time_cap[j, i] + 1e-7:
            return False
        changes = [p.Cht[f, e, j] for f, e in zip(order[:-1], order[1:])]
        if sum(pt.values()) + sum(changes) > self.room[j, i] - self.min_pret[j] + 1e-7:
            return False
        for k, f in enumerate(order):
            nxt = changes[k] if k < len(changes) else 0.0
            if pt[f] + nxt > self.room[j, i] - self.max_pret[f] + 1e-7:
                return False
        return True

    def spare_minutes(self, j, i, order, pt, f):
        """Extra minutes family ``f`` may still take on line ``j`` day ``i``."""
        p = self.p
        ct = line_schedule(self.ins, j, i, order, pt)
        k = order.index(f)
        m1 = self.ins.line_time_cap[j, i] - max(ct[g] for g in order[k:])
        changes = [p.Cht[a, b, j] for a, b in zip(order[:-1], order[1:])]
        m2 = self.room[j, i] - self.min_pret[j] - (sum(pt.values()) + sum(changes))
        nxt = changes[k] if k < len(changes) else 0.0
        m3 = self.room[j, i] - self.max_pret[f] - (pt[f] + nxt)
        return max(0.0, min(m1, m2, m3) - 1e-7)

    # ----------------------------------------------------------- capacity
    def day_stock(self, i):
        """Stock at the end of day ``i`` given current lots and shipments."""
        prev = self.II[:, i - 1] if i > 0 else np.zeros(self.ins.num_products)
        ship = self.ship[:, i] if i < self.ins.num_demand_days else 0.0
        return prev + self.Q[:, :, i].sum(axis=1) - ship

    def lot_cap(self, q, j, i):
        """Largest extra kg of product ``q`` that plant, recipe and pallet limits allow today."""
        p = self.p
        caps = [p.MaxLots[q] - self.Q[q, j, i], p.Pcapacity[i] - self.Q[:, :, i].sum()]
        for r in self.recipes_of_product[q]:
            used = self.Q[self.ins.product_recipe[:, r], :, i].sum()
            caps.append(p.MuMax[r, i] - used)
        if p.Pallet[q] > 0:
            pallets = float(np.dot(p.Pallet, self.day_stock(i)))
            caps.append((p.StCapacity - pallets) / p.Pallet[q])
        return min(caps)

    # ----------------------------------------------------------- production
    def add_lot(self, q, j, i, want):
        """Schedule up to ``want`` kg of ``q`` (at least MinLots) on line ``j`` day ``i``."""
        p = self.p
        if want <= TOL or self.Q[q, j, i] > 0:
            return 0.0
        f = int(self.ins.family_of_product[q])
        order = self.orders[j][i]
        trial = order if f in order else order + [f]
        base = max(want, p.MinLots[q])
        if self.lot_cap(q, j, i) < p.MinLots[q] - 1e-7:
            return 0.0
        self.Q[q, j, i] = p.MinLots[q]
        pt = {g: self._pt(j, i, g) for g in trial}
        if not self.line_ok(j, i, trial, pt):
            self.Q[q, j, i] = 0.0
            return 0.0
        extra_time = self.spare_minutes(j, i, trial, pt, f) * p.Prate[j, q]
        self.Q[q, j, i] = 0.0
        cap = self.lot_cap(q, j, i)
        lot = max(p.MinLots[q], min(base, cap, p.MinLots[q] + extra_time))
        self.Q[q, j, i] = lot
        if f not in order:
            order.append(f)
        return lot

    def grow_lot(self, q, j, i, extra):
        p = self.p
        f = int(self.ins.family_of_product[q])
        order = self.orders[j][i]
        pt = {g: self._pt(j, i, g) for g in order}
        room = min(extra, self.lot_cap(q, j, i), self.spare_minutes(j, i, order, pt, f) * p.Prate[j, q])
        if room > TOL:
            self.Q[q, j, i] += room
            return room
        return 0.0

    def drop_lots(self, prods, i):
        for q in prods:
            self.Q[q, :, i] = 0.0
        self.refresh_orders(i)

    def refresh_orders(self, i):
        for j in range(self.ins.num_lines):
            self.orders[j][i] = [f for f in self.orders[j][i] if self._pt(j, i, f) > 0]

    def repair_recipes(self, i):
        """Lift recipe totals below their minimum, or cancel the recipe for the day."""
        p, ins = self.p, self.ins
        changed = True
        while changed:
            changed = False
            for r in range(ins.num_recipes):
                members = np.flatnonzero(ins.product_recipe[:, r])
                total = self.Q[members, :, i].sum()
                if total <= TOL or total >= p.MuMin[r, i] - 1e-7:
                    continue
                deficit = p.MuMin[r, i] - total
                for q in members:
                    for j in range(ins.num_lines):
                        if deficit > 1e-7 and self.Q[q, j, i] > 0:
                            deficit -= self.grow_lot(q, j, i, deficit)
                if deficit > 1e-7:
                    self.drop_lots(members, i)
                    changed = True

    def close_day(self, i):
        self.II[:, i] = self.day_stock(i)
        self.refresh_orders(i)

    # ----------------------------------------------------------- shipping
    def shippable(self, d):
        """Stock each product may ship on day ``d`` under the cooling lag and freshness gate."""
        ins = self.ins
        P = ins.num_products
        S = self.S
        if S == 0:
            prev = self.II[:, d - 1] if d > 0 else np.zeros(P)
            avail = (prev + self.Q[:, :, d].sum(axis=1)) / 2.0
        elif d - S < 0:
            return np.zeros(P)
        else:
            avail = np.minimum(self.II[:, d - S], self.II[:, d - 1])
        return np.where(ins.freshness_ok, np.maximum(avail, 0.0), 0.0)

    def tour_cost(self, l, stops, drops):
        """Fixed plus per-kg arc cost of visiting ``stops`` with ``drops[a] -> kg``."""
        if not stops:
            return 0.0
        vtc = self.p.VTC
        load = sum(drops[a] for a in stops)
        cost = self.p.FCT[l]
        path = [0] + list(stops) + [0]
        for a, b in zip(path[:-1], path[1:]):
            cost += vtc[a, b, l] * load
            if b != 0:
                load -= drops[b]
        return cost

    def stop_benefit(self, a, d, amounts):
        return float(np.dot(self.p.UnmdCost[a], np.minimum(amounts, self.need[a, d])))

    def prune_tour(self, l, d, stops, amounts):
        """Drop stops (then the tour) whose arc cost exceeds the unmet cost they avoid."""
        stops = list(stops)
        while stops:
            drops = {a: amounts[a].sum() for a in stops}
            full = self.tour_cost(l, stops, drops)
            worst, worst_gain = None, 0.0
            for a in stops:
                rest = [b for b in stops if b != a]
                marginal = full - self.tour_cost(l, rest, drops) if rest else full
                gain = self.stop_benefit(a, d, amounts[a]) - marginal
                if gain < worst_gain - TOL:
                    worst, worst_gain = a, gain
            if worst is None:
                break
            stops.remove(worst)
        return stops


def _allocate_tours(st, d, avail, order_of_dcs):
    """First-fit the DCs onto trucks along their routing rows.

    ``order_of_dcs`` maps DC -> kg per product it should receive (capped by
    stock in the order the trucks meet the DCs). Returns per-truck stop
    lists and per-DC amounts.
    """
    ins, p = st.ins, st.p
    P = ins.num_products
    remaining = avail.copy()
    served = set()
    tours = []
    amounts = {}
    for l in range(ins.num_vehicles):
        stops = []
        load = 0.0
        for a in st.routing[l]:
            a = int(a)
            if a in served:
                continue
            want = np.minimum(order_of_dcs[a], remaining)
            if want.sum() <= TOL:
                continue
            room = p.MaxTC[l] - load
            if room <= TOL:
                break
            if want.sum() > room:
                take = np.zeros(P)
                left = room
                for q in range(P):
                    take[q] = min(want[q], left)
                    left -= take[q]
                want = take
            stops.append(a)
            amounts[a] = want
            served.add(a)
            remaining -= want
            load += want.sum()
        kept = st.prune_tour(l, d, stops, amounts)
        for a in stops:
            if a not in kept:
                remaining += amounts.pop(a)
                served.discard(a)
        tours.append(kept)
    return tours, amounts, remaining


def _finish_tours(st, d, tours, amounts, remaining):
    """Pad tours up to the truck minimum or drop them; write drops into the plan."""
    p = st.p
    P = st.ins.num_products
    for l, stops in enumerate(tours):
        if not stops:
            continue
        load = sum(amounts[a].sum() for a in stops)
        deficit = p.MinTC[l] - load
        pad = np.zeros(P)
        if deficit > TOL:
            for q in range(P):
                take = min(remaining[q], deficit)
                pad[q] = take
                deficit -= take
        benefit = sum(st.stop_benefit(a, d, amounts[a]) for a in stops)
        first = stops[0]
        drops = {a: amounts[a].sum() for a in stops}
        drops[first] += pad.sum()
        cost = st.tour_cost(l, stops, drops)
        if deficit > 1e-7 or cost >= benefit - TOL:
            for a in stops:
                remaining += amounts.pop(a)
            tours[l] = []
            continue
        amounts[first] = amounts[first] + pad
        remaining -= pad
    for l, stops in enumerate(tours):
        st.routes[d][l] = list(stops)
        for a in stops:
            st.UD[a, :, l, d] = amounts[a]
    st.ship[:, d] = st.UD[:, :, :, d].sum(axis=(0, 2))


def _trim(st):
    """Cut lots whose output is never shipped, keeping bounds, windows and stock rows."""
    ins, p = st.ins, st.p
    P, J, I, D, S = (ins.num_products, ins.num_lines, ins.num_production_days,
                     ins.num_demand_days, st.S)
    for q in range(P):
        for i in reversed(range(I)):
            if st.Q[q, :, i].sum() <= TOL:
                continue
            ship = np.zeros(I)
            ship[:D] = st.ship[q]
            II = np.cumsum(st.Q[q].sum(axis=0) - ship)
            excess = II[i:].min()
            for d in range(D):
                if d - S >= i:
                    excess = min(excess, II[d - S] - st.ship[q, d])
            if excess <= 1e-7:
                continue
            for j in np.argsort(-st.Q[q, :, i], kind="stable"):
                lot = st.Q[q, j, i]
                if lot <= 0 or excess <= 1e-7:
                    continue
                slack_recipe = np.inf
                whole_ok = True
                for r in st.recipes_of_product[q]:
                    total = st.Q[ins.product_recipe[:, r], :, i].sum()
                    slack_recipe = min(slack_recipe, total - p.MuMin[r, i])
                    if 1e-7 < total - lot < p.MuMin[r, i] - 1e-7:
                        whole_ok = False
                if lot <= excess + 1e-7 and whole_ok:
                    st.Q[q, j, i] = 0.0
                    excess -= lot
                    continue
                cut = min(excess, lot - p.MinLots[q], slack_recipe)
                if cut > 1e-7:
                    st.Q[q, j, i] -= cut
                    excess -= cut
        st.II[q] = np.cumsum(st.Q[q].sum(axis=0) - np.pad(st.ship[q], (0, I - D)))
    for i in range(I):
        st.refresh_orders(i)


def _targets(st, i):
    """kg of each product day ``i`` should add so that day ``i + S`` can be served."""
    ins = st.ins
    P, D, S = ins.num_products, ins.num_demand_days, st.S
    out = np.zeros(P)
    d = i + S
    if d >= D:
        return out
    total = st.need[:, d, :].sum(axis=0)
    stock = st.II[:, i - 1] if i > 0 else np.zeros(P)
    if S >= 1 and i < D:
        stock = stock - st.ship[:, i]
    between = sum((st.need[:, k, :].sum(axis=0) for k in range(i + 1, d)), np.zeros(P))
    bank = np.maximum(0.0, stock - between)
    return np.where(ins.freshness_ok, np.maximum(0.0, total - bank), 0.0)


def serve_margin(st, i, d, amount):
    """Per product: unmet cost avoided minus estimated cost of serving ``amount`` kg on day ``d``.

    The lot is made on day ``i``. Compares the unmet cost avoided with variable cost, holding until
    shipment, holding of the lot-minimum surplus to the end of the horizon,
    and the cheapest per-kg depot departure.
    """
    ins, p = st.ins, st.p
    I = ins.num_production_days
    out = np.zeros(ins.num_products)
    for q in range(ins.num_products):
        if amount[q] <= TOL:
            continue
        dcs = [a for a in range(1, ins.num_dcs) if st.need[a, d, q] > TOL]
        benefit = sum(p.UnmdCost[a, q] * st.need[a, d, q] for a in dcs)
        share = amount[q] / max(TOL, sum(st.need[a, d, q] for a in dcs))
        benefit *= min(1.0, share)
        lot = max(amount[q], p.MinLots[q])
        hold_ship = p.IC[q, i:d].sum() if d > i else 0.0
        hold_rest = p.IC[q, i:].sum()
        per_kg = min(p.VTC[0, a, l] for a in dcs for l in range(ins.num_vehicles)) if dcs else 0.0
        cost = (p.VarCost[q] * lot + hold_ship * amount[q] + hold_rest * (lot - amount[q])
                + per_kg * amount[q])
        out[q] = benefit - cost
    return out


def _decode(instance, chromosome, robust, mode, seed, screen=True):
    st = _State(instance, robust)
    st.routing = chromosome.routing
    ins = instance
    J, I, D, P = ins.num_lines, ins.num_production_days, ins.num_demand_days, ins.num_products
    rng = line_order_rng(chromosome, seed) if mode == "PBD" else None
    transport_key = st.p.VTC[0, :, :].mean(axis=1)

    def ship_day(d):
        avail = st.shippable(d)
        if mode == "PBA":
            want = {}
            left = avail.copy()
            for a in range(1, ins.num_dcs):
                want[a] = np.zeros(P)
            for q in range(P):
                ranked = sorted(range(1, ins.num_dcs),
                                key=lambda a: (-st.p.UnmdCost[a, q], transport_key[a], a))
                for a in ranked:
                    take = min(st.need[a, d, q], left[q])
                    want[a][q] = take
                    left[q] -= take
        else:
            want = {a: st.need[a, d].copy() for a in range(1, ins.num_dcs)}
        tours, amounts, remaining = _allocate_tours(st, d, avail, want)
        _finish_tours(st, d, tours, amounts, remaining)

    for i in range(I):
        if st.S >= 1 and i < D:
            ship_day(i)
        target = _targets(st, i)
        margin = serve_margin(st, i, i + st.S, target) if i + st.S < D else np.zeros(P)
        if screen:
            target = np.where(margin > 0, target, 0.0)
        lines = list(rng.permutation(J)) if rng is not None else list(range(J))
        if mode == "PBA":
            share = np.array([target[q] / max(1, ins.product_lines[q].sum()) for q in range(P)])
        left = target.copy()
        for j in lines:
            for f in slot_families(ins, chromosome, j, i):
                # most profitable products first when line time or capacity runs short
                for q in sorted(ins.products_of_family[f], key=lambda q: (-margin[q], q)):
                    if not ins.product_lines[q, j]:
                        continue
                    if mode == "PBA":
                        st.add_lot(q, j, i, share[q])
                    else:
                        left[q] -= st.add_lot(q, j, i, left[q])
        st.repair_recipes(i)
        if st.S == 0 and i < D:
            ship_day(i)
        st.close_day(i)
    _trim(st)
    return assemble_solution(ins, st.Q, st.routes, st.UD, sequences=st.orders, robust=robust)


def decode_PBD(instance, chromosome, robust=None, seed=0, screen=True):
    """Produce each day what the day after the cooling lag needs, lines in seeded random order.

    ``screen=False`` skips the serve-or-leave-unmet test and targets all demand.
    """
    return _decode(instance, chromosome, robust, "PBD", seed, screen)


def decode_PBA(instance, chromosome, robust=None, seed=0, screen=True):
    """Split each product's daily need evenly over the lines able to make it."""
    return _decode(instance, chromosome, robust, "PBA", seed, screen)


DECODERS = {"PBD": decode_PBD, "PBA": decode_PBA}

"""Dual-string chromosome and its variation operators.

The production string has one row per line and three genes per production
day; gene ``3*i + k`` is the family run in slot ``k`` of day ``i``. The
routing string has one row per truck, each a permutation of the non-depot
DCs giving that truck's visiting preference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SLOTS_PER_DAY = 3


@dataclass(frozen=True, eq=False)
class Chromosome:
    production: np.ndarray   # [J, 3I] family ids
    routing: np.ndarray      # [L, A-1] DC ids 1..A-1

    def __post_init__(self):
        for name in ("production", "routing"):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def key(self):
        """Bytes identifying the chromosome (cache key, seed material)."""
        return self.production.tobytes() + b"|" + self.routing.tobytes()

    def __eq__(self, other):
        return (isinstance(other, Chromosome) and np.array_equal(self.production, other.production)
                and np.array_equal(self.routing, other.routing))

    def __hash__(self):
        return hash(self.key())

    def copy_with(self, production=None, routing=None):
        return Chromosome(self.production if production is None else production,
                          self.routing if routing is None else routing)


def invariant_violations(instance, chromosome):
    """List of human-readable invariant breaches (empty when valid)."""
    out = []
    J, L, A, F = instance.num_lines, instance.num_vehicles, instance.num_dcs, instance.num_families
    prod, rout = chromosome.production, chromosome.routing
    if prod.shape != (J, SLOTS_PER_DAY * instance.num_production_days):
        out.append(f"production string shape {prod.shape}")
    elif prod.size and (prod.min() < 0 or prod.max() >= F):
        out.append("production gene outside family range")
    if rout.shape != (L, A - 1):
        out.append(f"routing string shape {rout.shape}")
    else:
        target = np.arange(1, A)
        for l in range(L):
            if not np.array_equal(np.sort(rout[l]), target):
                out.append(f"routing row {l} is not a permutation")
    return out


# --------------------------------------------------------------- construction

def family_cost(instance, f, j):
    """Preparation plus processing cost used to rank families on a line.

    Preparation: the cheapest recipe of the family, averaged over days.
    Processing: variable cost of a minimum lot of each of the family's
    products that can run on the line.
    """
    p = instance.params
    recipes = instance.recipes_of_family[f]
    prep = float(np.mean(p.Bpc[recipes].min(axis=0))) if len(recipes) else 0.0
    prods = [q for q in instance.products_of_family[f] if instance.product_lines[q, j]]
    proc = float(sum(p.VarCost[q] * p.MinLots[q] for q in prods))
    return prep + proc


def ranked_families(instance, j):
    fams = [int(f) for f in instance.families_on_line[j]]
    return sorted(fams, key=lambda f: (family_cost(instance, f, j), f))


def seed_production(instance):
    """Each day starts with the line's cheapest family, then cycles upward."""
    J, I = instance.num_lines, instance.num_production_days
    out = np.zeros((J, SLOTS_PER_DAY * I), dtype=np.int64)
    for j in range(J):
        ranked = ranked_families(instance, j) or [0]
        day = [ranked[k % len(ranked)] for k in range(SLOTS_PER_DAY)]
        out[j] = np.tile(day, I)
    return out


def random_routing(instance, rng):
    A, L = instance.num_dcs, instance.num_vehicles
    return np.array([rng.permutation(np.arange(1, A)) for _ in range(L)], dtype=np.int64).reshape(L, A - 1)


def random_production(instance, rng):
    J, I = instance.num_lines, instance.num_production_days
    out = np.zeros((J, SLOTS_PER_DAY * I), dtype=np.int64)
    for j in range(J):
        fams = instance.families_on_line[j]
        pool = fams if len(fams) else np.arange(instance.num_families)
        out[j] = rng.choice(pool, size=SLOTS_PER_DAY * I)
    return out


def segment_swap(production, rng):
    """Swap a random segment between two random lines (two genes of one line if J = 1)."""
    out = np.array(production)
    J, n = out.shape
    if n == 0:
        return out
    if J >= 2:
        j1, j2 = rng.choice(J, size=2, replace=False)
        s = int(rng.integers(0, n))
        e = int(rng.integers(s + 1, n + 1))
        out[j1, s:e], out[j2, s:e] = production[j2, s:e].copy(), production[j1, s:e].copy()
    elif n >= 2:
        k1, k2 = rng.choice(n, size=2, replace=False)
        out[0, k1], out[0, k2] = out[0, k2], out[0, k1]
    return out


def init_population(instance, size, rng, heuristic=50):
    """Seed chromosome, ``heuristic - 1`` perturbations of it, then random ones."""
    seed = seed_production(instance)
    pop = [Chromosome(seed, random_routing(instance, rng))]
    while len(pop) < min(heuristic, size):
        pop.append(Chromosome(segment_swap(seed, rng), random_routing(instance, rng)))
    while len(pop) < size:
        pop.append(Chromosome(random_production(instance, rng), random_routing(instance, rng)))
    return pop


# --------------------------------------------------------------- operators

def _order_fill(head, donor):
    taken = set(int(x) for x in head)
    return np.concatenate([head, [x for x in donor if int(x) not in taken]]).astype(np.int64)


def crossover(a, b, stage, rng, points=None):
    """One-point crossover on the string(s) selected by ``stage``.

    ``stage`` is ``"both"``, ``"production"`` or ``"routing"``. Production rows
    share one cut point; routing rows share one cut and keep the head of
    one parent, then the remaining DCs in the other parent's order. A cut
    at 0 swaps the parents. ``points`` fixes ``(production cut, routing cut)``.
    """
    pa, pb = a.production, b.production
    ra, rb = a.routing, b.routing
    cut_p = cut_r = None
    if points is not None:
        cut_p, cut_r = points
    if stage in ("both", "production"):
        if cut_p is None:
            cut_p = int(rng.integers(0, pa.shape[1])) if pa.shape[1] else 0
        pa, pb = (np.concatenate([a.production[:, :cut_p], b.production[:, cut_p:]], axis=1),
                  np.concatenate([b.production[:, :cut_p], a.production[:, cut_p:]], axis=1))
    if stage in ("both", "routing"):
        if cut_r is None:
            cut_r = int(rng.integers(0, ra.shape[1])) if ra.shape[1] else 0
        ra = np.array([_order_fill(a.routing[l, :cut_r], b.routing[l]) for l in range(a.routing.shape[0])],
                      dtype=np.int64).reshape(a.routing.shape)
        rb = np.array([_order_fill(b.routing[l, :cut_r], a.routing[l]) for l in range(a.routing.shape[0])],
                      dtype=np.int64).reshape(a.routing.shape)
    return Chromosome(pa, ra), Chromosome(pb, rb)


MUTATION_RETRIES = 10


def mutate_production(production, rng, retries=MUTATION_RETRIES):
    """Swap two genes on two distinct lines; equal families trigger a redraw.

    With a single line both genes come from that line. Returns the input
    unchanged once ``retries`` draws all hit equal families.
    """
    out = np.array(production)
    J, n = out.shape
    if n == 0 or (J == 1 and n < 2):
        return out
    for _ in range(retries):
        if J >= 2:
            j1, j2 = rng.choice(J, size=2, replace=False)
            k1, k2 = int(rng.integers(0, n)), int(rng.integers(0, n))
        else:
            j1 = j2 = 0
            k1, k2 = (int(k) for k in rng.choice(n, size=2, replace=False))
        if out[j1, k1] != out[j2, k2]:
            out[j1, k1], out[j2, k2] = out[j2, k2], out[j1, k1]
            return out
    return out


def mutate_routing(routing, rng):
    out = np.array(routing)
    L, n = out.shape
    if n < 2 or L == 0:
        return out
    l = int(rng.integers(0, L))
    k1, k2 = (int(k) for k in rng.choice(n, size=2, replace=False))
    out[l, k1], out[l, k2] = out[l, k2], out[l, k1]
    return out


def mutate(chromosome, stage, rng):
    """Swap mutation on the string(s) selected by ``stage``."""
    prod, rout = chromosome.production, chromosome.routing
    if stage in ("both", "production"):
        prod = mutate_production(prod, rng)
    if stage in ("both", "routing"):
        rout = mutate_routing(rout, rng)
    return Chromosome(prod, rout)

"""Seeded random instances following the small/medium/large generation scheme."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .instance import PARAMETER_AXES, Parameters, PlanningInstance, default_cooling_lag

SET_RANGES = {
    "small": {"a": (3, 5), "f": (1, 2), "j": (2, 3), "l": (2, 3), "p": (2, 4), "d": (1, 3), "r": (1, 2), "i": (1, 3)},
    "medium": {"a": (6, 10), "f": (3, 4), "j": (4, 5), "l": (4, 5), "p": (5, 8), "d": (4, 7), "r": (3, 4), "i": (4, 7)},
    "large": {"a": (11, 15), "f": (5, 6), "j": (6, 8), "l": (6, 7), "p": (8, 12), "d": (8, 12), "r": (5, 6), "i": (8, 12)},
}

PARAM_RANGES = {
    "Pret": (3, 5), "Rtime": (420, 480), "Maxtime": (540, 720), "ShelfLife": (15, 45),
    "CrRate": (0, 1), "FCT": (100, 150), "VarCost": (0.09, 0.15), "OvertCost": (1, 3),
    "MaxTC": (1000, 2000), "MinTC": (300, 600), "Pcapacity": (500, 5000), "Pallet": (0.05, 0.08),
    "dailyop": (5, 10), "dailysh": (10, 20), "W": (480, 720), "Cht": (5, 10),
    "Setup": (30, 50), "Relt": (5, 15), "O": (5, 10), "Bpc": (5, 10),
    "IC": (0.05, 2), "VTC": (1, 10), "Chc": (5, 10), "LineCost": (10, 15),
    "MaxLots": (3000, 5000), "MinLots": (500, 2500), "Demand": (50, 100), "Prate": (5, 10),
    "UnmdCost": (5, 15), "FCost": (15, 30), "MuMax": (2000, 4000), "MuMin": (300, 2000),
    "CST": (420, 480), "QCTime": (240, 360), "StCapacity": (500, 5000),
}

DEFAULT_BIG_M = 1.0e4
_RESAMPLE_LIMIT = 1000


@dataclass(frozen=True)
class GenSpec:
    """What to generate: a size class, a seed and optional range overrides.

    ``overrides`` maps a set letter (``"a"``, ``"f"``, ...) or a parameter
    symbol to a replacement ``(low, high)`` range.
    """

    size_class: str = "small"
    seed: int = 0
    overrides: dict = field(default_factory=dict)


def _ranges(spec):
    if spec.size_class not in SET_RANGES:
        raise ValidationError(f"unknown size class {spec.size_class!r}", field="size_class")
    sets = dict(SET_RANGES[spec.size_class])
    params = dict(PARAM_RANGES)
    for key, rng in (spec.overrides or {}).items():
        lo, hi = rng
        if lo > hi:
            raise ValidationError(f"override for {key}: min {lo} > max {hi}", field=key)
        if key in sets:
            sets[key] = (int(lo), int(hi))
        elif key in params:
            params[key] = (float(lo), float(hi))
        else:
            raise ValidationError(f"unknown override key {key!r}", field=key)
    return sets, params


def _assign_nonempty(rng, n_items, n_groups, what):
    """Uniform group per item, repaired so every group gets at least one item."""
    if n_items < n_groups:
        raise ValidationError(f"cannot give each of {n_groups} {what} a member with {n_items} items",
                              field=what)
    groups = rng.integers(0, n_groups, size=n_items)
    for g in range(n_groups):
        if np.any(groups == g):
            continue
        counts = np.bincount(groups, minlength=n_groups)
        donors = np.flatnonzero(counts[groups] > 1)
        groups[donors[rng.integers(len(donors))]] = g
    return groups


def _subset_rows(rng, n_rows, n_cols, allowed=None):
    """Bernoulli(1/2) incidence rows within ``allowed``, each repaired to be nonempty."""
    mask = rng.random((n_rows, n_cols)) < 0.5
    if allowed is not None:
        mask &= allowed
    for r in range(n_rows):
        if not mask[r].any():
            choices = np.arange(n_cols) if allowed is None else np.flatnonzero(allowed[r])
            mask[r, choices[rng.integers(len(choices))]] = True
    return mask


def generate(spec):
    """Draw one instance. The result is a pure function of ``spec``."""
    sets, ranges = _ranges(spec)
    rng = np.random.default_rng(spec.seed)
    n = {k: int(rng.integers(lo, hi + 1)) for k, (lo, hi) in sets.items()}
    n["i"] = max(n["i"], n["d"])
    dims = {"A": n["a"], "F": n["f"], "J": n["j"], "L": n["l"], "P": n["p"],
            "D": n["d"], "R": n["r"], "I": n["i"]}

    family_of_product = _assign_nonempty(rng, n["p"], n["f"], "families")
    family_lines = _subset_rows(rng, n["f"], n["j"])
    product_lines = _subset_rows(rng, n["p"], n["j"], allowed=family_lines[family_of_product])
    recipe = rng.integers(0, n["r"], size=n["f"])
    family_recipes = np.zeros((n["f"], n["r"]), dtype=bool)
    family_recipes[np.arange(n["f"]), recipe] = True

    values = {}
    for name, axes in PARAMETER_AXES.items():
        if name == "big_M":
            continue
        shape = tuple(dims[a] for a in axes)
        lo, hi = ranges[name]
        values[name] = rng.uniform(lo, hi, size=shape) if shape else float(rng.uniform(lo, hi))
    values["Demand"][:, :, 0] = 0.0
    for lo_name, hi_name in (("MinTC", "MaxTC"), ("MinLots", "MaxLots"), ("MuMin", "MuMax"),
                             ("Rtime", "Maxtime")):
        lo_arr, hi_arr = values[lo_name], values[hi_name]
        for _ in range(_RESAMPLE_LIMIT):
            bad = lo_arr > hi_arr
            if not bad.any():
                break
            lo_arr[bad] = rng.uniform(*ranges[lo_name], size=int(bad.sum()))
            hi_arr[bad] = rng.uniform(*ranges[hi_name], size=int(bad.sum()))
        else:
            raise ValidationError(f"ranges for {lo_name}/{hi_name} cannot be ordered", field=lo_name)
    values["big_M"] = DEFAULT_BIG_M

    return PlanningInstance(
        num_dcs=n["a"], num_families=n["f"], num_lines=n["j"], num_vehicles=n["l"],
        num_products=n["p"], num_demand_days=n["d"], num_recipes=n["r"],
        num_production_days=n["i"],
        family_of_product=family_of_product, product_lines=product_lines,
        family_lines=family_lines, family_recipes=family_recipes,
        params=Parameters(**values),
        cooling_lag_days=default_cooling_lag(values["CST"], values["QCTime"]),
        name=f"{spec.size_class}-{spec.seed}",
    )


# Oracle-scale shrink of the small class: one line, one recipe, one truck,
# three DCs plus depot, up to two families, two products and two days (so that
# a one-day cooling lag still leaves a shipping day).
TINY_OVERRIDES = {"a": (4, 4), "f": (1, 2), "j": (1, 1), "l": (1, 1), "p": (2, 2), "d": (2, 2),
                  "r": (1, 1), "i": (2, 2)}


def tiny(seed, **extra):
    """Small-class instance shrunk to exact-oracle scale."""
    return generate(GenSpec("small", seed, {**TINY_OVERRIDES, **extra}))

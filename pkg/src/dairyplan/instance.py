"""Planning instance and robust-demand configuration.

Array axes follow the subscript order of the symbols they store, so
``Demand[d, p, a]`` is the demand of DC ``a`` for product ``p`` on day ``d``
and ``VTC[a, b, l]`` is the per-kg cost of arc ``a -> b`` for truck ``l``.
All indices are zero-based; node 0 is the depot (the plant).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError

# symbol -> axes. Letters: A nodes, F families, J lines, L vehicles,
# P products, D demand days, R recipes, I production days.
PARAMETER_AXES = {
    "Pret": "R",
    "Rtime": "I",
    "Maxtime": "I",
    "ShelfLife": "P",
    "CrRate": "P",
    "FCT": "L",
    "VarCost": "P",
    "OvertCost": "I",
    "MaxTC": "L",
    "MinTC": "L",
    "Pcapacity": "I",
    "Pallet": "P",
    "dailyop": "JI",
    "dailysh": "JI",
    "W": "JI",
    "Cht": "FFJ",
    "Chc": "FFJI",
    "Setup": "JP",
    "Relt": "RI",
    "O": "JI",
    "Bpc": "RI",
    "IC": "PI",
    "VTC": "AAL",
    "LineCost": "JI",
    "MaxLots": "P",
    "MinLots": "P",
    "Demand": "DPA",
    "Prate": "JP",
    "UnmdCost": "AP",
    "FCost": "JI",
    "MuMax": "RI",
    "MuMin": "RI",
    "CST": "",
    "QCTime": "",
    "StCapacity": "",
    "big_M": "",
}

# (lower, upper) pairs that must satisfy lower <= upper elementwise
ORDERED_PAIRS = [("MinTC", "MaxTC"), ("MinLots", "MaxLots"), ("MuMin", "MuMax"), ("Rtime", "Maxtime")]

MINUTES_PER_DAY = 1440.0


def default_cooling_lag(cst, qc_time):
    """Days between production and earliest shipment: cooling plus QC, rounded up."""
    return int(math.ceil((float(cst) + float(qc_time)) / MINUTES_PER_DAY))


def _freeze(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Parameters:
    """Numeric parameters, one attribute per symbol of the notation table."""

    Pret: np.ndarray
    Rtime: np.ndarray
    Maxtime: np.ndarray
    ShelfLife: np.ndarray
    CrRate: np.ndarray
    FCT: np.ndarray
    VarCost: np.ndarray
    OvertCost: np.ndarray
    MaxTC: np.ndarray
    MinTC: np.ndarray
    Pcapacity: np.ndarray
    Pallet: np.ndarray
    dailyop: np.ndarray
    dailysh: np.ndarray
    W: np.ndarray
    Cht: np.ndarray
    Chc: np.ndarray
    Setup: np.ndarray
    Relt: np.ndarray
    O: np.ndarray
    Bpc: np.ndarray
    IC: np.ndarray
    VTC: np.ndarray
    LineCost: np.ndarray
    MaxLots: np.ndarray
    MinLots: np.ndarray
    Demand: np.ndarray
    Prate: np.ndarray
    UnmdCost: np.ndarray
    FCost: np.ndarray
    MuMax: np.ndarray
    MuMin: np.ndarray
    CST: float
    QCTime: float
    StCapacity: float
    big_M: float

    def __post_init__(self):
        for name, axes in PARAMETER_AXES.items():
            value = getattr(self, name)
            if axes:
                object.__setattr__(self, name, _freeze(value))
            else:
                object.__setattr__(self, name, float(value))

    def as_dict(self):
        return {name: getattr(self, name) for name in PARAMETER_AXES}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, Parameters):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAMETER_AXES)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PlanningInstance:
    """All sets, subsets and parameters of one planning problem.

    Subsets are boolean incidence matrices:

    * ``product_lines[p, j]`` - line ``j`` can make product ``p`` (J_p)
    * ``family_lines[f, j]`` - line ``j`` can make family ``f`` (J_f, F_j)
    * ``family_recipes[f, r]`` - family ``f`` uses batch recipe ``r`` (R_f, F_r)

    ``num_dcs`` counts every node including the depot. Demand and production
    days share one calendar; a shipment on day ``d`` draws on stock from day
    ``d - cooling_lag_days``.
    """

    num_dcs: int
    num_families: int
    num_lines: int
    num_vehicles: int
    num_products: int
    num_demand_days: int
    num_recipes: int
    num_production_days: int
    family_of_product: np.ndarray
    product_lines: np.ndarray
    family_lines: np.ndarray
    family_recipes: np.ndarray
    params: Parameters
    cooling_lag_days: int = 1
    name: str = field(default="")

    def __post_init__(self):
        for n in ("num_dcs", "num_families", "num_lines", "num_vehicles", "num_products",
                  "num_demand_days", "num_recipes", "num_production_days", "cooling_lag_days"):
            object.__setattr__(self, n, int(getattr(self, n)))
        object.__setattr__(self, "family_of_product", _freeze(self.family_of_product, int))
        for n in ("product_lines", "family_lines", "family_recipes"):
            object.__setattr__(self, n, _freeze(getattr(self, n), bool))
        self.validate()

    # ------------------------------------------------------------------ dims
    @property
    def dims(self):
        return {
            "A": self.num_dcs, "F": self.num_families, "J": self.num_lines,
            "L": self.num_vehicles, "P": self.num_products, "D": self.num_demand_days,
            "R": self.num_recipes, "I": self.num_production_days,
        }

    def shape_of(self, axes):
        d = self.dims
        return tuple(d[a] for a in axes)

    @property
    def customers(self):
        return range(1, self.num_dcs)

    # -------------------------------------------------------------- subsets
    @cached_property
    def products_of_family(self):
        """P_f as a list of index arrays."""
        return [np.flatnonzero(self.family_of_product == f) for f in range(self.num_families)]

    @cached_property
    def families_on_line(self):
        """F_j as a list of index arrays."""
        return [np.flatnonzero(self.family_lines[:, j]) for j in range(self.num_lines)]

    @cached_property
    def families_of_recipe(self):
        """F_r as a list of index arrays."""
        return [np.flatnonzero(self.family_recipes[:, r]) for r in range(self.num_recipes)]

    @cached_property
    def recipes_of_family(self):
        """R_f as a list of index arrays."""
        return [np.flatnonzero(self.family_recipes[f]) for f in range(self.num_families)]

    @cached_property
    def recipes_on_line(self):
        """R_j: recipes of any family the line can make."""
        out = []
        for j in range(self.num_lines):
            mask = self.family_recipes[self.family_lines[:, j]].any(axis=0)
            out.append(np.flatnonzero(mask))
        return out

    @cached_property
    def product_recipe(self):
        """``[p, r]`` True when product ``p`` belongs to a family of recipe ``r`` (P_r)."""
        return self.family_recipes[self.family_of_product]

    # ------------------------------------------------------------- derived
    @cached_property
    def freshness_ok(self):
        """Per product: does a unit cooled for S days still meet the customer freshness floor?"""
        p = self.params
        return self.cooling_lag_days < (1.0 - p.CrRate) * p.ShelfLife

    @cached_property
    def family_start_offset(self):
        """``[f, j, i]`` earliest start of family ``f`` when scheduled on line ``j``.

        dailyop + max over recipes of (Pret + max(O, Relt)); the max over recipes
        covers the "for all r in R_f" quantifier of the start-time constraint.
        """
        p = self.params
        F, J, I = self.num_families, self.num_lines, self.num_production_days
        out = np.zeros((F, J, I))
        for f in range(F):
            rs = self.recipes_of_family[f]
            for j in range(J):
                for i in range(I):
                    extra = max((p.Pret[r] + max(p.O[j, i], p.Relt[r, i]) for r in rs), default=0.0)
                    out[f, j, i] = p.dailyop[j, i] + extra
        return out

    @cached_property
    def line_time_cap(self):
        """``[j, i]`` latest completion on line ``j``: shift end and day maximum."""
        p = self.params
        return np.minimum(p.W - p.dailysh, p.Maxtime[None, :])

    # ----------------------------------------------------------- mutation
    def replace(self, **changes):
        """Copy with top-level fields replaced; parameters via ``params=`` or ``with_params``."""
        return dataclasses.replace(self, **changes)

    def with_params(self, **changes):
        return self.replace(params=self.params.replace(**changes))

    def __eq__(self, other):
        if not isinstance(other, PlanningInstance):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    # ----------------------------------------------------------- validation
    def validate(self):
        d = self.dims
        for k, v in d.items():
            if v < 1:
                raise ValidationError(f"set size {k} must be >= 1, got {v}", field=k)
        if self.num_dcs < 2:
            raise ValidationError("num_dcs counts the depot and needs at least one DC", field="num_dcs")
        if self.num_demand_days > self.num_production_days:
            raise ValidationError(
                "num_demand_days must not exceed num_production_days (shared calendar)",
                field="num_demand_days")
        if self.cooling_lag_days < 0:
            raise ValidationError("cooling_lag_days must be >= 0", field="cooling_lag_days")

        def check_shape(name, arr, shape):
            if arr.shape != shape:
                raise ValidationError(f"{name}: expected shape {shape}, got {arr.shape}", field=name)

        check_shape("family_of_product", self.family_of_product, (d["P"],))
        check_shape("product_lines", self.product_lines, (d["P"], d["J"]))
        check_shape("family_lines", self.family_lines, (d["F"], d["J"]))
        check_shape("family_recipes", self.family_recipes, (d["F"], d["R"]))
        fop = self.family_of_product
        if fop.min() < 0 or fop.max() >= d["F"]:
            raise ValidationError("family_of_product out of range", field="family_of_product")
        for p in range(d["P"]):
            extra = self.product_lines[p] & ~self.family_lines[fop[p]]
            if extra.any():
                raise ValidationError(
                    f"product {p} may run on line(s) {np.flatnonzero(extra).tolist()} "
                    "that its family cannot use", field="product_lines")

        pr = self.params
        for name, axes in PARAMETER_AXES.items():
            value = getattr(pr, name)
            if axes:
                check_shape(name, value, self.shape_of(axes))
            arr = np.asarray(value)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must be finite", field=name)
            if np.any(arr < 0):
                raise ValidationError(f"{name} must be non-negative", field=name)
        if np.any(pr.CrRate > 1.0):
            raise ValidationError("CrRate must lie in [0, 1]", field="CrRate")
        if np.any(pr.Prate <= 0):
            raise ValidationError("Prate must be strictly positive", field="Prate")
        for lo, hi in ORDERED_PAIRS:
            if np.any(getattr(pr, lo) > getattr(pr, hi)):
                raise ValidationError(f"{lo} must not exceed {hi}", field=lo)
        if np.any(pr.Demand[:, :, 0] != 0):
            raise ValidationError("the depot (node 0) carries no demand", field="Demand")
        if pr.big_M <= 0:
            raise ValidationError("big_M must be positive", field="big_M")


@dataclass(frozen=True, eq=False)
class RobustConfig:
    """Triangular fuzzy violation allowance for the demand constraint.

    ``t_m``, ``phi`` (right spread) and ``phi_prime`` (left spread) are arrays
    indexed ``[a, d, p]`` (or scalars broadcast to that shape).
    """

    t_m: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    alpha: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}", field="alpha")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.gamma < 0:
            raise ValidationError("gamma must be non-negative", field="gamma")
        for n in ("t_m", "phi", "phi_prime"):
            arr = _freeze(getattr(self, n))
            if np.any(arr < 0):
                raise ValidationError(f"{n} must be non-negative", field=n)
            object.__setattr__(self, n, arr)

    @classmethod
    def from_demand(cls, instance, alpha, gamma=1.0, modal=1.0, right=0.1, left=0.05):
        """Spreads as fractions of nominal demand (the default fuzzy source)."""
        dem = np.transpose(instance.params.Demand, (2, 0, 1))  # [a, d, p]
        return cls(t_m=modal * dem, phi=right * dem, phi_prime=left * dem, alpha=alpha, gamma=gamma)

    def with_alpha(self, alpha):
        return dataclasses.replace(self, alpha=alpha)

    def slack(self, instance):
        """Defuzzified allowance ``(t^m + (phi - phi')/3)(1 - alpha)`` as an ``[a, d, p]`` array.

        The depot row is zero since it carries no demand constraint.
        """
        shape = instance.shape_of("ADP")
        centre = np.broadcast_to(self.t_m + (self.phi - self.phi_prime) / 3.0, shape)
        out = centre * (1.0 - self.alpha)
        out = np.array(out, dtype=float)
        out[0] = 0.0
        return out

    def penalty(self, instance):
        """gamma times the allowance summed over every softened (a, d, p)."""
        return self.gamma * float(self.slack(instance).sum())

    def __eq__(self, other):
        if not isinstance(other, RobustConfig):
            return NotImplemented
        return (self.alpha == other.alpha and self.gamma == other.gamma
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("t_m", "phi", "phi_prime")))

    __hash__ = None


def effective_demand(instance, robust=None):
    """``[a, d, p]`` demand the delivery constraint must cover (never negative)."""
    dem = np.transpose(instance.params.Demand, (2, 0, 1)).astype(float)
    if robust is not None:
        dem = dem - robust.slack(instance)
    return np.maximum(dem, 0.0)

"""Embedded dairy case study: ten DCs, six yogurts in two families, one week.

Demands, truck bounds, shift lengths, the line layout and the one-day
cooling period are the published values. Costs and rates were not
published; they are drawn once from the generation ranges with
``CASE_STUDY_SEED`` and frozen by that seed.
"""

from __future__ import annotations

import numpy as np

from .generator import DEFAULT_BIG_M, PARAM_RANGES
from .instance import Parameters, PlanningInstance

CASE_STUDY_SEED = 20240611

PRODUCTS = ["Cream yogurt", "Eggplant yogurt", "Low-fat yogurt", "Strawberry fruit yogurt",
            "Traditional strained yogurt", "Cucumber yogurt"]
FAMILIES = ["Set yogurt", "Stirred yogurt"]
FAMILY_OF_PRODUCT = [0, 1, 0, 1, 0, 1]
DC_NAMES = ["Plant"] + [f"Canbo {k}" for k in range(1, 11)]

# DEMAND[period][product] -> ten DCs (Canbo 1..10); product rows in PRODUCTS order
DEMAND = [
    [[65, 60, 65, 65, 60, 60, 55, 95, 90, 85],
     [50, 50, 50, 50, 50, 42, 55, 87, 85, 80],
     [60, 65, 60, 70, 65, 55, 60, 85, 90, 85],
     [65, 52, 50, 55, 50, 50, 52, 82, 85, 85],
     [60, 65, 75, 65, 55, 60, 50, 92, 85, 85],
     [50, 50, 65, 55, 52, 50, 55, 80, 80, 80]],
    [[65, 75, 65, 75, 60, 60, 55, 65, 60, 55],
     [60, 65, 60, 80, 55, 52, 55, 55, 60, 50],
     [85, 65, 70, 65, 65, 55, 60, 55, 70, 55],
     [65, 72, 65, 55, 50, 50, 52, 52, 55, 55],
     [75, 60, 75, 60, 55, 60, 50, 60, 55, 55],
     [55, 65, 50, 50, 52, 50, 55, 50, 50, 50]],
    [[85, 65, 75, 60, 60, 60, 55, 60, 65, 55],
     [75, 50, 50, 60, 55, 52, 55, 55, 55, 50],
     [65, 85, 80, 75, 65, 55, 60, 55, 60, 55],
     [60, 55, 50, 55, 50, 50, 52, 52, 55, 55],
     [82, 80, 75, 82, 55, 55, 50, 60, 55, 55],
     [50, 60, 50, 50, 52, 50, 55, 50, 50, 55]],
    [[80, 70, 65, 55, 50, 60, 55, 55, 70, 75],
     [65, 60, 65, 45, 45, 42, 40, 50, 55, 65],
     [70, 75, 60, 55, 50, 50, 40, 55, 90, 85],
     [55, 60, 72, 50, 45, 45, 50, 52, 80, 70],
     [85, 85, 60, 55, 55, 55, 55, 60, 85, 95],
     [62, 70, 55, 42, 40, 50, 52, 45, 60, 70]],
    [[60, 85, 85, 60, 60, 75, 65, 60, 60, 65],
     [85, 60, 85, 60, 70, 65, 55, 65, 50, 60],
     [75, 75, 60, 70, 75, 60, 65, 60, 60, 55],
     [85, 60, 60, 85, 85, 85, 70, 55, 65, 62],
     [60, 75, 60, 60, 85, 60, 60, 60, 75, 75],
     [80, 62, 85, 85, 62, 85, 55, 62, 55, 60]],
]

# per-DC totals printed under each period of the demand table; three cells differ
# from the sum of the product rows above them (see TOTAL_ROW_MISMATCHES)
PRINTED_TOTALS = [
    [350, 342, 365, 360, 332, 317, 327, 521, 515, 500],
    [405, 402, 385, 355, 337, 327, 327, 337, 350, 320],
    [412, 395, 380, 382, 337, 322, 327, 332, 340, 325],
    [417, 420, 377, 302, 285, 302, 292, 317, 440, 460],
    [445, 417, 435, 420, 437, 430, 370, 362, 375, 377],
]

# (period, Canbo) -> (sum of product rows, printed total)
TOTAL_ROW_MISMATCHES = {(2, 4): (385, 355), (3, 1): (417, 412), (5, 9): (365, 375)}


def printed_dc_totals():
    """``[d][a]`` per-DC totals as printed, depot column 0."""
    return [[0.0] + [float(x) for x in row] for row in PRINTED_TOTALS]


# ROUTES[period][vehicle] -> Canbo numbers in visiting order
ROUTES = [
    [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10]],
    [[1, 2, 3], [4, 5, 6, 7], [8, 9, 10]],
    [[1, 2, 3], [4, 5, 6, 7], [8, 9, 10]],
    [[1, 2, 3], [4, 5, 6, 7, 8], [9, 10]],
    [[1, 2, 3], [4, 5, 6], [7, 8, 9, 10]],
]
PRINTED_ROUTE_TOTALS = [
    [1417, 1497, 1015],
    [1172, 1346, 1007],
    [1187, 1368, 997],
    [1214, 1498, 900],
    [1297, 1287, 1484],
]

# production by line and period: {line: {product: [five periods]}}
PRODUCTION_BY_LINE = {
    0: {0: [430, 380, 375, 350, 355], 3: [321, 331, 324, 329, 317], 4: [360, 345, 355, 355, 350]},
    1: {1: [327, 322, 367, 342, 337], 2: [395, 365, 365, 370, 395], 5: [312, 307, 312, 321, 318]},
}

REGULAR_MINUTES = 480.0
MAX_MINUTES = 720.0
TRUCK_MIN, TRUCK_MAX = 500.0, 1500.0


def demand_array():
    """``Demand[d, p, a]`` with the depot column zero."""
    dem = np.zeros((5, 6, 11))
    dem[:, :, 1:] = np.array(DEMAND, dtype=float)
    return dem


def case_study():
    A, F, J, L, P, D, R, I = 11, 2, 2, 3, 6, 5, 2, 5
    rng = np.random.default_rng(CASE_STUDY_SEED)

    def u(name, shape=()):
        lo, hi = PARAM_RANGES[name]
        return rng.uniform(lo, hi, size=shape) if shape else float(rng.uniform(lo, hi))

    def per_line(name):
        # identical lines: one draw per day, copied to both lines
        return np.repeat(u(name, (1, I)), J, axis=0)

    cht_one = u("Cht", (F, F, 1))
    chc_one = u("Chc", (F, F, 1, I))
    params = Parameters(
        Pret=u("Pret", (R,)),
        Rtime=np.full(I, REGULAR_MINUTES),
        Maxtime=np.full(I, MAX_MINUTES),
        ShelfLife=u("ShelfLife", (P,)),
        CrRate=u("CrRate", (P,)),
        FCT=u("FCT", (L,)),
        VarCost=u("VarCost", (P,)),
        OvertCost=u("OvertCost", (I,)),
        MaxTC=np.full(L, TRUCK_MAX),
        MinTC=np.full(L, TRUCK_MIN),
        Pcapacity=u("Pcapacity", (I,)),
        Pallet=u("Pallet", (P,)),
        dailyop=per_line("dailyop"),
        dailysh=per_line("dailysh"),
        W=np.full((J, I), MAX_MINUTES),
        Cht=np.repeat(cht_one, J, axis=2),
        Chc=np.repeat(chc_one, J, axis=2),
        Setup=np.repeat(u("Setup", (1, P)), J, axis=0),
        Relt=u("Relt", (R, I)),
        O=per_line("O"),
        Bpc=u("Bpc", (R, I)),
        IC=u("IC", (P, I)),
        VTC=u("VTC", (A, A, L)),
        LineCost=per_line("LineCost"),
        MaxLots=u("MaxLots", (P,)),
        MinLots=u("MinLots", (P,)),
        Demand=demand_array(),
        Prate=np.repeat(u("Prate", (1, P)), J, axis=0),
        UnmdCost=u("UnmdCost", (A, P)),
        FCost=per_line("FCost"),
        MuMax=u("MuMax", (R, I)),
        MuMin=u("MuMin", (R, I)),
        CST=u("CST"),
        QCTime=u("QCTime"),
        StCapacity=u("StCapacity"),
        big_M=DEFAULT_BIG_M,
    )
    return PlanningInstance(
        num_dcs=A, num_families=F, num_lines=J, num_vehicles=L, num_products=P,
        num_demand_days=D, num_recipes=R, num_production_days=I,
        family_of_product=np.array(FAMILY_OF_PRODUCT),
        product_lines=np.ones((P, J), dtype=bool),
        family_lines=np.ones((F, J), dtype=bool),
        family_recipes=np.eye(F, R, dtype=bool),
        params=params,
        cooling_lag_days=1,
        name="case-study",
    )


def table_routes():
    """Published tours as ``routes[d][l]`` in node indices (Canbo k is node k)."""
    return [[list(r) for r in period] for period in ROUTES]


def published_routing_plan(instance=None):
    """Plan with the published tours, each DC receiving exactly its demand.

    Only the distribution side is populated (no production), so the
    inventory rows do not hold; it serves the tour-load checks.
    """
    from .solution import assemble_solution

    ins = case_study() if instance is None else instance
    dem = demand_array()
    routes = table_routes()
    UD = np.zeros((ins.num_dcs, ins.num_products, ins.num_vehicles, ins.num_demand_days))
    for d, per_day in enumerate(routes):
        for l, stops in enumerate(per_day):
            for a in stops:
                UD[a, :, l, d] = dem[d, :, a]
    return assemble_solution(ins, np.zeros((ins.num_products, ins.num_lines, ins.num_production_days)),
                             routes, UD)

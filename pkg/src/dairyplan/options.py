"""Modelling switches shared by the checker, the MILP builder and the solvers."""

from dataclasses import dataclass

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class ModelOptions:
    """How the constraint catalogue is read.

    paper_strict
        Tour constraints as equalities (every truck leaves and returns every
        day, every DC is visited every day) and the instance's single global
        ``big_M`` in every big-M row. Off: at most one tour per truck per day,
        at most one visit per DC per day, per-row tightened big-M.
    flow_conservation
        Per-product load conservation along each tour (arrivals at a DC equal
        its drop plus departures). Off: only the aggregate and drop bounds.
    tol
        Absolute tolerance of every comparison.
    """

    paper_strict: bool = False
    flow_conservation: bool = True
    tol: float = FEASIBILITY_TOL


DEFAULT_OPTIONS = ModelOptions()

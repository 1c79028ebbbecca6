"""Linear reformulations: the transport-cost auxiliary and the softened demand row."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class TransportLinearization:
    """Auxiliary ``ZVTC[a, b, l, d] >= VTC[a, b, l] + M (ZV[a, b, l, d] - 1)``, ``ZVTC >= 0``.

    Under minimisation ZVTC settles on its lower bound, which is ``VTC`` on a
    travelled arc and zero otherwise.
    """

    VTC: np.ndarray
    M: float

    def lower_bound(self, ZV):
        return self.VTC[:, :, :, None] + self.M * (np.asarray(ZV, float) - 1.0)

    def minimal_zvtc(self, ZV):
        """Value of ZVTC at the minimiser for a fixed arc selection."""
        return np.maximum(0.0, self.lower_bound(ZV))

    def holds(self, ZVTC, ZV, tol=1e-9):
        ZVTC = np.asarray(ZVTC, float)
        return bool(np.all(ZVTC >= self.lower_bound(ZV) - tol) and np.all(ZVTC >= -tol))

    def linear_transport(self, UB, ZV):
        """``sum UB * ZVTC`` over a != b with ZVTC at its minimiser."""
        A = self.VTC.shape[0]
        mask = (1.0 - np.eye(A))[:, :, None, None]
        return float(np.sum(np.asarray(UB, float) * self.minimal_zvtc(ZV) * mask))

    def bilinear_transport(self, UB, ZV):
        """``sum (UB * VTC) * ZV`` over a != b."""
        A = self.VTC.shape[0]
        mask = (1.0 - np.eye(A))[:, :, None, None]
        return float(np.sum(np.asarray(UB, float) * self.VTC[:, :, :, None] * np.asarray(ZV, float) * mask))

    def rows(self, num_days):
        """Row triples ``(a, b, l, d, rhs)`` for ``ZVTC - M ZV >= VTC - M``."""
        A, _, L = self.VTC.shape
        for a in range(A):
            for b in range(A):
                if a == b:
                    continue
                for l in range(L):
                    for d in range(num_days):
                        yield a, b, l, d, float(self.VTC[a, b, l] - self.M)


def linearize_transport_term(instance, M=None):
    """Build the transport-cost linearisation for ``instance``.

    ``M`` defaults to the largest arc cost, the smallest value for which the
    unused-arc case relaxes to zero. Raises :class:`ValidationError` for a
    non-positive ``M`` or one that fails to dominate every arc cost.
    """
    VTC = np.asarray(instance.params.VTC, float)
    if M is None:
        M = max(float(VTC.max()), 1.0)
    M = float(M)
    if M <= 0:
        raise ValidationError(f"big-M must be positive, got {M}", field="M")
    if M < VTC.max():
        raise ValidationError(f"big-M {M} is below the largest arc cost {VTC.max()}", field="M")
    return TransportLinearization(VTC=VTC, M=M)


@dataclass(frozen=True, eq=False)
class RobustDemand:
    """Softened coverage rows: ``delivered + UnmD >= Demand - slack``."""

    slack: np.ndarray        # [a, d, p]
    required: np.ndarray     # [a, d, p], Demand - slack (may go negative)
    penalty: float

    def holds(self, delivered, unmet, tol=1e-6):
        return bool(np.all(self.required[1:] <= delivered[1:] + unmet[1:] + tol))


def robustify_demand_constraint(instance, robust):
    """Apply the fuzzy violation allowance to the demand-coverage rows."""
    if not 0.0 <= robust.alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {robust.alpha}", field="alpha")
    slack = robust.slack(instance)
    demand = np.transpose(instance.params.Demand, (2, 0, 1)).astype(float)
    return RobustDemand(slack=slack, required=demand - slack, penalty=robust.penalty(instance))

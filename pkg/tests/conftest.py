import numpy as np
import pytest

from dairyplan.generator import GenSpec, generate, tiny

ECON = {"VTC": (0.1, 1.0), "IC": (0.05, 0.2)}


def build(A=2, F=1, J=1, L=1, P=1, D=1, R=1, I=1, seed=0, **params):
    """Instance with exact set sizes; keyword arrays or scalars override parameters.

    Scalars are broadcast to the parameter's shape. Subsets are fully
    permissive (every family and product on every line, family f on recipe
    f mod R) unless the caller replaces them afterwards.
    """
    sizes = {"a": A, "f": F, "j": J, "l": L, "p": P, "d": D, "r": R, "i": I}
    inst = generate(GenSpec("small", seed, {k: (v, v) for k, v in sizes.items()}))
    fop = np.arange(P) % F
    fr = np.zeros((F, R), dtype=bool)
    fr[np.arange(F), np.arange(F) % R] = True
    inst = inst.replace(family_of_product=fop, product_lines=np.ones((P, J), bool),
                        family_lines=np.ones((F, J), bool), family_recipes=fr)
    changes = {}
    for name, value in params.items():
        current = getattr(inst.params, name)
        changes[name] = np.full(np.shape(current), float(value)) if np.isscalar(value) else value
    return inst.with_params(**changes) if changes else inst


def econ_tiny(seed):
    """Tiny instance with cheaper transport and holding, so serving demand can pay."""
    return tiny(seed, **ECON)


def zero_costs():
    """Parameter overrides that zero every cost coefficient."""
    return dict(VarCost=0.0, IC=0.0, Bpc=0.0, Chc=0.0, OvertCost=0.0, UnmdCost=0.0,
                LineCost=0.0, FCost=0.0, FCT=0.0, VTC=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

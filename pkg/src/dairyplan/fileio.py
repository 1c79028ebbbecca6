"""Instance files: one JSON document per instance, schema version 1.

Layout::

    {
      "schema_version": 1,
      "name": "...",
      "sets": {"num_dcs": 3, ...},
      "subsets": {"family_of_product": [...], "product_lines": [[...]],
                  "family_lines": [[...]], "family_recipes": [[...]]},
      "axes": {"Demand": "DPA", ...},
      "parameters": {"Demand": [[[...]]], "CST": 450.0, ...},
      "robust": null | {"t_m": ..., "phi": ..., "phi_prime": ..., "alpha": a, "gamma": g},
      "cooling_lag_days": 1
    }

Array parameters are nested lists whose nesting follows the axis letters in
``axes`` (A nodes incl. depot 0, F families, J lines, L trucks, P products,
D demand days, R recipes, I production days). Units: kg, minutes, days.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .instance import PARAMETER_AXES, Parameters, PlanningInstance, RobustConfig

SCHEMA_VERSION = 1
SET_KEYS = ("num_dcs", "num_families", "num_lines", "num_vehicles", "num_products",
            "num_demand_days", "num_recipes", "num_production_days")
SUBSET_KEYS = ("family_of_product", "product_lines", "family_lines", "family_recipes")


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def instance_to_dict(instance, robust=None):
    return {
        "schema_version": SCHEMA_VERSION,
        "name": instance.name,
        "sets": {k: getattr(instance, k) for k in SET_KEYS},
        "subsets": {
            "family_of_product": instance.family_of_product.tolist(),
            **{k: instance.__dict__[k].astype(int).tolist() for k in SUBSET_KEYS[1:]},
        },
        "axes": {k: v for k, v in PARAMETER_AXES.items()},
        "parameters": {k: _plain(v) for k, v in instance.params.as_dict().items()},
        "robust": None if robust is None else {
            "t_m": robust.t_m.tolist(), "phi": robust.phi.tolist(),
            "phi_prime": robust.phi_prime.tolist(), "alpha": robust.alpha, "gamma": robust.gamma,
        },
        "cooling_lag_days": instance.cooling_lag_days,
    }


def dumps_instance(instance, robust=None):
    return json.dumps(instance_to_dict(instance, robust), indent=1, sort_keys=False) + "\n"


def write_instance(instance, path, robust=None):
    Path(path).write_text(dumps_instance(instance, robust))


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ValidationError(f"missing key {key!r} in {where}", field=key, locus=f"{where}.{key}")
    return mapping[key]


def instance_from_dict(data, source="<dict>"):
    """Parse a decoded document; errors carry a dotted locus into the file."""
    version = _require(data, "schema_version", "document")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{source}: unsupported schema_version {version}",
                              field="schema_version", locus="schema_version")
    sets = _require(data, "sets", "document")
    subsets = _require(data, "subsets", "document")
    params = _require(data, "parameters", "document")
    kwargs = {k: _require(sets, k, "sets") for k in SET_KEYS}
    for k in SUBSET_KEYS:
        kwargs[k] = np.asarray(_require(subsets, k, "subsets"))
    values = {}
    for name, axes in PARAMETER_AXES.items():
        raw = _require(params, name, "parameters")
        try:
            values[name] = np.asarray(raw, dtype=float) if axes else float(raw)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{source}: parameters.{name} is not numeric ({exc})",
                                  field=name, locus=f"parameters.{name}") from None
    try:
        instance = PlanningInstance(
            **kwargs, params=Parameters(**values),
            cooling_lag_days=_require(data, "cooling_lag_days", "document"),
            name=data.get("name", ""))
    except ValidationError as exc:
        where = f"parameters.{exc.field}" if exc.field in PARAMETER_AXES else str(exc.field)
        raise ValidationError(f"{source}: {exc} (at {where})", field=exc.field, locus=where) from None
    robust = None
    rob = data.get("robust")
    if rob is not None:
        robust = RobustConfig(**{k: _require(rob, k, "robust")
                                 for k in ("t_m", "phi", "phi_prime", "alpha", "gamma")})
    return instance, robust


def loads_instance(text, source="<string>"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}", locus=f"line {exc.lineno}") from None
    return instance_from_dict(data, source)


def read_instance(path, with_robust=False):
    """Load an instance file; ``with_robust=True`` also returns its robust block."""
    instance, robust = loads_instance(Path(path).read_text(), source=str(path))
    return (instance, robust) if with_robust else instance

"""Write the linearised model as an LP file or a fixed-field MPS file.

LP files use the model's readable names (``Q_0_1_2``, ``ZV_0_3_1_0``). Fixed
MPS allows eight characters per name, so columns become ``X0000001`` ... and
rows ``R0000001`` ... . Either way a JSON sidecar ``<file>.map.json`` maps
every column name to its symbol and index tuple (and, for MPS, short names
back to long ones). Columns are written in lexicographic name order, rows
in model order, so repeated exports are byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .milp import build_model
from .options import DEFAULT_OPTIONS

FORMATS = ("lp", "mps")
_LINE = 250


def _num(v):
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fixnum(v):
    """Number in at most 12 characters (fixed MPS field width)."""
    s = _num(v)
    if len(s) <= 12:
        return s
    for digits in range(12, 0, -1):
        s = f"{float(v):.{digits}g}"
        if len(s) <= 12:
            return s
    raise ValidationError(f"value {v} does not fit a fixed MPS field")


def _column_order(model):
    return sorted(range(model.num_vars), key=lambda c: model.names[c])


def _rows_by_index(model):
    """Per row: list of (column, coefficient) sorted by column name."""
    A = model.matrix.tocsr()
    out = []
    for r in range(model.num_constraints):
        start, end = A.indptr[r], A.indptr[r + 1]
        terms = sorted(zip(A.indices[start:end], A.data[start:end]), key=lambda t: model.names[t[0]])
        out.append(terms)
    return out


def _sense(lo, hi):
    if lo == hi:
        return "=", lo
    if math.isinf(lo):
        return "<=", hi
    if math.isinf(hi):
        return ">=", lo
    raise ValidationError("ranged rows are not produced by the model builder")


def _wrap(prefix, pieces):
    lines, cur = [], prefix
    for piece in pieces:
        if len(cur) + len(piece) + 1 > _LINE:
            lines.append(cur)
            cur = "  "
        cur += " " + piece
    lines.append(cur)
    return lines


def _linear(terms, names):
    pieces = []
    for k, (c, v) in enumerate(terms):
        sign = "-" if v < 0 else "+"
        mag = _num(abs(v))
        body = names[c] if mag == "1" else f"{mag} {names[c]}"
        pieces.append(("- " if sign == "-" else "") + body if k == 0 else f"{sign} {body}")
    return pieces


def lp_text(model):
    names = model.names
    order = _column_order(model)
    cost = model.cost
    lines = [f"\\ {model.instance.name or 'instance'}: {model.num_vars} columns, "
             f"{model.num_constraints} rows", "Minimize"]
    obj = [(c, cost[c]) for c in order if cost[c] != 0]
    lines += _wrap(" obj:", _linear(obj, names) or ["0 " + names[order[0]]])
    lines.append("Subject To")
    for r, terms in enumerate(_rows_by_index(model)):
        sense, rhs = _sense(model.row_lo[r], model.row_hi[r])
        body = _linear(terms, names) or ["0 " + names[order[0]]]
        lines += _wrap(f" {model.row_names[r]}:", body + [sense, _num(rhs)])
    lines.append("Bounds")
    for c in order:
        if model.binary[c]:
            continue
        lb, ub = model.lb[c], model.ub[c]
        if lb == ub:
            lines.append(f" {names[c]} = {_num(lb)}")
        elif math.isinf(ub):
            lines.append(f" {names[c]} >= {_num(lb)}")
        else:
            lines.append(f" {_num(lb)} <= {names[c]} <= {_num(ub)}")
    lines.append("Binaries")
    bins = [names[c] for c in order if model.binary[c]]
    for k in range(0, len(bins), 8):
        lines.append(" " + " ".join(bins[k:k + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _mps_line(f1="", f2="", f3="", f4="", f5="", f6=""):
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def mps_names(model):
    order = _column_order(model)
    width = max(7, len(str(max(model.num_vars, model.num_constraints))))
    if width > 7:
        raise ValidationError("model too large for eight-character fixed MPS names")
    cols = {c: f"X{k + 1:07d}" for k, c in enumerate(order)}
    rows = [f"R{r + 1:07d}" for r in range(model.num_constraints)]
    return order, cols, rows


def mps_text(model):
    order, cols, rows = mps_names(model)
    A = model.matrix.tocsc()
    lines = [f"NAME          {(model.instance.name or 'MODEL')[:8]}", "ROWS", _mps_line("N", "COST")]
    senses = []
    for r in range(model.num_constraints):
        sense, rhs = _sense(model.row_lo[r], model.row_hi[r])
        senses.append(rhs)
        lines.append(_mps_line({"=": "E", "<=": "L", ">=": "G"}[sense], rows[r]))
    lines.append("COLUMNS")
    in_int = False
    for c in order:
        if model.binary[c] and not in_int:
            lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTORG'", ""))
            in_int = True
        elif not model.binary[c] and in_int:
            lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTEND'", ""))
            in_int = False
        entries = []
        if model.cost[c] != 0:
            entries.append(("COST", model.cost[c]))
        start, end = A.indptr[c], A.indptr[c + 1]
        for r, v in sorted(zip(A.indices[start:end], A.data[start:end])):
            entries.append((rows[r], v))
        if not entries:
            entries.append(("COST", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            f5, f6 = (pair[1][0], _fixnum(pair[1][1])) if len(pair) > 1 else ("", "")
            lines.append(_mps_line("", cols[c], pair[0][0], _fixnum(pair[0][1]), f5, f6))
    if in_int:
        lines.append(_mps_line("", "MARKER", "'MARKER'", "", "'INTEND'", ""))
    lines.append("RHS")
    for r, rhs in enumerate(senses):
        if rhs != 0:
            lines.append(_mps_line("", "RHS", rows[r], _fixnum(rhs)))
    lines.append("BOUNDS")
    for c in order:
        lb, ub = model.lb[c], model.ub[c]
        if lb == ub:
            lines.append(_mps_line("FX", "BND", cols[c], _fixnum(lb)))
            continue
        if lb != 0:
            lines.append(_mps_line("LO", "BND", cols[c], _fixnum(lb)))
        if not math.isinf(ub):
            lines.append(_mps_line("UP", "BND", cols[c], _fixnum(ub)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def manifest(model, fmt):
    data = {
        "format": fmt,
        "instance": model.instance.name,
        "num_vars": model.num_vars,
        "num_binaries": model.num_binaries,
        "num_constraints": model.num_constraints,
        "objective_sense": "minimize",
        "variables": {name: entry for name, entry in sorted(model.manifest().items())},
    }
    if fmt == "mps":
        order, cols, rows = mps_names(model)
        data["mps_columns"] = {cols[c]: model.names[c] for c in order}
        data["mps_rows"] = {rows[r]: model.row_names[r] for r in range(model.num_constraints)}
    return data


def manifest_path(path):
    path = Path(path)
    return path.with_name(path.name + ".map.json")


def export_lp(instance, robust=None, path="model.lp", fmt=None, options=DEFAULT_OPTIONS):
    """Write the model and its name map; return the model's size.

    ``fmt`` is ``"lp"`` or ``"mps"``; by default it follows the file suffix.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "lp").lower()
    if fmt not in FORMATS:
        raise ValidationError(f"unknown export format {fmt!r}", field="format")
    instance.validate()
    model = build_model(instance, robust, options)
    text = lp_text(model) if fmt == "lp" else mps_text(model)
    try:
        path.write_text(text)
        manifest_path(path).write_text(json.dumps(manifest(model, fmt), indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}", field="path") from None
    return {"num_vars": model.num_vars, "num_binaries": model.num_binaries,
            "num_constraints": model.num_constraints}


def solution_vector_from_names(model, values):
    """Column vector from a ``{name: value}`` mapping (missing names read as 0)."""
    x = np.zeros(model.num_vars)
    index = {n: c for c, n in enumerate(model.names)}
    for name, v in values.items():
        if name in index:
            x[index[name]] = v
    return x

"""Writer for the CPLEX-style LP text format."""

from __future__ import annotations

import math

from .model import BINARY, LinearModel

_TERMS_PER_LINE = 6


def _num(x: float) -> str:
    # shortest text that round-trips to the same double
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _linear(terms, filler: str | None) -> list[str]:
    pieces = []
    for k, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1.0 else f"{_num(mag)} {name}"
        if k == 0:
            pieces.append(body if sign == "+" else f"- {body}")
        else:
            pieces.append(f"{sign} {body}")
    if not pieces and filler is not None:
        # empty expressions are written as an explicit zero term
        pieces.append(f"0 {filler}")
    return pieces


def _wrap(head: str, pieces: list[str], tail: str = "") -> list[str]:
    lines = []
    for k in range(0, len(pieces), _TERMS_PER_LINE):
        chunk = " ".join(pieces[k : k + _TERMS_PER_LINE])
        lines.append((head if k == 0 else "   ") + chunk)
    if not lines:
        lines.append(head.rstrip())
    if tail:
        lines[-1] += tail
    return lines


def export_model(model: LinearModel, fmt: str = "lp-text") -> str:
    """Render ``model`` as an LP document, rows and columns in declaration order."""
    if fmt != "lp-text":
        raise ValueError(f"unsupported format {fmt!r}")
    filler = model.variables[0].name if model.variables else None
    out = [f"\\ {model.name}", "Maximize" if model.sense == "maximize" else "Minimize"]
    out += _wrap(" obj: ", _linear(model.objective, filler))
    out.append("Subject To")
    for c in model.constraints:
        out += _wrap(f" {c.name}: ", _linear(c.terms, filler), f" {c.sense} {_num(c.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY and v.lb == 0.0 and v.ub == 1.0:
            continue
        if v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {v.name} free")
        elif v.lb == v.ub:
            out.append(f" {v.name} = {_num(v.lb)}")
        else:
            lo = "-inf" if v.lb == -math.inf else _num(v.lb)
            hi = "+inf" if v.ub == math.inf else _num(v.ub)
            out.append(f" {lo} <= {v.name} <= {hi}")
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        out.append("Binary")
        for k in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[k : k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"

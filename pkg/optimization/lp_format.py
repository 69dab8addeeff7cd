"""
LP Format Writer
Plain-text dump of a LinearModel for cross-checking against external solvers
"""

import io
import logging
import math
from pathlib import Path
from typing import Dict, List, TextIO, Union

from optimization.linear_model import LinearModel, ObjectiveSense, Sense

logger = logging.getLogger(__name__)

_SENSE_TEXT = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _terms_text(terms: Dict[int, float], names: List[str]) -> str:
    parts = []
    for k in sorted(terms):
        v = terms[k]
        if v == 0.0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(v))} {names[k]}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def format_lp(model: LinearModel) -> str:
    """Render the model in the grammar of docs/LP_FORMAT.md"""
    names = [v.name.replace(" ", "_") for v in model.variables]
    out = io.StringIO()
    out.write(f"\\ model {model.name}\n")
    if model.objective_sense == ObjectiveSense.MAXIMIZE:
        out.write("Maximize\n")
    else:
        out.write("Minimize\n")
    obj = model.objective
    body = _terms_text(obj.terms, names) if obj is not None else "0"
    if obj is not None and obj.constant != 0.0:
        body += f" + {_fmt(obj.constant)}" if obj.constant > 0 else f" - {_fmt(-obj.constant)}"
    out.write(f" obj: {body}\n")

    out.write("Subject To\n")
    for i, con in enumerate(model.constraints):
        label = con.name or f"c{i}"
        out.write(f" {label}: {_terms_text(con.terms, names)} {_SENSE_TEXT[con.sense]} {_fmt(con.rhs)}\n")

    out.write("Bounds\n")
    for v, name in zip(model.variables, names):
        if v.binary:
            continue
        lo = "-inf" if math.isinf(v.lb) else _fmt(v.lb)
        hi = "+inf" if math.isinf(v.ub) else _fmt(v.ub)
        if math.isinf(v.lb) and math.isinf(v.ub):
            out.write(f" {name} free\n")
        else:
            out.write(f" {lo} <= {name} <= {hi}\n")

    binaries = [names[j] for j in model.binaries]
    if binaries:
        out.write("Binaries\n")
        out.write(" " + " ".join(binaries) + "\n")

    if model.indicators:
        out.write("Indicators\n")
        for i, ind in enumerate(model.indicators):
            for j, con in enumerate(ind.constraints):
                label = f"{ind.name or f'ind{i}'}_{j}"
                out.write(
                    f" {label}: {names[ind.binary]} = {ind.trigger} -> "
                    f"{_terms_text(con.terms, names)} {_SENSE_TEXT[con.sense]} {_fmt(con.rhs)}\n"
                )

    if model.sos2_sets:
        out.write("SOS\n")
        for i, sos in enumerate(model.sos2_sets):
            members = " ".join(f"{names[k]}:{pos + 1}" for pos, k in enumerate(sos.members))
            out.write(f" {sos.name or f's{i}'}: S2:: {members}\n")
    out.write("End\n")
    return out.getvalue()


def write_lp(model: LinearModel, target: Union[str, Path, TextIO]) -> None:
    """
    Write the model to a path or an open text stream

    Args:
        model: LinearModel to dump
        target: file path or writable text stream
    """
    text = format_lp(model)
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
        logger.debug(f"LP dump of {model.name} written to {target}")
    else:
        target.write(text)

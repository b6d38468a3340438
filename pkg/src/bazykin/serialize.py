"""Serialization of analysis products to JSON and CSV.

JSON documents are type-tagged so that parse() can rebuild the exact
dataclass; the top level always carries a "schema": 1 version field and
keys appear in a fixed order (schema, type, then dataclass field order).
CSV output is one flat table per product with a header row, RFC-4180
quoting and 17 significant digits, meant for plotting tools.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json

import numpy as np

from .model import DimensionalParams, Params, State
from .equilibria import (
    BlowupEigenvalues,
    CaseLabel,
    Equilibrium,
    EquilibriumKind,
    OriginSector,
    SigmaSet,
    StabilityClass,
    StabilityTag,
)
from .bifurcation import BifDiagram, BTData, HopfData, L1Sign, SotomayorCheck
from .dynamics import (
    BasinRaster,
    GridSpec,
    LimitCycle,
    OmegaLabel,
    SaddleManifolds,
    Trajectory,
)

SCHEMA_VERSION = 1


@dataclasses.dataclass(frozen=True)
class Table:
    """A plain column-labelled table, the lingua franca for sweep output."""
    columns: tuple
    rows: list


_DATACLASSES = (
    Table,
    DimensionalParams, Params, State,
    SigmaSet, Equilibrium, StabilityClass, BlowupEigenvalues,
    SotomayorCheck, HopfData, BTData, BifDiagram,
    Trajectory, LimitCycle, GridSpec, BasinRaster, SaddleManifolds,
)
_ENUMS = (CaseLabel, EquilibriumKind, StabilityTag, OriginSector,
          L1Sign, OmegaLabel)

_BY_NAME = {cls.__name__: cls for cls in _DATACLASSES + _ENUMS}


def _num(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def to_jsonable(obj):
    """Convert a product (or nested part of one) to plain JSON data."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _num(obj)
    if isinstance(obj, enum.Enum):
        return {"type": type(obj).__name__, "name": obj.name}
    if isinstance(obj, BifDiagram):
        d = {"type": "BifDiagram"}
        for name in ("sn_curve", "hopf_curve", "hom_curve", "bt_point"):
            d[name] = to_jsonable(getattr(obj, name))
        d["region_labels"] = [
            {"Q": _num(q), "C": _num(c), "label": lab}
            for (q, c), lab in obj.region_labels.items()
        ]
        return d
    if isinstance(obj, BasinRaster):
        return {
            "type": "BasinRaster",
            "grid": to_jsonable(obj.grid),
            "labels": [[lab.name for lab in row] for row in obj.labels],
            "undetermined": int(obj.undetermined),
        }
    if dataclasses.is_dataclass(obj):
        d = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            d[f.name] = to_jsonable(getattr(obj, f.name))
        return d
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _parse_value(data):
    if isinstance(data, dict):
        if "type" in data:
            return _parse_obj(data)
        return {k: _parse_value(v) for k, v in data.items()}
    if isinstance(data, list):
        return [_parse_value(x) for x in data]
    return data


def _pair_list(data):
    return [tuple(p) for p in data]


def _state_tuple_seq(data):
    # sequences of (t, State) samples
    return tuple((t, _parse_obj(s)) for t, s in data)


# field-level fixups for containers whose shape json cannot express
_FIELD_PARSERS = {
    ("Trajectory", "samples"): _state_tuple_seq,
    ("LimitCycle", "points"): lambda v: tuple(_parse_obj(s) for s in v),
    ("BlowupEigenvalues", "o_xy"): tuple,
    ("BlowupEigenvalues", "o_XY"): tuple,
    ("BlowupEigenvalues", "i_x"): lambda v: None if v is None else tuple(v),
    ("BlowupEigenvalues", "i_y"): lambda v: None if v is None else tuple(v),
    ("BifDiagram", "sn_curve"): _pair_list,
    ("BifDiagram", "hopf_curve"): _pair_list,
    ("BifDiagram", "hom_curve"): _pair_list,
    ("BifDiagram", "bt_point"): tuple,
    ("BifDiagram", "region_labels"): lambda v: {
        (r["Q"], r["C"]): r["label"] for r in v
    },
    ("Table", "columns"): tuple,
    ("Table", "rows"): _pair_list,
}


def _parse_obj(data):
    name = data.get("type")
    cls = _BY_NAME.get(name)
    if cls is None:
        raise ValueError(f"unknown type tag {name!r}")
    if issubclass(cls, enum.Enum):
        return cls[data["name"]]
    if cls is BasinRaster:
        grid = _parse_obj(data["grid"])
        labels = np.empty((grid.n_u, grid.n_v), dtype=object)
        for i, row in enumerate(data["labels"]):
            for j, lab in enumerate(row):
                labels[i, j] = OmegaLabel[lab]
        return BasinRaster(grid=grid, labels=labels,
                           undetermined=data["undetermined"])
    kwargs = {}
    for f in dataclasses.fields(cls):
        raw = data[f.name]
        fixup = _FIELD_PARSERS.get((name, f.name))
        kwargs[f.name] = fixup(raw) if fixup else _parse_value(raw)
    return cls(**kwargs)


def serialize(product, fmt: str = "json") -> bytes:
    """Render a product as bytes in the requested format."""
    if fmt == "json":
        body = to_jsonable(product)
        if isinstance(body, dict) and "type" in body:
            doc = {"schema": SCHEMA_VERSION}
            doc.update(body)
        elif isinstance(body, dict):
            doc = {"schema": SCHEMA_VERSION, "type": "mapping",
                   "entries": body}
        else:
            doc = {"schema": SCHEMA_VERSION, "type": "list", "items": body}
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        header, rows = _csv_table(product)
        return csv_bytes(header, rows)
    raise ValueError(f"unknown format {fmt!r}")


def parse(data: bytes):
    """Inverse of serialize(fmt="json")."""
    doc = json.loads(data.decode("utf-8"))
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError("unsupported schema version")
    if doc.get("type") == "list":
        return [_parse_value(x) for x in doc["items"]]
    if doc.get("type") == "mapping":
        return {k: _parse_value(v) for k, v in doc["entries"].items()}
    return _parse_obj(doc)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if isinstance(x, enum.Enum):
        return x.name
    return str(x)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue().encode("utf-8")


def _flatten(obj, prefix=""):
    out = []
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        for f in dataclasses.fields(obj):
            out.extend(_flatten(getattr(obj, f.name), prefix + f.name + "."))
        return out
    if isinstance(obj, (tuple, list)):
        for i, x in enumerate(obj):
            out.extend(_flatten(x, prefix + f"{i}."))
        return out
    if isinstance(obj, dict):
        for k, x in obj.items():
            out.extend(_flatten(x, prefix + f"{k}."))
        return out
    out.append((prefix[:-1], obj))
    return out


def _csv_table(product):
    if isinstance(product, Table):
        return product.columns, product.rows
    if isinstance(product, Trajectory):
        return ("t", "u", "v"), [(t, s.u, s.v) for t, s in product.samples]
    if isinstance(product, LimitCycle):
        return ("u", "v"), [(s.u, s.v) for s in product.points]
    if isinstance(product, BasinRaster):
        g = product.grid
        us = np.linspace(g.u_lo, g.u_hi, g.n_u)
        vs = np.linspace(g.v_lo, g.v_hi, g.n_v)
        rows = [(us[i], vs[j], product.labels[i, j].name)
                for i in range(g.n_u) for j in range(g.n_v)]
        return ("u", "v", "label"), rows
    if isinstance(product, BifDiagram):
        rows = [("sn", q, c) for q, c in product.sn_curve]
        rows += [("hopf", q, c) for q, c in product.hopf_curve]
        rows += [("hom", q, c) for q, c in product.hom_curve]
        rows.append(("bt", product.bt_point[0], product.bt_point[1]))
        return ("curve", "Q", "C"), rows
    if isinstance(product, SaddleManifolds):
        rows = []
        for name in ("wu_ne", "wu_sw", "ws_ne", "ws_sw"):
            for t, s in getattr(product, name).samples:
                rows.append((name, t, s.u, s.v))
        return ("branch", "t", "u", "v"), rows
    if isinstance(product, (list, tuple)):
        rows = []
        for i, item in enumerate(product):
            rows.extend((i, k, _fmt(v)) for k, v in _flatten(item))
        return ("index", "field", "value"), rows
    # scalar products fall back to a two-column field/value table
    return ("field", "value"), [(k, _fmt(v)) for k, v in _flatten(product)]

"""Text serialization of traces, profiles and tables.

Documents are JSON with a ``schema_version`` field; tables are CSV.  Every
float is written with 17 significant digits so that parsing restores it
bit for bit, and every file is written atomically.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from .analysis import PropertyProfile
from .errors import SchemaError
from .orlicz import YoungFunction
from .wcga import GreedyTrace

__all__ = [
    "SCHEMA_VERSION",
    "format_float",
    "dumps",
    "write_atomic",
    "trace_document",
    "parse_trace",
    "profile_document",
    "parse_profile",
    "table_text",
    "parse_table",
    "check_schema",
]

SCHEMA_VERSION = "1.0"


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if all(ch not in text for ch in ".en"):
        text += ".0"
    return text


def _emit(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, (complex, np.complexfloating)):
        out.append(f"[{format_float(obj.real)}, {format_float(obj.imag)}]")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            out.append("[")
            for i, v in enumerate(items):
                _emit(v, indent, level + 1, out)
                if i < len(items) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-digit floats and complex numbers as ``[re, im]``."""
    out: list[str] = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def _float_in(x) -> float:
    return float(x)  # also accepts the quoted "nan", "inf" and "-inf"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def check_schema(doc: dict, kind: str) -> None:
    version = doc.get("schema_version")
    if not isinstance(version, str):
        raise SchemaError("missing schema_version")
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise SchemaError(f"malformed schema_version {version!r}") from None
    if major > int(SCHEMA_VERSION.split(".")[0]):
        raise SchemaError(f"schema_version {version} is newer than supported {SCHEMA_VERSION}")
    if doc.get("kind") != kind:
        raise SchemaError(f"expected a {kind} document, got {doc.get('kind')!r}")


def _space_doc(space: YoungFunction) -> dict:
    return {"p": space.p, "alpha": space.alpha, "c": space.c}


def _coefficients_doc(coeffs) -> list:
    arr = np.asarray(coeffs)
    if np.iscomplexobj(arr):
        return [complex(v) for v in arr]
    return [float(v) for v in arr]


def _coefficients_in(values) -> np.ndarray:
    if values and isinstance(values[0], list):
        return np.array([complex(_float_in(a), _float_in(b)) for a, b in values])
    return np.array([_float_in(v) for v in values], dtype=float)


def trace_document(trace: GreedyTrace, space: YoungFunction | None = None,
                   dictionary: dict | None = None, extra: dict | None = None) -> dict:
    """Structured form of a trace: one record per step."""
    steps = []
    for n, atom in enumerate(trace.selected):
        record = {
            "step": n + 1,
            "atom": int(atom),
            "residual_norm": float(trace.residual_norms[n + 1]),
            "functional_sup": float(trace.functional_sups[n]),
            "picked_value": float(trace.picked_values[n]),
            "certificate": float(trace.certificates[n]),
            "wall_time": trace.wall_times[n] if n < len(trace.wall_times) else None,
        }
        if n < len(trace.coefficients):
            record["coefficients"] = _coefficients_doc(trace.coefficients[n])
        steps.append(record)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "trace",
        "space": _space_doc(space) if space is not None else None,
        "dictionary": dictionary,
        "config": trace.config,
        "initial_norm": float(trace.residual_norms[0]) if trace.residual_norms else None,
        "status": trace.status,
        "flags": list(trace.flags),
        "steps": steps,
    }
    if extra:
        doc["extra"] = extra
    return doc


def parse_trace(text: str) -> GreedyTrace:
    doc = json.loads(text)
    check_schema(doc, "trace")
    trace = GreedyTrace(config=doc.get("config") or {}, status=doc.get("status", "ok"),
                        flags=list(doc.get("flags", [])))
    if doc.get("initial_norm") is not None:
        trace.residual_norms.append(_float_in(doc["initial_norm"]))
    for rec in doc["steps"]:
        trace.selected.append(int(rec["atom"]))
        trace.residual_norms.append(_float_in(rec["residual_norm"]))
        trace.functional_sups.append(_float_in(rec["functional_sup"]))
        trace.picked_values.append(_float_in(rec["picked_value"]))
        trace.certificates.append(_float_in(rec["certificate"]))
        trace.wall_times.append(rec.get("wall_time"))
        if "coefficients" in rec:
            trace.coefficients.append(_coefficients_in(rec["coefficients"]))
    return trace


def profile_document(profile: PropertyProfile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "profile",
        "space": _space_doc(profile.space),
        "q_c0": profile.q_c0,
        "tau": profile.tau,
        "lambda1": profile.lambda1,
        "H": [float(v) for v in profile.H],
        "kN": [float(v) for v in profile.kN],
        "metadata": profile.metadata,
    }


def parse_profile(text: str) -> PropertyProfile:
    doc = json.loads(text)
    check_schema(doc, "profile")
    sp = doc["space"]
    space = YoungFunction(_float_in(sp["p"]), _float_in(sp["alpha"]), _float_in(sp["c"]))
    return PropertyProfile(space, _float_in(doc["q_c0"]),
                           np.array([_float_in(v) for v in doc["H"]]),
                           np.array([_float_in(v) for v in doc["kN"]]),
                           _float_in(doc["tau"]), _float_in(doc["lambda1"]), doc.get("metadata", {}))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value).strip('"')
    return str(value)


def table_text(rows, columns) -> str:
    """CSV with one header row; ``None`` cells are left empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def parse_table(text: str) -> list[dict]:
    """Rows of a CSV table as dicts of strings (empty cells become ``None``)."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: (v if v != "" else None) for k, v in row.items()} for row in reader]

"""JSON model files: parse, serialize, and the shipped model collection.

A model file is a UTF-8 JSON document::

    {
      "format": "fgqmf-model", "version": 1, "name": "...",
      "variables": [{"name": "X", "cardinality": 2, "mirror_of": "X'"}, ...],
      "factors": [
        {"id": "H", "axes": ["Xt", "X"], "gate": {"name": "hadamard", "params": {}, "conjugate": false}},
        {"id": "U", "axes": ["Y", "X"], "data": [[0.6, 0.0], [0.8, 0.0], ...]},
        ...
      ],
      "boxes": [...], "instances": [...], "outputs": [...], "measurements": [...]
    }

Factor ``data`` lists complex entries as ``[re, im]`` pairs in row-major
order over the declared axes. A ``gate`` reference names a builtin from
:mod:`fgqmf.gates` and is expanded exactly on load. Optional keys:
``kind`` (default ``"factor"``) and ``stage``.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from . import gates
from .graph import FactorGraph, GadgetInstance, GraphError, FACTOR_KINDS
from .tensor import NamedTensor

__all__ = [
    "FORMAT",
    "ModelError",
    "SCHEMA",
    "VERSION",
    "dump_model",
    "load_model",
    "parse_model",
    "serialize_model",
    "shipped_model_path",
    "shipped_models",
]

FORMAT = "fgqmf-model"
VERSION = 1

_NAME = {"type": "string", "minLength": 1}
_NAMES = {"type": "array", "items": _NAME}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["format", "version", "variables", "factors"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": FORMAT},
        "version": {"const": VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "variables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "cardinality"],
                "additionalProperties": False,
                "properties": {
                    "name": _NAME,
                    "cardinality": {"type": "integer", "minimum": 1},
                    "mirror_of": _NAME,
                },
            },
        },
        "factors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "axes"],
                "additionalProperties": False,
                "properties": {
                    "id": _NAME,
                    "axes": _NAMES,
                    "kind": {"enum": list(FACTOR_KINDS)},
                    "stage": {"type": "integer"},
                    "gate": {
                        "type": "object",
                        "required": ["name"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"enum": sorted(gates.GATES)},
                            "params": {"type": "object"},
                            "conjugate": {"type": "boolean"},
                        },
                    },
                    "data": {"type": "array", "items": _COMPLEX},
                },
                "oneOf": [{"required": ["gate"]}, {"required": ["data"]}],
            },
        },
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "factors", "boundary"],
                "additionalProperties": False,
                "properties": {"name": _NAME, "factors": _NAMES, "boundary": _NAMES},
            },
        },
        "instances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["prefix", "gadget", "names", "factors", "roles"],
                "additionalProperties": False,
                "properties": {
                    "prefix": {"type": "string"},
                    "gadget": _NAME,
                    "names": {"type": "object", "additionalProperties": _NAME},
                    "factors": _NAMES,
                    "roles": {"type": "object", "additionalProperties": _NAMES},
                },
            },
        },
        "outputs": _NAMES,
        "measurements": _NAMES,
    },
}


class ModelError(ValueError):
    """Schema or reference error; ``path`` locates it in the document."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def parse_model(text: str) -> FactorGraph:
    """Parse a model document into a validated :class:`FactorGraph`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"line {e.lineno} column {e.colno}", f"invalid JSON: {e.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        raise ModelError(_path(e.absolute_path), e.message)
    return _build(doc)


def _build(doc: dict) -> FactorGraph:
    g = FactorGraph(doc.get("name", ""))
    declared = {v["name"] for v in doc["variables"]}
    for i, v in enumerate(doc["variables"]):
        where = _path(["variables", i])
        mirror = v.get("mirror_of")
        if mirror is not None and mirror not in declared:
            raise ModelError(where, f"mirror_of names undeclared variable {mirror!r}")
        try:
            g.add_variable(v["name"], v["cardinality"], mirror_of=mirror)
        except GraphError as e:
            raise ModelError(where, str(e)) from None
    for i, f in enumerate(doc["factors"]):
        where = _path(["factors", i])
        axes = f["axes"]
        for a in axes:
            if a not in g.variables:
                raise ModelError(where, f"dangling reference to variable {a!r}")
        kind = f.get("kind", "factor")
        stage = f.get("stage")
        try:
            if "gate" in f:
                ref = f["gate"]
                params = ref.get("params", {})
                try:
                    arr = gates.gate_array(ref["name"], conjugate=ref.get("conjugate", False), **params)
                except (TypeError, ValueError) as e:
                    raise ModelError(where + ".gate", f"bad gate parameters: {e}") from None
                shape = tuple(g.variables[a].cardinality for a in axes)
                if arr.shape != shape:
                    raise ModelError(
                        where, f"gate {ref['name']!r} has shape {arr.shape}, axes give {shape}"
                    )
                gate_ref = {
                    "name": ref["name"],
                    "params": params,
                    "conjugate": bool(ref.get("conjugate", False)),
                }
                g.add_factor(f["id"], NamedTensor(axes, arr), kind=kind, stage=stage, gate=gate_ref)
            else:
                shape = tuple(g.variables[a].cardinality for a in axes)
                flat = np.array([complex(re, im) for re, im in f["data"]], dtype=np.complex128)
                if flat.size != int(np.prod(shape, dtype=np.int64)):
                    raise ModelError(
                        where + ".data",
                        f"{flat.size} entries, axes {axes} need {int(np.prod(shape, dtype=np.int64))}",
                    )
                g.add_factor(f["id"], NamedTensor(axes, flat.reshape(shape)), kind=kind, stage=stage)
        except GraphError as e:
            raise ModelError(where, str(e)) from None
    for i, b in enumerate(doc.get("boxes", [])):
        try:
            g.add_box(b["name"], b["factors"], b["boundary"])
        except GraphError as e:
            raise ModelError(_path(["boxes", i]), str(e)) from None
    for i, inst in enumerate(doc.get("instances", [])):
        where = _path(["instances", i])
        for fid in inst["factors"]:
            if fid not in g.factors:
                raise ModelError(where, f"dangling reference to factor {fid!r}")
        if inst["prefix"] in g.instances:
            raise ModelError(where, f"duplicate instance prefix {inst['prefix']!r}")
        g.instances[inst["prefix"]] = GadgetInstance(
            inst["prefix"],
            inst["gadget"],
            dict(inst["names"]),
            tuple(inst["factors"]),
            {k: tuple(v) for k, v in inst["roles"].items()},
        )
    for key in ("outputs", "measurements"):
        for i, v in enumerate(doc.get(key, [])):
            if v not in g.variables:
                raise ModelError(_path([key, i]), f"dangling reference to variable {v!r}")
        setattr(g, key, list(doc.get(key, [])))
    try:
        g.validate()
    except GraphError as e:
        raise ModelError("$", str(e)) from None
    return g


def _to_doc(g: FactorGraph) -> dict:
    doc: dict[str, Any] = {"format": FORMAT, "version": VERSION, "name": g.name}
    doc["variables"] = []
    for v in g.variables.values():
        d: dict[str, Any] = {"name": v.name, "cardinality": v.cardinality}
        if v.mirror_of is not None:
            d["mirror_of"] = v.mirror_of
        doc["variables"].append(d)
    doc["factors"] = []
    for f in g.factors.values():
        d = {"id": f.id, "axes": list(f.tensor.names)}
        if f.kind != "factor":
            d["kind"] = f.kind
        if f.stage is not None:
            d["stage"] = int(f.stage)
        if f.gate is not None:
            d["gate"] = {
                "name": f.gate["name"],
                "params": dict(f.gate.get("params", {})),
                "conjugate": bool(f.gate.get("conjugate", False)),
            }
        else:
            d["data"] = [[float(z.real), float(z.imag)] for z in f.tensor.data.ravel()]
        doc["factors"].append(d)
    if g.boxes:
        doc["boxes"] = [
            {"name": b.name, "factors": list(b.factor_ids), "boundary": list(b.boundary)}
            for b in g.boxes.values()
        ]
    if g.instances:
        doc["instances"] = [
            {
                "prefix": i.prefix,
                "gadget": i.gadget,
                "names": dict(i.names),
                "factors": list(i.factor_ids),
                "roles": {k: list(v) for k, v in i.roles.items()},
            }
            for i in g.instances.values()
        ]
    if g.outputs:
        doc["outputs"] = list(g.outputs)
    if g.measurements:
        doc["measurements"] = list(g.measurements)
    return doc


def serialize_model(g: FactorGraph) -> str:
    """Deterministic JSON text; ``parse_model`` inverts it bit-exactly.

    Floats use Python's shortest round-trip representation.
    """
    return json.dumps(_to_doc(g), indent=1, ensure_ascii=False) + "\n"


def load_model(path) -> FactorGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def dump_model(g: FactorGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(g))


def shipped_models() -> list[str]:
    """File names of the models bundled with the package."""
    d = resources.files("fgqmf") / "data" / "models"
    return sorted(p.name for p in d.iterdir() if p.name.endswith(".model.json"))


def shipped_model_path(name: str):
    """Path of a bundled model; ``name`` may omit the ``.model.json`` suffix."""
    if not name.endswith(".model.json"):
        name += ".model.json"
    p = resources.files("fgqmf") / "data" / "models" / name
    if not p.is_file():
        raise FileNotFoundError(f"no shipped model {name!r}; available: {shipped_models()}")
    return p

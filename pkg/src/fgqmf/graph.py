"""Mirrored Forney factor graphs.

Variables are edges and factors are nodes; every variable touches at most
two factors. Each ket variable ``X`` may be paired with its bra mirror
``X'``. Sharing a variable among three or more factors goes through an
explicit equality-constraint factor (see :meth:`FactorGraph.share`).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import gates
from .tensor import NamedTensor, contract

__all__ = [
    "Box",
    "Factor",
    "FactorGraph",
    "Gadget",
    "GadgetInstance",
    "GraphError",
    "VariableDecl",
    "close_box",
    "instantiate",
    "mirror_complete",
    "mirror_name",
    "replace_box",
    "terminate",
]

FACTOR_KINDS = ("factor", "equality", "termination", "constant")


class GraphError(ValueError):
    """Structural error in a factor graph."""


def mirror_name(name: str) -> str:
    """``X`` <-> ``X'``."""
    return name[:-1] if name.endswith("'") else name + "'"


@dataclass(frozen=True)
class VariableDecl:
    name: str
    cardinality: int
    mirror_of: str | None = None


@dataclass(frozen=True)
class Factor:
    """A factor node.

    ``gate`` records a builtin gate reference (``{"name": ..., "params": ...,
    "conjugate": ...}``) when the tensor came from :mod:`fgqmf.gates`, so the
    model file can store the reference instead of rounded literals.
    ``stage`` is an optional integer time annotation.
    """

    id: str
    tensor: NamedTensor
    kind: str = "factor"
    stage: int | None = None
    gate: Mapping | None = None

    @property
    def variables(self) -> tuple[str, ...]:
        return self.tensor.names


@dataclass(frozen=True)
class Box:
    name: str
    factor_ids: tuple[str, ...]
    boundary: tuple[str, ...]


@dataclass(frozen=True)
class GadgetInstance:
    prefix: str
    gadget: str
    names: Mapping[str, str]
    factor_ids: tuple[str, ...]
    roles: Mapping[str, tuple[str, ...]]


class FactorGraph:
    """A Forney factor graph with mirror-pair metadata.

    Parameters
    ----------
    name : str
        Free-form label, carried into model files.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: dict[str, VariableDecl] = {}
        self.factors: dict[str, Factor] = {}
        self.boxes: dict[str, Box] = {}
        self.instances: dict[str, GadgetInstance] = {}
        self.outputs: list[str] = []
        self.measurements: list[str] = []
        self._frozen = False

    # -- construction -----------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise GraphError("graph is frozen")

    def freeze(self) -> "FactorGraph":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def copy(self, name: str | None = None) -> "FactorGraph":
        g = copy.copy(self)
        g.variables = dict(self.variables)
        g.factors = dict(self.factors)
        g.boxes = dict(self.boxes)
        g.instances = dict(self.instances)
        g.outputs = list(self.outputs)
        g.measurements = list(self.measurements)
        g._frozen = False
        if name is not None:
            g.name = name
        return g

    def add_variable(self, name: str, cardinality: int, mirror_of: str | None = None) -> str:
        self._check_mutable()
        if not name:
            raise GraphError("variable name must be non-empty")
        if name in self.variables:
            raise GraphError(f"variable {name!r} already declared")
        if name.endswith("'") and mirror_of != name[:-1]:
            raise GraphError(
                f"variable {name!r}: names ending in a prime are reserved for mirrors"
            )
        if int(cardinality) != cardinality or cardinality < 1:
            raise GraphError(f"variable {name!r}: cardinality must be a positive integer")
        if mirror_of is not None:
            other = self.variables.get(mirror_of)
            if other is not None:
                if other.cardinality != cardinality:
                    raise GraphError(f"mirror pair {mirror_of!r}/{name!r}: cardinality mismatch")
                if other.mirror_of not in (None, name):
                    raise GraphError(f"{mirror_of!r} is already mirrored by {other.mirror_of!r}")
                self.variables[mirror_of] = VariableDecl(mirror_of, other.cardinality, name)
        self.variables[name] = VariableDecl(name, int(cardinality), mirror_of)
        return name

    def add_pair(self, name: str, cardinality: int) -> tuple[str, str]:
        """Declare ``name`` and its mirror ``name'``."""
        self.add_variable(name, cardinality)
        self.add_variable(mirror_name(name), cardinality, mirror_of=name)
        return name, mirror_name(name)

    def ensure_variable(self, name: str, cardinality: int) -> str:
        """Declare ``name`` (and pair it with an existing mirror) unless already present."""
        if name in self.variables:
            if self.variables[name].cardinality != cardinality:
                raise GraphError(f"variable {name!r}: cardinality mismatch")
            return name
        mirror = mirror_name(name)
        mirror_of = mirror if (name.endswith("'") or mirror in self.variables) else None
        return self.add_variable(name, cardinality, mirror_of=mirror_of)

    def add_factor(
        self,
        id: str,
        tensor: NamedTensor,
        kind: str = "factor",
        stage: int | None = None,
        gate: Mapping | None = None,
    ) -> Factor:
        self._check_mutable()
        if id in self.factors:
            raise GraphError(f"factor id {id!r} already used")
        if kind not in FACTOR_KINDS:
            raise GraphError(f"unknown factor kind {kind!r}")
        for ax in tensor.axes:
            decl = self.variables.get(ax.name)
            if decl is None:
                raise GraphError(f"factor {id!r}: undeclared variable {ax.name!r}")
            if decl.cardinality != ax.cardinality:
                raise GraphError(
                    f"factor {id!r}: variable {ax.name!r} has cardinality "
                    f"{decl.cardinality}, factor axis has {ax.cardinality}"
                )
            if self.degree(ax.name) >= 2:
                raise GraphError(
                    f"factor {id!r}: variable {ax.name!r} already touches two factors; "
                    "use share() to insert an equality constraint"
                )
        f = Factor(id, tensor, kind, stage, dict(gate) if gate is not None else None)
        self.factors[id] = f
        return f

    def add_gate(
        self,
        id: str,
        gate: str,
        axes: Sequence[str],
        kind: str = "factor",
        stage: int | None = None,
        conjugate: bool = False,
        **params,
    ) -> Factor:
        """Add a builtin gate from :mod:`fgqmf.gates` as a factor."""
        t = gates.gate_tensor(gate, axes, conjugate=conjugate, **params)
        ref = {"name": gate, "params": _plain(params), "conjugate": bool(conjugate)}
        return self.add_factor(id, t, kind=kind, stage=stage, gate=ref)

    def add_equality(
        self, id: str, axes: Sequence[str], stage: int | None = None, kind: str = "equality"
    ) -> Factor:
        M = self.variables[axes[0]].cardinality
        return self.add_gate(id, "f_eq", axes, kind=kind, stage=stage, n=len(axes), M=M)

    def add_constant(self, id: str, var: str, value: int, stage: int | None = None) -> Factor:
        M = self.variables[var].cardinality
        return self.add_gate(id, "constant", [var], kind="constant", stage=stage, M=M, value=value)

    def share(self, var: str, k: int, stage: int | None = None) -> list[str]:
        """Make ``k`` copies of ``var`` through an equality-constraint factor.

        Returns the names of the new copy variables ``var#1 .. var#k``.
        """
        if k < 1:
            raise GraphError("share() needs k >= 1")
        decl = self.variables[var]
        copies = []
        for i in range(1, k + 1):
            name = f"{var}#{i}"
            self.add_variable(name, decl.cardinality)
            copies.append(name)
        self.add_equality(f"share[{var}]", [var] + copies, stage=stage)
        return copies

    def add_box(self, name: str, factor_ids: Sequence[str], boundary: Sequence[str] | None = None) -> Box:
        self._check_mutable()
        if name in self.boxes:
            raise GraphError(f"box {name!r} already defined")
        for fid in factor_ids:
            if fid not in self.factors:
                raise GraphError(f"box {name!r}: unknown factor {fid!r}")
        if boundary is None:
            boundary = self._natural_boundary(factor_ids)
        for v in boundary:
            if v not in self.variables:
                raise GraphError(f"box {name!r}: undeclared boundary variable {v!r}")
        box = Box(name, tuple(factor_ids), tuple(boundary))
        self.boxes[name] = box
        return box

    def _natural_boundary(self, factor_ids: Sequence[str]) -> list[str]:
        inside = set(factor_ids)
        out = []
        for fid in factor_ids:
            for v in self.factors[fid].variables:
                if v in out:
                    continue
                users = self.users(v)
                if len(users) < 2 or any(u not in inside for u in users):
                    out.append(v)
        return out

    # -- queries ----------------------------------------------------------

    def users(self, var: str) -> list[str]:
        return [fid for fid, f in self.factors.items() if var in f.variables]

    def degree(self, var: str) -> int:
        return sum(1 for f in self.factors.values() if var in f.variables)

    def half_edges(self) -> list[str]:
        """Variables touching exactly one factor, in declaration order."""
        return [v for v in self.variables if self.degree(v) == 1]

    def pairs(self) -> list[tuple[str, str]]:
        out = []
        for name, decl in self.variables.items():
            if decl.mirror_of is not None and not name.endswith("'"):
                out.append((name, decl.mirror_of))
        return out

    def is_mirror_pair(self, a: str, b: str) -> bool:
        decl = self.variables.get(a)
        return decl is not None and decl.mirror_of == b

    def tensors(self, factor_ids: Sequence[str] | None = None) -> list[NamedTensor]:
        ids = self.factors if factor_ids is None else factor_ids
        return [self.factors[fid].tensor for fid in ids]

    def exterior(self, keep: Sequence[str] | None = None) -> NamedTensor:
        """Exterior function of the whole graph over ``keep``.

        ``keep`` defaults to :attr:`outputs` if set, else the half-edges.
        Kept variables may be internal edges: the result is then the
        product of all factors as a function of those variables, summed
        over everything else.
        """
        if keep is None:
            keep = self.outputs or self.half_edges()
        for v in keep:
            if v not in self.variables:
                raise GraphError(f"unknown variable {v!r}")
        return contract(self.tensors(), keep)

    def validate(self) -> None:
        """Check every invariant; raise :class:`GraphError` on the first violation."""
        for fid, f in self.factors.items():
            for ax in f.tensor.axes:
                decl = self.variables.get(ax.name)
                if decl is None or decl.cardinality != ax.cardinality:
                    raise GraphError(f"factor {fid!r}: bad variable {ax.name!r}")
        for v in self.variables:
            if self.degree(v) > 2:
                raise GraphError(f"variable {v!r} touches more than two factors")
        for name, decl in self.variables.items():
            if decl.mirror_of is not None:
                other = self.variables.get(decl.mirror_of)
                if other is None or other.mirror_of != name or other.cardinality != decl.cardinality:
                    raise GraphError(f"broken mirror pairing at {name!r}")
        for box in self.boxes.values():
            for fid in box.factor_ids:
                if fid not in self.factors:
                    raise GraphError(f"box {box.name!r}: unknown factor {fid!r}")
        for v in list(self.outputs) + list(self.measurements):
            if v not in self.variables:
                raise GraphError(f"unknown variable {v!r}")

    def structurally_equal(self, other: "FactorGraph", atol: float = 0.0) -> bool:
        """Same variables, same factor ids with identical axes and matching values."""
        if self.variables != other.variables or set(self.factors) != set(other.factors):
            return False
        for fid, f in self.factors.items():
            g = other.factors[fid]
            if f.tensor.names != g.tensor.names or f.kind != g.kind:
                return False
            if atol == 0.0:
                if not np.array_equal(f.tensor.data, g.tensor.data):
                    return False
            elif f.tensor.max_abs_diff(g.tensor) > atol:
                return False
        return True

    def __repr__(self):
        return (
            f"FactorGraph({self.name!r}, {len(self.variables)} variables, "
            f"{len(self.factors)} factors)"
        )


def _plain(params: Mapping) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, (tuple, list, np.ndarray)):
            v = [int(x) if isinstance(x, (int, np.integer)) else x for x in v]
        elif isinstance(v, np.integer):
            v = int(v)
        out[k] = v
    return out


# -- box closure --------------------------------------------------------------


def close_box(g: FactorGraph, box: str) -> NamedTensor:
    """Exterior function of a box over its boundary variables."""
    try:
        b = g.boxes[box]
    except KeyError:
        raise GraphError(f"unknown box {box!r}") from None
    return contract(g.tensors(b.factor_ids), b.boundary)


def replace_box(g: FactorGraph, box: str) -> FactorGraph:
    """A copy of ``g`` with the box's factors replaced by its exterior function.

    Variables internal to the box disappear from the copy.
    """
    t = close_box(g, box)
    b = g.boxes[box]
    h = g.copy()
    for fid in b.factor_ids:
        del h.factors[fid]
    del h.boxes[box]
    used = {v for f in h.factors.values() for v in f.variables} | set(b.boundary)
    kept = {n: d for n, d in h.variables.items() if n in used}
    h.variables = {
        n: d if d.mirror_of is None or d.mirror_of in kept else VariableDecl(n, d.cardinality)
        for n, d in kept.items()
    }
    h.factors[f"box[{box}]"] = Factor(f"box[{box}]", t)
    return h


# -- mirroring -----------------------------------------------------------------


def mirror_complete(half: FactorGraph, name: str | None = None) -> FactorGraph:
    """Add the bra mirror image of a ket-only graph.

    For every variable ``X`` a conjugate ``X'`` is declared; for every
    factor ``F`` a factor ``F'`` with entrywise complex-conjugated values
    over the primed variables is added.
    """
    if half.pairs():
        raise GraphError("mirror_complete expects a graph without mirror pairs")
    g = FactorGraph(name if name is not None else half.name)
    for v, decl in half.variables.items():
        if v.endswith("'"):
            raise GraphError(f"variable {v!r} collides with the primed-name convention")
        if mirror_name(v) in half.variables:
            raise GraphError(f"primed name {mirror_name(v)!r} already in use")
        g.add_pair(v, decl.cardinality)
    for fid, f in half.factors.items():
        g.add_factor(fid, f.tensor, kind=f.kind, stage=f.stage, gate=f.gate)
    for fid, f in half.factors.items():
        g.add_factor(
            mirror_name(fid),
            f.tensor.conj().rename({v: mirror_name(v) for v in f.variables}),
            kind=f.kind,
            stage=f.stage,
            gate=_conj_gate(f.gate),
        )
    for bname, box in half.boxes.items():
        g.boxes[bname] = box
        g.boxes[mirror_name(bname)] = Box(
            mirror_name(bname),
            tuple(mirror_name(fid) for fid in box.factor_ids),
            tuple(mirror_name(v) for v in box.boundary),
        )
    return g


def _conj_gate(ref: Mapping | None) -> dict | None:
    if ref is None:
        return None
    out = dict(ref)
    out["conjugate"] = not bool(ref.get("conjugate", False))
    return out


def terminate(g: FactorGraph, pairs: Sequence[tuple[str, str]], stage: int | None = None) -> FactorGraph:
    """Close open mirror pairs with an identity (equality) factor.

    The termination summarizes an arbitrary unknown future.
    """
    h = g.copy()
    for a, b in pairs:
        if not h.is_mirror_pair(a, b):
            raise GraphError(f"({a!r}, {b!r}) is not a mirror pair")
        if h.degree(a) != 1 or h.degree(b) != 1:
            raise GraphError(f"({a!r}, {b!r}) is not an open pair of half-edges")
        h.add_equality(f"term[{a}]", [a, b], stage=stage, kind="termination")
    return h


# -- gadgets ---------------------------------------------------------------------


@dataclass
class Gadget:
    """A reusable subgraph with declared boundary variables.

    ``roles`` names groups of gadget variables for later analysis, for
    instance ``{"system_out": ("Xt", "Xt'"), "probe_out": ("xit", "xit'")}``.
    """

    name: str
    graph: FactorGraph
    boundary: tuple[str, ...]
    roles: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        self.boundary = tuple(self.boundary)
        for v in self.boundary:
            if v not in self.graph.variables:
                raise GraphError(f"gadget {self.name!r}: undeclared boundary variable {v!r}")

    def exterior(self) -> NamedTensor:
        return self.graph.exterior(list(self.boundary))


def _prefixed(prefix: str, name: str) -> str:
    return prefix + name


def instantiate(
    g: FactorGraph,
    gadget: Gadget,
    binding: Mapping[str, str],
    prefix: str,
    stage: int | None = None,
) -> FactorGraph:
    """Copy of ``g`` with the gadget's factors added.

    Boundary variables are mapped through ``binding`` onto host variables
    (declared on the fly if the host lacks them); internal variables and
    factor ids get ``prefix`` prepended. A ``stage`` overrides the stage
    annotation of every gadget factor.
    """
    if prefix in g.instances:
        raise GraphError(f"gadget prefix {prefix!r} already instantiated")
    missing = [b for b in gadget.boundary if b not in binding]
    if missing:
        raise GraphError(f"dangling boundary variables {missing}")
    extra = [b for b in binding if b not in gadget.boundary]
    if extra:
        raise GraphError(f"binding names non-boundary variables {extra}")
    src = gadget.graph
    names: dict[str, str] = {}
    for v in src.variables:
        names[v] = binding[v] if v in binding else _prefixed(prefix, v)
    for v, decl in src.variables.items():
        if decl.mirror_of is not None and v in binding and decl.mirror_of in binding:
            if not (g.is_mirror_pair(binding[v], binding[decl.mirror_of])
                    or mirror_name(binding[v]) == binding[decl.mirror_of]):
                raise GraphError(
                    f"binding of {v!r}/{decl.mirror_of!r} does not respect mirror pairing"
                )
    h = g.copy()
    ordered = sorted(src.variables.items(), key=lambda kv: kv[0].endswith("'"))
    for v, decl in ordered:
        target = names[v]
        if v in binding:
            if target in h.variables:
                if h.variables[target].cardinality != decl.cardinality:
                    raise GraphError(
                        f"cardinality mismatch binding {v!r} -> {target!r}: "
                        f"{decl.cardinality} vs {h.variables[target].cardinality}"
                    )
                continue
        elif target in h.variables:
            raise GraphError(f"internal variable {target!r} collides with host variable")
        mirror = names.get(decl.mirror_of) if decl.mirror_of else None
        if mirror is not None and mirror in h.variables:
            h.add_variable(target, decl.cardinality, mirror_of=mirror)
        else:
            h.add_variable(target, decl.cardinality)
    fids = []
    for fid, f in src.factors.items():
        new_id = _prefixed(prefix, fid)
        h.add_factor(
            new_id,
            f.tensor.rename(names),
            kind=f.kind,
            stage=f.stage if stage is None else stage,
            gate=f.gate,
        )
        fids.append(new_id)
    # role members are variables or factor ids
    roles = {
        k: tuple(names[v] if v in names else _prefixed(prefix, v) for v in vs)
        for k, vs in gadget.roles.items()
    }
    h.instances[prefix] = GadgetInstance(prefix, gadget.name, dict(names), tuple(fids), roles)
    return h

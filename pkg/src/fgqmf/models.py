"""Prebuilt models: the elementary measured system, a general system with
two partial projection measurements, a classicable-but-not-classical
example, and the Frauchiger-Renner Gedankenexperiment with its agent views.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classical import ConfigTable, format_number, off_diagonal_witness, valid_configurations
from .graph import FactorGraph, instantiate, mirror_complete, terminate
from . import gates
from .measure import projection_gadget, unitary_interaction_gadget
from .qmf import Pmf, Sqmf, sqmf_from_graph
from .tensor import NamedTensor, is_unitary

__all__ = [
    "FR_B_ROW0",
    "FR_U_COL0",
    "FrModel",
    "FrReport",
    "Implication",
    "classicable_example",
    "complete_unitary_column",
    "complete_unitary_row",
    "elementary_system",
    "fr_implications",
    "fr_model",
    "fr_model_from",
    "check_implication",
    "fr_table1_graph",
    "fr_table2_graph",
    "separation_example",
    "two_measurement_system",
]

FR_U_COL0 = np.array([np.sqrt(1 / 3), np.sqrt(2 / 3)], dtype=np.complex128)
# indexed by 2*r + x
FR_B_ROW0 = np.array([0.5, 0.5, -np.sqrt(0.5), 0.0], dtype=np.complex128)


def _probs(p0) -> np.ndarray:
    p = np.asarray(p0.probs if isinstance(p0, Pmf) else p0, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p0 must be a probability vector")
    return p


def _unitary(m, what: str, n: int | None = None) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise ValueError(f"{what} has dimension {m.shape[0]}, expected {n}")
    if not is_unitary(m, 1e-12):
        raise ValueError(f"{what} is not unitary")
    return m


def _matrix_factor(g: FactorGraph, fid: str, m: np.ndarray, outs, ins, stage=None):
    cards = [g.variables[v].cardinality for v in list(outs) + list(ins)]
    g.add_factor(fid, NamedTensor(list(outs) + list(ins), np.asarray(m).reshape(cards)), stage=stage)


# -- elementary system ----------------------------------------------------------


def elementary_system(p0, U0, U1, B) -> FactorGraph:
    """Initial mixture, two unitary steps, one projection measurement, termination.

    Pairs ``X0 .. X4``; the measured pair is ``X3`` (the state in the basis
    of the columns of ``B``) and the unpaired result variable is ``Y``.
    The exterior function over ``Y`` is
    ``p(y) = sum_x0 p0(x0) |(B^H U1 U0)[y, x0]|^2``.
    """
    p = _probs(p0)
    M = p.size
    U0 = _unitary(U0, "U0", M)
    U1 = _unitary(U1, "U1", M)
    B = _unitary(B, "B", M)
    half = FactorGraph("elementary")
    for v in ("X0", "X1", "X2", "X3", "X3o", "X4"):
        half.add_variable(v, M)
    _matrix_factor(half, "U0", U0, ["X1"], ["X0"], stage=1)
    _matrix_factor(half, "U1", U1, ["X2"], ["X1"], stage=2)
    _matrix_factor(half, "Bh", B.conj().T, ["X3"], ["X2"], stage=3)
    _matrix_factor(half, "B", B, ["X4"], ["X3o"], stage=3)
    g = mirror_complete(half)
    g.add_variable("P", M)
    g.add_variable("Y", M)
    g.add_factor("p", NamedTensor(["P"], p), kind="constant", stage=0)
    g.add_equality("prep", ["P", "X0", "X0'"], stage=0)
    g.add_equality("meas", ["X3", "X3o", "X3'", "X3o'", "Y"], stage=3)
    g = terminate(g, [("X4", "X4'")], stage=4)
    g.outputs = ["Y"]
    g.measurements = ["X3"]
    return g


# -- general two-measurement system -----------------------------------------------


def two_measurement_system(
    p0,
    U0,
    B1,
    U1,
    B2,
    dims: tuple[int, int],
    U2=None,
) -> FactorGraph:
    """Two partial projection measurements on a system of two wires.

    ``dims = (MA, MC)``: wire ``A`` is measured, wire ``C`` is not. The
    initial mixture ``p0`` lives on the joint space of size ``MA * MC``;
    ``U0`` maps it onto the wires (index ``a * MC + c``); ``B1`` measures
    ``A`` with result ``Y1``; ``U1`` acts on both wires; ``B2`` measures
    ``A`` with result ``Y2``. An optional final ``U2`` recombines the wires
    before termination. The exterior function over ``(Y1, Y2)`` is the
    joint pmf of the two results.
    """
    MA, MC = dims
    D = MA * MC
    p = _probs(p0)
    if p.size != D:
        raise ValueError(f"p0 has size {p.size}, expected {D}")
    U0 = _unitary(U0, "U0", D)
    U1 = _unitary(U1, "U1", D)
    B1 = _unitary(B1, "B1", MA)
    B2 = _unitary(B2, "B2", MA)
    half = FactorGraph("two-measurement")
    half.add_variable("X0", D)
    for v in ("A1", "A2", "A3", "A4"):
        half.add_variable(v, MA)
    for v in ("C1", "C2"):
        half.add_variable(v, MC)
    _matrix_factor(half, "U0", U0, ["A1", "C1"], ["X0"], stage=1)
    _matrix_factor(half, "U1", U1, ["A3", "C2"], ["A2", "C1"], stage=3)
    if U2 is not None:
        U2 = _unitary(U2, "U2", D)
        half.add_variable("X5", D)
        _matrix_factor(half, "U2", U2, ["X5"], ["A4", "C2"], stage=5)
    g = mirror_complete(half)
    g.add_variable("P", D)
    g.add_factor("p", NamedTensor(["P"], p), kind="constant", stage=0)
    g.add_equality("prep", ["P", "X0", "X0'"], stage=0)
    for k, (B, a_in, a_out, stage) in enumerate(((B1, "A1", "A2", 2), (B2, "A3", "A4", 4)), 1):
        gad = projection_gadget(B, with_result=True)
        binding = {
            "X": a_in, "X'": a_in + "'", "Xt": a_out, "Xt'": a_out + "'", "Z": f"Y{k}",
        }
        g = instantiate(g, gad, binding, prefix=f"m{k}.", stage=stage)
    if U2 is None:
        g = terminate(g, [("A4", "A4'"), ("C2", "C2'")], stage=6)
    else:
        g = terminate(g, [("X5", "X5'")], stage=6)
    g.outputs = ["Y1", "Y2"]
    return g


# -- classicable example -----------------------------------------------------------


def classicable_example(p0, U1, U2) -> FactorGraph:
    """``q = p(x0) d(x0,x0') U1(x1,x0) U1*(x1',x0') U2(x2,x1) U2*(x2',x1') d(x2,x2')``.

    Pairs ``X0, X1, X2``. ``X0`` and ``X2`` are classical; ``X1`` is
    classicable but not classical; ``{X1, X2}`` is jointly classicable
    exactly when ``p0`` is uniform. Every entry of ``U1`` and ``U2`` must
    have magnitude strictly below 1.
    """
    p = _probs(p0)
    M = p.size
    U1 = _unitary(U1, "U1", M)
    U2 = _unitary(U2, "U2", M)
    for name, u in (("U1", U1), ("U2", U2)):
        if np.max(np.abs(u)) >= 1.0 - 1e-12:
            raise ValueError(f"{name} has an entry of magnitude 1; entries must be strictly smaller")
    half = FactorGraph("classicable")
    for v in ("X0", "X1", "X2"):
        half.add_variable(v, M)
    _matrix_factor(half, "U1", U1, ["X1"], ["X0"], stage=1)
    _matrix_factor(half, "U2", U2, ["X2"], ["X1"], stage=2)
    g = mirror_complete(half)
    g.add_variable("P", M)
    g.add_factor("p", NamedTensor(["P"], p), kind="constant", stage=0)
    g.add_equality("prep", ["P", "X0", "X0'"], stage=0)
    g = terminate(g, [("X2", "X2'")], stage=3)
    g.outputs = ["X0", "X0'", "X1", "X1'", "X2", "X2'"]
    g.measurements = ["X0", "X1", "X2"]
    return g


# -- separation condition example ---------------------------------------------------


def separation_example(violate: bool = False, p0=(0.5, 0.5)) -> FactorGraph:
    """A qubit measured by a controlled-NOT into a probe prepared in ``|0>``.

    Afterwards the system and the probe evolve separately (Hadamard on
    each) and both are terminated. With ``violate`` a second
    controlled-NOT couples them again before termination. The measuring
    interaction is the gadget instance ``"meas."``.
    """
    p = _probs(p0)
    g = FactorGraph("separation-violated" if violate else "separation")
    g.add_pair("X0", 2)
    g.add_variable("P", 2)
    g.add_factor("p", NamedTensor(["P"], p), kind="constant", stage=0)
    g.add_equality("prep", ["P", "X0", "X0'"], stage=0)
    gad = unitary_interaction_gadget(gates.cnot(2).reshape(4, 4), [1.0, 0.0], marginalize_probe=False)
    binding = {"X": "X0", "X'": "X0'", "Xt": "X1", "Xt'": "X1'", "xit": "xi1", "xit'": "xi1'"}
    g = instantiate(g, gad, binding, prefix="meas.", stage=1)
    g.add_pair("X2", 2)
    g.add_pair("xi2", 2)
    if violate:
        g.add_gate("couple", "cnot", ["X2", "xi2", "X1", "xi1"], stage=2)
        g.add_gate("couple'", "cnot", ["X2'", "xi2'", "X1'", "xi1'"], stage=2, conjugate=True)
    else:
        for side in ("", "'"):
            g.add_gate("Hs" + side, "hadamard", ["X2" + side, "X1" + side], stage=2, conjugate=bool(side))
            g.add_gate("Hp" + side, "hadamard", ["xi2" + side, "xi1" + side], stage=2, conjugate=bool(side))
    g = terminate(g, [("X2", "X2'"), ("xi2", "xi2'")], stage=3)
    g.outputs = ["X0", "X0'", "X1", "X1'"]
    return g


# -- unitary completion ----------------------------------------------------------------


def complete_unitary_column(col, rng: np.random.Generator | int | None = 0) -> np.ndarray:
    """Unitary matrix whose column 0 is ``col`` (a unit vector).

    The remaining columns come from QR (Gram-Schmidt) against random
    complex vectors drawn from ``rng``.
    """
    col = np.asarray(col, dtype=np.complex128)
    if abs(np.linalg.norm(col) - 1.0) > 1e-12:
        raise ValueError("column must have unit norm")
    rng = np.random.default_rng(rng)
    n = col.size
    m = np.empty((n, n), dtype=np.complex128)
    m[:, 0] = col
    m[:, 1:] = rng.standard_normal((n, n - 1)) + 1j * rng.standard_normal((n, n - 1))
    q, r = np.linalg.qr(m)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    q[:, 0] = col
    return q


def complete_unitary_row(row, rng: np.random.Generator | int | None = 0) -> np.ndarray:
    """Unitary matrix whose row 0 is ``row`` (a unit vector)."""
    return complete_unitary_column(np.conj(row), rng).conj().T


# -- Frauchiger-Renner model -------------------------------------------------------------

# all variables are binary except Y1 (and its copies), which has 4 values
_FR_CARD = {"Y1": 4}


def _fr_half(U: np.ndarray, B: np.ndarray, parts: Sequence[str], name: str) -> FactorGraph:
    """Ket half of the model. ``parts`` selects ``"B"`` (Y1 = B (R, X))
    and ``"H2"`` (Y2 = H S) on top of the preparation and controlled swap."""
    half = FactorGraph(name)
    for v in ("St", "Xz", "Xt", "Rz", "Rt", "S", "X", "R"):
        half.add_variable(v, 2)
    half.add_constant("S0", "St", 0, stage=0)
    half.add_constant("X0", "Xz", 0, stage=0)
    half.add_constant("R0", "Rz", 0, stage=0)
    half.add_gate("H", "hadamard", ["Xt", "Xz"], stage=1)
    _matrix_factor(half, "U", U, ["Rt"], ["Rz"], stage=1)
    half.add_gate("swap", "fredkin", ["S", "X", "R", "St", "Xt", "Rt"], stage=2)
    if "B" in parts:
        half.add_variable("Y1", 4)
        half.add_factor("B", NamedTensor(["Y1", "R", "X"], B.reshape(4, 2, 2)), stage=3)
    if "H2" in parts:
        half.add_variable("Y2", 2)
        half.add_gate("H2", "hadamard", ["Y2", "S"], stage=4)
    return half


def _fr_graphs(U: np.ndarray, B: np.ndarray) -> dict[str, FactorGraph]:
    full = mirror_complete(_fr_half(U, B, ("B", "H2"), "fr"), name="fr")
    full.add_variable("Y1b", 4)
    full.add_variable("Y2b", 2)
    full.add_equality("meas[Y1]", ["Y1", "Y1'", "Y1b"], stage=3)
    full.add_equality("meas[Y2]", ["Y2", "Y2'", "Y2b"], stage=4)
    full.outputs = ["Y1b", "Y2b"]
    full.measurements = ["Y1", "Y2"]

    f = mirror_complete(_fr_half(U, B, (), "fr-agent-F"), name="fr-agent-F")
    f.add_variable("Rb", 2)
    f.add_variable("Sb", 2)
    f.add_equality("meas[R]", ["R", "R'", "Rb"], stage=3)
    f.add_equality("meas[S]", ["S", "S'", "Sb"], stage=3)
    f = terminate(f, [("X", "X'")], stage=3)
    f.outputs = ["Rb", "Sb"]
    f.measurements = ["R", "S"]

    wbar = mirror_complete(_fr_half(U, B, ("B",), "fr-agent-Wbar"), name="fr-agent-Wbar")
    wbar.add_variable("Y1b", 4)
    wbar.add_equality("meas[Y1]", ["Y1", "Y1'", "Y1b"], stage=3)
    wbar = terminate(wbar, [("S", "S'")], stage=4)
    wbar.outputs = ["Y1b", "S", "S'"]
    wbar.measurements = ["S", "Y1"]

    w = mirror_complete(_fr_half(U, B, ("H2",), "fr-agent-W"), name="fr-agent-W")
    w.add_variable("Rb", 2)
    w.add_variable("Y2b", 2)
    w.add_equality("meas[R]", ["R", "R'", "Rb"], stage=3)
    w.add_equality("meas[Y2]", ["Y2", "Y2'", "Y2b"], stage=4)
    w = terminate(w, [("X", "X'")], stage=3)
    w.outputs = ["Rb", "Y2b"]
    w.measurements = ["R", "Y2"]
    return {"full": full, "F": f, "Wbar": wbar, "W": w}


@dataclass(frozen=True)
class FrModel:
    """The full model and the three agent views (all frozen graphs)."""

    graph: FactorGraph
    agent_F: FactorGraph
    agent_Wbar: FactorGraph
    agent_W: FactorGraph
    U: np.ndarray
    B: np.ndarray

    def view(self, name: str) -> FactorGraph:
        return {"full": self.graph, "F": self.agent_F, "Wbar": self.agent_Wbar, "W": self.agent_W}[name]

    def sqmf(self, pairs=None) -> Sqmf:
        """SQMF of the full model over ``pairs`` (default ``Y1, Y2``)."""
        return sqmf_from_graph(self.graph, pairs)

    def stop_probability(self) -> float:
        """Probability that the two final results are ``Y1b = 0`` and ``Y2b = 1``."""
        t = self.graph.exterior(["Y1b", "Y2b"])
        return float(t.value(Y1b=0, Y2b=1).real)

    def pr_R1(self) -> float:
        """Probability of ``Rb = 1`` in Agent F's view."""
        return float(self.agent_F.exterior(["Rb"]).value(Rb=1).real)

    def psi_S_Y1(self) -> NamedTensor:
        """Ket-side function of ``(S, Y1)`` after the preparation, swap and ``B``."""
        half = _fr_half(self.U, self.B, ("B",), "psi")
        return half.exterior(["S", "Y1"])


def fr_model(seed: int | None = 0) -> FrModel:
    """Build the model; ``seed`` fixes the unitary completion of ``U`` and ``B``.

    Only column 0 of ``U`` and row 0 of ``B`` matter for the results; the
    other entries are a seeded random completion.
    """
    rng = np.random.default_rng(seed)
    U = complete_unitary_column(FR_U_COL0, rng)
    B = complete_unitary_row(FR_B_ROW0, rng)
    return fr_model_from(U, B)


def fr_model_from(U, B) -> FrModel:
    U = _unitary(U, "U", 2)
    B = _unitary(B, "B", 4)
    gs = _fr_graphs(U, B)
    for g in gs.values():
        g.freeze()
    U.setflags(write=False)
    B.setflags(write=False)
    return FrModel(gs["full"], gs["F"], gs["Wbar"], gs["W"], U, B)


_TABLE_AXES = ["R", "Rt", "X", "Xt", "S", "St"]


def fr_table1_graph(U=None, B=None) -> FactorGraph:
    """Ket-side preparation, swap and ``B`` with ``Y1`` fixed to 0.

    Its exterior function over ``(R, Rt, X, Xt, S, St)`` has four nonzero
    entries.
    """
    m = fr_model() if U is None or B is None else None
    U = m.U if m else np.asarray(U)
    B = m.B if m else np.asarray(B)
    g = _fr_half(U, B, ("B",), "fr-table1")
    g.add_constant("Y1=0", "Y1", 0, stage=3)
    g.outputs = list(_TABLE_AXES)
    return g


def fr_table2_graph(U=None, B=None) -> FactorGraph:
    """As :func:`fr_table1_graph`, followed by ``H`` on ``S`` with ``Y2`` fixed to 1."""
    m = fr_model() if U is None or B is None else None
    U = m.U if m else np.asarray(U)
    B = m.B if m else np.asarray(B)
    g = _fr_half(U, B, ("B", "H2"), "fr-table2")
    g.add_constant("Y1=0", "Y1", 0, stage=3)
    g.add_constant("Y2=1", "Y2", 1, stage=4)
    g.outputs = list(_TABLE_AXES)
    return g


# -- implications report -------------------------------------------------------------------


@dataclass
class Implication:
    """``premise => conclusion`` checked over the valid configurations of a view."""

    view: str
    premise: dict[str, int]
    conclusion: dict[str, int]
    holds: bool
    premise_configs: int
    counterexamples: list[dict[str, int]] = field(default_factory=list)

    def describe(self) -> str:
        lhs = " and ".join(f"{k}={v}" for k, v in self.premise.items())
        rhs = " and ".join(f"{k}={v}" for k, v in self.conclusion.items())
        return f"{lhs} => {rhs}"

    def to_dict(self) -> dict:
        return {
            "view": self.view,
            "implication": self.describe(),
            "premise": self.premise,
            "conclusion": self.conclusion,
            "holds": self.holds,
            "premise_configs": self.premise_configs,
            "counterexamples": self.counterexamples,
        }


def check_implication(
    t: NamedTensor, view: str, premise: dict[str, int], conclusion: dict[str, int], tol: float = 1e-9
) -> Implication:
    table = valid_configurations(t, tol)
    hits = [a for a in table.assignments() if all(a[k] == v for k, v in premise.items())]
    bad = [a for a in hits if not all(a[k] == v for k, v in conclusion.items())]
    return Implication(view, premise, conclusion, not bad and bool(hits), len(hits), bad)


@dataclass
class FrReport:
    table1: ConfigTable
    table2: ConfigTable
    table2_sum: complex
    psi_00: complex
    pr_R1: float
    implications: list[Implication]
    joint_pairs: tuple[str, ...]
    jointly_classicable: bool
    witness: tuple[dict[str, int], complex] | None
    probability: float

    @property
    def probability_fraction(self) -> Fraction:
        return Fraction(self.probability).limit_denominator(1000)

    def to_dict(self) -> dict:
        w = None
        if self.witness is not None:
            w = {
                "assignment": self.witness[0],
                "value": [self.witness[1].real, self.witness[1].imag],
                "magnitude": abs(self.witness[1]),
                "text": format_number(self.witness[1]),
            }
        return {
            "table1": self.table1.to_dict(),
            "table2": self.table2.to_dict(),
            "table2_sum": {
                "value": [self.table2_sum.real, self.table2_sum.imag],
                "text": format_number(self.table2_sum),
            },
            "psi_S_Y1_00": {"value": [self.psi_00.real, self.psi_00.imag], "text": format_number(self.psi_00)},
            "pr_Rb_1": {"value": self.pr_R1, "text": format_number(self.pr_R1)},
            "implications": [i.to_dict() for i in self.implications],
            "joint_classicability": {
                "pairs": list(self.joint_pairs),
                "jointly_classicable": self.jointly_classicable,
                "witness": w,
            },
            "stop_probability": {
                "event": {"Y1b": 0, "Y2b": 1},
                "value": self.probability,
                "text": format_number(self.probability),
                "fraction": str(self.probability_fraction),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        out = []
        out.append("Valid configurations, ket side with Y1 = 0")
        out.append(self.table1.to_text().rstrip("\n"))
        out.append("")
        out.append("Valid configurations, ket side with Y1 = 0 and Y2 = 1")
        out.append(self.table2.to_text().rstrip("\n"))
        out.append(f"sum = {format_number(self.table2_sum)}")
        out.append("")
        out.append(f"psi_S,Y1(0,0) = {format_number(self.psi_00)}")
        out.append(f"Pr(Rb=1) = {format_number(self.pr_R1)}")
        out.append("")
        out.append("Implications (support of each agent view):")
        for i in self.implications:
            verdict = "holds" if i.holds else "FAILS"
            out.append(f"  [{i.view}] {i.describe()}: {verdict} ({i.premise_configs} configurations)")
        out.append("")
        pairs = ", ".join(self.joint_pairs)
        if self.jointly_classicable:
            out.append(f"Pairs {{{pairs}}}: jointly classicable")
        else:
            a, v = self.witness
            where = ", ".join(f"{k}={x}" for k, x in a.items())
            out.append(f"Pairs {{{pairs}}}: not jointly classicable")
            out.append(f"  off-diagonal witness {format_number(v)} (|.| = {format_number(abs(v))}) at {where}")
            out.append("  the implications above live in different marginals and cannot be chained")
        out.append("")
        out.append("Stopping event: Y1b = 0 and Y2b = 1")
        out.append(f"Pr = {self.probability_fraction}")
        out.append(f"Pr(Y1b=0, Y2b=1) = {format_number(self.probability)}")
        return "\n".join(out) + "\n"


def fr_implications(m: FrModel, tol: float = 1e-9) -> FrReport:
    """Tables, single-view implications, and the joint-classicability verdict."""
    t1 = valid_configurations(fr_table1_graph(m.U, m.B).exterior(_TABLE_AXES), tol)
    t2 = valid_configurations(fr_table2_graph(m.U, m.B).exterior(_TABLE_AXES), tol)
    psi = m.psi_S_Y1()
    imps = [
        check_implication(m.agent_F.exterior(["Rb", "Sb"]), "F", {"Sb": 1}, {"Rb": 1}, tol),
        check_implication(
            m.agent_Wbar.exterior(["Y1b", "S", "S'"]), "Wbar", {"Y1b": 0}, {"S": 1, "S'": 1}, tol
        ),
        check_implication(m.agent_W.exterior(["Rb", "Y2b"]), "W", {"Rb": 1}, {"Y2b": 0}, tol),
    ]
    pairs = ("R", "S", "Y1", "Y2")
    q = sqmf_from_graph(m.graph, pairs)
    w = off_diagonal_witness(q, pairs)
    joint = w is None or abs(w[1]) <= tol
    return FrReport(
        table1=t1,
        table2=t2,
        table2_sum=complex(sum(t2.values())),
        psi_00=complex(psi.value(S=0, Y1=0)),
        pr_R1=m.pr_R1(),
        implications=imps,
        joint_pairs=pairs,
        jointly_classicable=joint,
        witness=w,
        probability=m.stop_probability(),
    )

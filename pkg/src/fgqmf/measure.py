"""Measurement constructions: projection gadgets, marginalized unitary
interactions and their kappa function, repeated interactions, copying,
undoing, and the separation condition.

Conventions: system variables ``X`` (in) and ``Xt`` (out); probe variables
``xi`` (in) and ``xit`` (out). A unitary acting on (system, probe) is a
square matrix indexed by ``(x, xi)`` flattened system-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import gates
from .graph import FactorGraph, Gadget, GraphError, instantiate, mirror_complete, mirror_name
from .tensor import NamedTensor, is_unitary

__all__ = [
    "ConvergenceResult",
    "InteractionFamily",
    "KappaMatrix",
    "converge",
    "copy_gadget",
    "interaction_gadget",
    "kappa",
    "kappa_by_contraction",
    "kappa_graph",
    "kappa_product",
    "one_shot_family",
    "projection_gadget",
    "random_family",
    "separation_check",
    "separation_violations",
    "undo_check",
    "undo_graph",
    "unitary_interaction_gadget",
]

CONVERGENCE_THRESHOLD = 1e-6


class NotUnitaryError(ValueError):
    pass


def _require_unitary(m: np.ndarray, what: str, tol: float = 1e-12):
    if not is_unitary(m, tol):
        raise NotUnitaryError(f"{what} is not unitary (tol {tol:g})")


# -- interaction families and kappa ---------------------------------------------


@dataclass(frozen=True)
class InteractionFamily:
    """Probe distribution ``p_xi`` and one probe unitary per system value.

    ``unitaries[z][xit, xi]`` acts on the probe when the system value is
    ``z``.
    """

    p_xi: np.ndarray
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.p_xi, dtype=float)
        us = tuple(np.asarray(u, dtype=np.complex128) for u in self.unitaries)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("p_xi must be a probability vector")
        if not us:
            raise ValueError("family needs at least one unitary")
        for z, u in enumerate(us):
            if u.shape != (p.size, p.size):
                raise ValueError(f"U_{z} has shape {u.shape}, expected {(p.size, p.size)}")
            _require_unitary(u, f"U_{z}")
        object.__setattr__(self, "p_xi", p)
        object.__setattr__(self, "unitaries", us)

    @property
    def system_size(self) -> int:
        return len(self.unitaries)

    @property
    def probe_size(self) -> int:
        return self.p_xi.size

    def u_tilde(self) -> np.ndarray:
        """Controlled unitary on (system, probe): ``delta(x, xt) U_x[xit, xi]``."""
        M, K = self.system_size, self.probe_size
        out = np.zeros((M, K, M, K), dtype=np.complex128)
        for x, u in enumerate(self.unitaries):
            out[x, :, x, :] = u
        return out.reshape(M * K, M * K)


def one_shot_family(M: int, p_xi: Sequence[float] | None = None) -> InteractionFamily:
    """``U_z[xit, xi] = f_oplus(z, xi, -xit)``: the probe is shifted by ``z`` mod ``M``.

    Any full-support ``p_xi`` gives ``kappa = f_eq``.
    """
    if M < 2:
        raise ValueError("one-shot family needs M >= 2")
    p = np.full(M, 1.0 / M) if p_xi is None else np.asarray(p_xi, dtype=float)
    f = gates.f_oplus(M, (1, 1, -1))
    return InteractionFamily(p, tuple(f[z].T.copy() for z in range(M)))


def random_family(
    M: int, K: int, rng: np.random.Generator, p_xi: Sequence[float] | None = None
) -> InteractionFamily:
    """Haar-random probe unitaries; ``p_xi`` defaults to a random full-support pmf."""
    from scipy.stats import unitary_group

    if p_xi is None:
        p = rng.dirichlet(np.ones(K))
    else:
        p = np.asarray(p_xi, dtype=float)
    us = tuple(unitary_group.rvs(K, random_state=rng) if K > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
               for _ in range(M))
    return InteractionFamily(p, us)


@dataclass(frozen=True)
class KappaMatrix:
    """Square matrix over (z, z') with unit diagonal, Hermitian, magnitudes <= 1."""

    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.values, dtype=np.complex128)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("kappa must be a square matrix")
        tol = 1e-12
        if np.max(np.abs(np.diag(k) - 1.0)) > tol:
            raise ValueError("kappa diagonal must be 1")
        if np.max(np.abs(k - k.conj().T)) > tol:
            raise ValueError("kappa must be Hermitian")
        if np.max(np.abs(k)) > 1.0 + tol:
            raise ValueError("kappa entries must have magnitude <= 1")
        k.setflags(write=False)
        object.__setattr__(self, "values", k)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def max_off_diagonal(self) -> float:
        if self.size < 2:
            return 0.0
        off = self.values[~np.eye(self.size, dtype=bool)]
        return float(np.max(np.abs(off)))

    def is_projection(self, tol: float = 1e-12) -> bool:
        return self.max_off_diagonal() <= tol


def kappa(fam: InteractionFamily) -> KappaMatrix:
    """``kappa(z, z') = sum_xi p(xi) <U_z'[:, xi], U_z[:, xi]>``."""
    M = fam.system_size
    out = np.empty((M, M), dtype=np.complex128)
    for z in range(M):
        for zp in range(M):
            cols = np.sum(np.conj(fam.unitaries[zp]) * fam.unitaries[z], axis=0)
            out[z, zp] = np.dot(fam.p_xi, cols)
    return KappaMatrix(out)


def kappa_by_contraction(fam: InteractionFamily) -> NamedTensor:
    """kappa as the exterior function of its factor graph, over ``(Z, Z')``."""
    return kappa_graph(fam).exterior(["Z", "Z'"])


def kappa_graph(fam: InteractionFamily) -> FactorGraph:
    """Probe prepared in ``p_xi``, evolved by ``U_Z`` on both sides, then summed out.

    Its exterior function over the pair ``(Z, Z')`` is kappa.
    """
    M, K = fam.system_size, fam.probe_size
    half = FactorGraph("kappa")
    for v, n in (("Z", M), ("xi", K), ("xit", K)):
        half.add_variable(v, n)
    stacked = np.stack(fam.unitaries)  # [z, xit, xi]
    half.add_factor("U", NamedTensor(["Z", "xit", "xi"], stacked))
    g = mirror_complete(half)
    g.add_variable("P", K)
    g.add_factor("p", NamedTensor(["P"], fam.p_xi), kind="constant")
    g.add_equality("prep", ["P", "xi", "xi'"])
    g.add_equality("marg", ["xit", "xit'"], kind="termination")
    g.outputs = ["Z", "Z'"]
    return g


def kappa_product(kappas: Sequence[KappaMatrix]) -> KappaMatrix:
    """Entrywise product: the net kappa of several successive interactions."""
    kappas = list(kappas)
    if not kappas:
        raise ValueError("need at least one kappa")
    n = kappas[0].size
    out = np.ones((n, n), dtype=np.complex128)
    for k in kappas:
        if k.size != n:
            raise ValueError(f"kappa dimension mismatch: {k.size} vs {n}")
        out = out * k.values
    return KappaMatrix(out)


@dataclass
class ConvergenceResult:
    converged: bool
    n: int
    max_off_diagonal: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "n": self.n,
            "max_off_diagonal": self.max_off_diagonal,
            "threshold": self.threshold,
        }


def converge(
    kappas: KappaMatrix | Iterable[KappaMatrix],
    threshold: float = CONVERGENCE_THRESHOLD,
    max_n: int = 1_000_000,
) -> ConvergenceResult:
    """Smallest ``N`` with max off-diagonal ``|prod kappa_nu| <= threshold``.

    A single :class:`KappaMatrix` is repeated; an iterable is consumed in
    order. Stops at ``max_n`` interactions and reports non-convergence
    instead of raising.
    """
    if isinstance(kappas, KappaMatrix):
        m = kappas.max_off_diagonal()
        if m <= threshold:
            return ConvergenceResult(True, 1, m, threshold)
        if m >= 1.0:
            return ConvergenceResult(False, max_n, m**max_n if m > 0 else 0.0, threshold)
        n = math.ceil(math.log(threshold) / math.log(m))
        # guard against rounding in the logarithms
        while n > 1 and _powmax(kappas, n - 1) <= threshold:
            n -= 1
        while _powmax(kappas, n) > threshold:
            n += 1
        if n > max_n:
            return ConvergenceResult(False, max_n, _powmax(kappas, max_n), threshold)
        return ConvergenceResult(True, n, _powmax(kappas, n), threshold)
    prod = None
    n = 0
    m = 1.0
    for k in kappas:
        n += 1
        prod = k.values if prod is None else prod * k.values
        off = prod[~np.eye(prod.shape[0], dtype=bool)]
        m = float(np.max(np.abs(off))) if off.size else 0.0
        if m <= threshold:
            return ConvergenceResult(True, n, m, threshold)
        if n >= max_n:
            break
    return ConvergenceResult(False, n, m, threshold)


def _powmax(k: KappaMatrix, n: int) -> float:
    off = k.values[~np.eye(k.size, dtype=bool)]
    return float(np.max(np.abs(off) ** n)) if off.size else 0.0


# -- gadgets ----------------------------------------------------------------------


def _unitary_factor(half: FactorGraph, fid: str, u: np.ndarray, outs, ins, stage=None):
    cards = [half.variables[v].cardinality for v in list(outs) + list(ins)]
    half.add_factor(fid, NamedTensor(list(outs) + list(ins), np.asarray(u).reshape(cards)), stage=stage)


def projection_gadget(B, with_result: bool = False) -> Gadget:
    """Projection measurement in the basis of the columns of ``B``.

    Boundary ``(X, Xt, X', Xt')``, plus the classical result ``Z`` when
    ``with_result`` is set. Internally: ``B^H``, an equality constraint
    tying ket and bra (and ``Z``), then ``B``; mirrored on the bra side.
    """
    B = np.asarray(B, dtype=np.complex128)
    _require_unitary(B, "B")
    M = B.shape[0]
    half = FactorGraph("projection")
    for v in ("X", "Xm", "Xn", "Xt"):
        half.add_variable(v, M)
    _unitary_factor(half, "Bh", B.conj().T, ["Xm"], ["X"])
    _unitary_factor(half, "B", B, ["Xt"], ["Xn"])
    g = mirror_complete(half)
    axes = ["Xm", "Xn", "Xm'", "Xn'"]
    if with_result:
        g.add_variable("Z", M)
        axes.append("Z")
    g.add_equality("meas", axes)
    boundary = ("X", "Xt", "X'", "Xt'") + (("Z",) if with_result else ())
    roles = {"system_out": ("Xt", "Xt'")}
    if with_result:
        roles["result"] = ("Z",)
    return Gadget("projection", g, boundary, roles)


def unitary_interaction_gadget(
    u_tilde, p_xi: Sequence[float], marginalize_probe: bool = True
) -> Gadget:
    """System interacts once with a probe prepared in the mixture ``p_xi``.

    With ``marginalize_probe`` the probe output is summed out (an equality
    between ``xit`` and ``xit'``); otherwise ``xit, xit'`` join the boundary.
    """
    p = np.asarray(p_xi, dtype=float)
    U = np.asarray(u_tilde, dtype=np.complex128)
    _require_unitary(U, "interaction unitary")
    K = p.size
    if U.shape[0] % K:
        raise ValueError(f"interaction of size {U.shape[0]} does not factor over a probe of size {K}")
    M = U.shape[0] // K
    half = FactorGraph("interaction")
    for v, n in (("X", M), ("Xt", M), ("xi", K), ("xit", K)):
        half.add_variable(v, n)
    _unitary_factor(half, "U", U, ["Xt", "xit"], ["X", "xi"])
    g = mirror_complete(half)
    g.add_variable("P", K)
    g.add_factor("p", NamedTensor(["P"], p), kind="constant")
    g.add_equality("prep", ["P", "xi", "xi'"])
    boundary = ("X", "Xt", "X'", "Xt'")
    if marginalize_probe:
        g.add_equality("marg", ["xit", "xit'"], kind="termination")
    else:
        boundary += ("xit", "xit'")
    roles = {
        "system_out": ("Xt", "Xt'"),
        "probe_out": ("xit", "xit'"),
        "interaction": ("U", "U'"),
    }
    return Gadget("interaction", g, boundary, roles)


def interaction_gadget(fam: InteractionFamily, marginalize_probe: bool = True) -> Gadget:
    """Marginalized controlled interaction built from an :class:`InteractionFamily`.

    Its closed exterior function is ``f_eq(X, Xt) f_eq(X', Xt') kappa(X, X')``.
    """
    return unitary_interaction_gadget(fam.u_tilde(), fam.p_xi, marginalize_probe)


def copy_gadget(M: int) -> Gadget:
    """Fully entangled copy ``Xb`` of ``X`` via a modular-adder with a zero probe.

    Boundary ``(X, Xt, Xb, X', Xt', Xb')``; in every valid configuration
    ``Xb = Xt = X`` and ``Xb' = Xt' = X'``.
    """
    if M < 2:
        raise ValueError("copy gadget needs M >= 2")
    half = FactorGraph("copy")
    for v in ("X", "Xt", "Xb", "zeta", "xi"):
        half.add_variable(v, M)
    half.add_constant("zero", "xi", 0)
    half.add_equality("fan", ["X", "Xt", "zeta"])
    half.add_gate("add", "f_oplus", ["zeta", "xi", "Xb"], M=M, signs=[1, 1, -1])
    g = mirror_complete(half)
    roles = {
        "system_out": ("Xt", "Xt'"),
        "probe_out": ("Xb", "Xb'"),
        "interaction": ("fan", "add", "fan'", "add'"),
    }
    return Gadget("copy", g, ("X", "Xt", "Xb", "X'", "Xt'", "Xb'"), roles)


# -- undoing ------------------------------------------------------------------------


def undo_graph(u_tilde, p_xi: Sequence[float], refeed: bool = True) -> FactorGraph:
    """An interaction followed by its adjoint on (system, probe).

    With ``refeed`` the probe output of the first interaction is fed into
    the adjoint; otherwise that probe is marginalized and the adjoint gets
    a fresh probe. Outputs are ``(X, X2, X', X2')``; the first interaction
    is the gadget instance ``"meas"``.
    """
    U = np.asarray(u_tilde, dtype=np.complex128)
    p = np.asarray(p_xi, dtype=float)
    K = p.size
    M = U.shape[0] // K
    g = FactorGraph("undo" if refeed else "undo-marginalized")
    meas = unitary_interaction_gadget(U, p, marginalize_probe=False)
    g = instantiate(
        g, meas, {"X": "X", "X'": "X'", "Xt": "X1", "Xt'": "X1'", "xit": "xi1", "xit'": "xi1'"},
        prefix="meas.", stage=1,
    )
    if refeed:
        probe_in = "xi1"
    else:
        g.add_equality("marg1", ["xi1", "xi1'"], stage=2, kind="termination")
        g.add_pair("xi1b", K)
        g.add_variable("P2", K)
        g.add_factor("p2", NamedTensor(["P2"], p), kind="constant", stage=2)
        g.add_equality("prep2", ["P2", "xi1b", "xi1b'"], stage=2)
        probe_in = "xi1b"
    g.add_pair("X2", M)
    g.add_pair("xi2", K)
    Uh = U.conj().T.reshape(M, K, M, K)
    g.add_factor("undo", NamedTensor(["X2", "xi2", "X1", probe_in], Uh), stage=3)
    g.add_factor(
        "undo'",
        NamedTensor(["X2'", "xi2'", "X1'", mirror_name(probe_in)], np.conj(Uh)),
        stage=3,
    )
    g.add_equality("marg2", ["xi2", "xi2'"], stage=4, kind="termination")
    g.outputs = ["X", "X2", "X'", "X2'"]
    return g


def undo_check(u_tilde, p_xi: Sequence[float], refeed: bool = True, tol: float = 1e-12) -> bool:
    """True iff the interaction followed by its adjoint leaves the system untouched.

    Compares the exterior function of :func:`undo_graph` against the plain
    double identity wire ``f_eq(X, X2) f_eq(X', X2')``.
    """
    U = np.asarray(u_tilde, dtype=np.complex128)
    _require_unitary(U, "interaction unitary")
    g = undo_graph(U, p_xi, refeed)
    ext = g.exterior(["X", "X2", "X'", "X2'"])
    M = ext.cardinality("X")
    ident = np.einsum("ab,cd->abcd", np.eye(M), np.eye(M))
    return bool(np.max(np.abs(ext.data - ident)) <= tol)


# -- separation condition -----------------------------------------------------------


def separation_violations(
    g: FactorGraph, interaction: str, terminations: Sequence[str] | None = None
) -> list[str]:
    """Factors after the interaction that touch both probe and system descendants.

    ``interaction`` names a gadget instance (its prefix) with ``system_out``
    and ``probe_out`` roles. Every factor must carry a ``stage``. The
    period of interest ends at the termination factors (by default every
    factor of kind ``"termination"``); descendants are not followed through
    them.
    """
    missing = [fid for fid, f in g.factors.items() if f.stage is None]
    if missing:
        raise GraphError(f"factors without stage annotation: {missing}")
    try:
        inst = g.instances[interaction]
    except KeyError:
        raise GraphError(f"unknown gadget instance {interaction!r}") from None
    for role in ("system_out", "probe_out"):
        if role not in inst.roles:
            raise GraphError(f"gadget instance {interaction!r} has no {role!r} role")
    if terminations is None:
        terminations = [fid for fid, f in g.factors.items() if f.kind == "termination"]
    stop = set(terminations) | set(inst.factor_ids)
    t0 = max(g.factors[fid].stage for fid in inst.factor_ids)
    later = [fid for fid, f in g.factors.items() if f.stage > t0 and fid not in stop]

    def descendants(seeds):
        reached = set(seeds)
        changed = True
        while changed:
            changed = False
            for fid in later:
                vs = set(g.factors[fid].variables)
                if vs & reached and not vs <= reached:
                    reached |= vs
                    changed = True
        return reached

    probe = descendants(inst.roles["probe_out"])
    system = descendants(inst.roles["system_out"])
    bad = []
    for fid in later:
        vs = set(g.factors[fid].variables)
        if vs & probe and vs & system:
            bad.append(fid)
    return bad


def separation_check(
    g: FactorGraph, interaction: str, terminations: Sequence[str] | None = None
) -> bool:
    """True iff, after the interaction, the probe never again meets the system
    before the terminating identities."""
    return not separation_violations(g, interaction, terminations)

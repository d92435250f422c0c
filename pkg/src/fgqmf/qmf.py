"""Quantum mass functions: PSD-kernel checks, certification, marginals, pmfs.

An SQMF is a complex function ``q(x, x')`` over mirror pairs of variables
that is Hermitian, positive semidefinite as a matrix indexed by
``(x; x')``, and sums to one.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import FactorGraph, mirror_name
from .tensor import NamedTensor, as_matrix, contract

__all__ = [
    "KernelCheck",
    "NormalizationWarning",
    "Pmf",
    "Sqmf",
    "SqmfError",
    "certify_sqmf",
    "default_tol",
    "is_psd_kernel",
    "marginalize",
    "measurement_pmf",
    "sqmf_from_graph",
]

NORM_HARD_TOL = 1e-6


def default_tol() -> float:
    """Predicate tolerance; ``QMF_TOL`` in the environment overrides 1e-9."""
    return float(os.environ.get("QMF_TOL", "1e-9"))


class SqmfError(ValueError):
    """Certification failure. ``invariant`` is one of ``pairing``,
    ``hermitian``, ``psd``, ``normalization``, ``classicability``."""

    def __init__(self, invariant: str, message: str, check: "KernelCheck | None" = None):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.check = check


class NormalizationWarning(UserWarning):
    pass


@dataclass
class KernelCheck:
    """Outcome of :func:`is_psd_kernel`; truthy iff the kernel passed."""

    hermitian: bool
    psd: bool
    hermitian_error: float
    min_eigenvalue: float
    max_eigenvalue: float
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.hermitian and self.psd

    def __bool__(self):
        return self.ok


def _pair_names(t: NamedTensor, pairs) -> tuple[list[str], list[str]]:
    kets, bras = [], []
    for p in pairs:
        if isinstance(p, str):
            a, b = p, mirror_name(p)
        else:
            a, b = p
        kets.append(a)
        bras.append(b)
    used = kets + bras
    if sorted(used) != sorted(t.names):
        unpaired = sorted(set(t.names) - set(used))
        missing = sorted(set(used) - set(t.names))
        raise SqmfError(
            "pairing",
            f"axes {list(t.names)} do not form the pairs {list(zip(kets, bras))}"
            + (f"; unpaired {unpaired}" if unpaired else "")
            + (f"; missing {missing}" if missing else ""),
        )
    for a, b in zip(kets, bras):
        if t.cardinality(a) != t.cardinality(b):
            raise SqmfError("pairing", f"pair ({a}, {b}) has unequal cardinalities")
    return kets, bras


def _unflatten(index: int, shape: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(index, shape)) if shape else ()


def is_psd_kernel(t: NamedTensor, pairs, tol: float | None = None) -> KernelCheck:
    """Check Hermitian symmetry and positive semidefiniteness.

    The tensor is flattened into the matrix ``Q[x, x']`` with ``x`` running
    over the ket axes and ``x'`` over the bra axes. It passes iff
    ``max |Q - Q^H| <= tol`` and its smallest eigenvalue is at least
    ``-tol`` times the largest eigenvalue magnitude.
    """
    tol = default_tol() if tol is None else tol
    kets, bras = _pair_names(t, pairs)
    Q = as_matrix(t, kets, bras)
    shape = [t.cardinality(k) for k in kets]
    diff = np.abs(Q - Q.conj().T)
    herr = float(diff.max()) if diff.size else 0.0
    witness = None
    hermitian = herr <= tol
    if not hermitian:
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        witness = {
            "kind": "hermitian",
            "x": _unflatten(i, shape),
            "x'": _unflatten(j, shape),
            "value": complex(Q[i, j]),
            "mirror_value": complex(Q[j, i]),
        }
    evals = np.linalg.eigvalsh(0.5 * (Q + Q.conj().T))
    lo, hi = float(evals[0]), float(evals[-1])
    scale = float(np.max(np.abs(evals))) if evals.size else 0.0
    psd = lo >= -tol * scale
    if not psd and witness is None:
        witness = {"kind": "psd", "eigenvalue": lo, "spectral_radius": scale}
    return KernelCheck(hermitian, psd, herr, lo, hi, witness)


@dataclass(frozen=True)
class Sqmf:
    """A certified simple quantum mass function.

    ``pairs`` lists ``(ket, bra)`` axis names; the tensor's axes are exactly
    these names (in any order).
    """

    tensor: NamedTensor
    pairs: tuple[tuple[str, str], ...]
    check: KernelCheck | None = field(default=None, compare=False, repr=False)

    @property
    def kets(self) -> list[str]:
        return [a for a, _ in self.pairs]

    @property
    def total(self) -> complex:
        return complex(self.tensor.data.sum())

    def pair(self, name: str) -> tuple[str, str]:
        for p in self.pairs:
            if name in p:
                return p
        raise KeyError(f"no pair named {name!r}; pairs are {[a for a, _ in self.pairs]}")

    def matrix(self) -> np.ndarray:
        return as_matrix(self.tensor, self.kets, [b for _, b in self.pairs])

    def canonical(self) -> NamedTensor:
        """Tensor with axes ordered ``x1, x1', x2, x2', ...``."""
        return self.tensor.transpose([n for p in self.pairs for n in p])


def _normalize_pairs(pairs) -> tuple[tuple[str, str], ...]:
    out = []
    for p in pairs:
        if isinstance(p, str):
            out.append((p, mirror_name(p)))
        else:
            out.append((p[0], p[1]))
    return tuple(out)


def certify_sqmf(t: NamedTensor, pairs, tol: float | None = None) -> Sqmf:
    """Certify ``t`` as an SQMF over ``pairs``; raise :class:`SqmfError` otherwise.

    Normalization drift above ``tol`` but within 1e-6 emits a
    :class:`NormalizationWarning`; beyond that it is an error.
    """
    tol = default_tol() if tol is None else tol
    pairs = _normalize_pairs(pairs)
    check = is_psd_kernel(t, pairs, tol)
    if not check.hermitian:
        raise SqmfError(
            "hermitian",
            f"max |q(x,x') - conj(q(x',x))| = {check.hermitian_error:.3g} > {tol:g}; "
            f"witness {check.witness}",
            check,
        )
    if not check.psd:
        raise SqmfError(
            "psd",
            f"smallest eigenvalue {check.min_eigenvalue:.3g} below "
            f"-{tol:g} x spectral radius",
            check,
        )
    total = complex(t.data.sum())
    drift = abs(total - 1.0)
    if drift > NORM_HARD_TOL:
        raise SqmfError("normalization", f"total sum is {total:.12g}, not 1", check)
    if drift > tol:
        warnings.warn(
            f"SQMF total sum drifts from 1 by {drift:.3g}", NormalizationWarning, stacklevel=2
        )
    return Sqmf(t, pairs, check)


def marginalize(q: Sqmf, keep_pairs, tol: float | None = None) -> Sqmf:
    """Sum over both members of every pair not in ``keep_pairs``.

    The marginal is re-certified; a marginal of an SQMF is again an SQMF.
    """
    wanted = []
    for p in keep_pairs:
        name = p if isinstance(p, str) else p[0]
        wanted.append(q.pair(name))
    if not wanted:
        raise ValueError("keep_pairs must be nonempty")
    if len(set(wanted)) != len(wanted):
        raise ValueError("duplicate pairs in keep_pairs")
    keep = [n for p in wanted for n in p]
    t = contract([q.tensor], keep)
    return certify_sqmf(t, wanted, tol)


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over unprimed variables."""

    names: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != len(self.names):
            raise ValueError("probs must have one dimension per variable")
        if np.any(p < -1e-12):
            raise ValueError(f"negative probability {p.min():.3g}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum():.12g}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, values) -> float:
        if not isinstance(values, tuple):
            values = (values,)
        return float(self.probs[values])

    def prob(self, **values: int) -> float:
        return float(self.probs[tuple(values[n] for n in self.names)])


def measurement_pmf(q: Sqmf, measured_pairs, tol: float | None = None) -> Pmf:
    """Joint pmf of measured pairs: the diagonal of the marginal onto them.

    Every requested pair set must be jointly classicable in ``q``;
    otherwise the diagonal is not a measurement distribution and
    :class:`SqmfError` (``classicability``) is raised.
    """
    from .classical import off_diagonal_witness

    tol = default_tol() if tol is None else tol
    m = marginalize(q, measured_pairs, tol)
    w = off_diagonal_witness(m, [a for a, _ in m.pairs])
    if w is not None and abs(w[1]) > tol:
        raise SqmfError(
            "classicability",
            f"pairs {[a for a, _ in m.pairs]} are not jointly classicable "
            f"(off-diagonal value {w[1]:.3g} at {w[0]})",
        )
    t = m.canonical()
    n = len(m.pairs)
    shape = [t.shape[2 * i] for i in range(n)]
    diag = np.empty(shape)
    for idx in np.ndindex(*shape):
        diag[idx] = t.data[tuple(v for v in idx for _ in (0, 1))].real
    return Pmf(tuple(a for a, _ in m.pairs), diag)


def sqmf_from_graph(g: FactorGraph, pairs=None, tol: float | None = None) -> Sqmf:
    """Contract ``g`` onto the given mirror pairs and certify the result.

    ``pairs`` defaults to the graph's declared measurements, or to every
    mirror pair of the graph.
    """
    if pairs is None:
        pairs = g.measurements or [a for a, _ in g.pairs()]
    pairs = _normalize_pairs(pairs)
    for a, b in pairs:
        if not g.is_mirror_pair(a, b):
            raise SqmfError("pairing", f"({a}, {b}) is not a mirror pair of the graph")
    t = g.exterior([n for p in pairs for n in p])
    return certify_sqmf(t, pairs, tol)

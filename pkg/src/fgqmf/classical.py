"""Valid configurations and the classical / classicable hierarchy."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qmf import Sqmf, default_tol
from .tensor import NamedTensor, contract

__all__ = [
    "ClassicalityReport",
    "ConfigTable",
    "EnumerationCapError",
    "classicality_report",
    "format_number",
    "is_classical",
    "is_jointly_classicable",
    "off_diagonal_witness",
    "valid_configurations",
]

ENUMERATION_CAP = 2**24


class EnumerationCapError(ValueError):
    pass


ZERO_SNAP = 1e-14


def format_number(z: complex, digits: int = 12) -> str:
    """Deterministic text form: ``digits`` significant digits, no ``-0``.

    Parts smaller than ``ZERO_SNAP`` in magnitude print as ``0``.
    """

    def one(x: float) -> str:
        if abs(x) < ZERO_SNAP:
            return "0"
        s = f"{x:.{digits}g}"
        return "0" if s in ("-0", "0", "-0.0") else s

    z = complex(z)
    re, im = one(z.real), one(z.imag)
    if im == "0":
        return re
    sign = "-" if im.startswith("-") else "+"
    mag = im.lstrip("-")
    if re == "0":
        return f"{'-' if sign == '-' else ''}{mag}j"
    return f"{re}{sign}{mag}j"


@dataclass
class ConfigTable:
    """Valid configurations of a function, one row per nonzero value.

    Rows are sorted lexicographically by their value tuples in column order.
    """

    names: tuple[str, ...]
    rows: list[tuple[tuple[int, ...], complex]] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def values(self) -> list[complex]:
        return [v for _, v in self.rows]

    def assignments(self) -> list[dict[str, int]]:
        return [dict(zip(self.names, a)) for a, _ in self.rows]

    def to_text(self, digits: int = 12) -> str:
        header = list(self.names) + ["value"]
        body = [[str(v) for v in a] + [format_number(z, digits)] for a, z in self.rows]
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + body]
        return "\n".join(lines) + "\n"

    def to_dict(self, digits: int = 12) -> dict:
        return {
            "columns": list(self.names),
            "rows": [
                {
                    "assignment": dict(zip(self.names, a)),
                    "value": [float(np.real(z)), float(np.imag(z))],
                    "text": format_number(z, digits),
                }
                for a, z in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _tensor_of(q) -> NamedTensor:
    return q.tensor if isinstance(q, Sqmf) else q


def valid_configurations(
    q: Sqmf | NamedTensor, tol: float | None = None, cap: int = ENUMERATION_CAP
) -> ConfigTable:
    """All assignments with ``|q| > tol``, with their values.

    Accepts a certified :class:`Sqmf` or any :class:`NamedTensor` (for
    instance a product of ket-side factors). Columns follow the tensor's
    axis order.
    """
    tol = default_tol() if tol is None else tol
    t = _tensor_of(q)
    if t.size > cap:
        raise EnumerationCapError(f"{t.size} configurations exceed the cap of {cap}")
    idx = np.argwhere(np.abs(t.data) > tol)
    rows = [(tuple(int(v) for v in i), complex(t.data[tuple(i)])) for i in idx]
    rows.sort(key=lambda r: r[0])
    return ConfigTable(t.names, rows)


def is_classical(q: Sqmf, pair, tol: float | None = None) -> bool:
    """True iff ``x_k == x_k'`` in every valid configuration of ``q``."""
    tol = default_tol() if tol is None else tol
    a, b = q.pair(pair if isinstance(pair, str) else pair[0])
    t = q.tensor.transpose([a, b] + [n for n in q.tensor.names if n not in (a, b)])
    mask = np.abs(t.data) > tol
    off = ~np.eye(t.shape[0], dtype=bool)
    return not bool(np.any(mask[off]))


def off_diagonal_witness(q: Sqmf, pairs) -> tuple[dict[str, int], complex] | None:
    """Largest-magnitude entry of the marginal onto ``pairs`` off its diagonal.

    Returns ``(assignment, value)`` or ``None`` if every configuration lies
    on the diagonal (possible only with cardinality-1 variables).
    """
    wanted = [q.pair(n) for n in _names(pairs)]
    t = contract([q.tensor], [n for p in wanted for n in p])
    n = len(wanted)
    best = None
    for idx in np.ndindex(*t.shape):
        if all(idx[2 * i] == idx[2 * i + 1] for i in range(n)):
            continue
        v = complex(t.data[idx])
        if best is None or abs(v) > abs(best[1]):
            best = (dict(zip(t.names, (int(i) for i in idx))), v)
    return best


def _names(pairs) -> list[str]:
    return [p if isinstance(p, str) else p[0] for p in pairs]


def is_jointly_classicable(q: Sqmf, pairs, tol: float | None = None) -> bool:
    """True iff the marginal onto ``pairs`` vanishes off the diagonal."""
    tol = default_tol() if tol is None else tol
    if not pairs:
        raise ValueError("pairs must be nonempty")
    w = off_diagonal_witness(q, pairs)
    return w is None or abs(w[1]) <= tol


@dataclass
class ClassicalityReport:
    classical: dict[str, bool]
    classicable: dict[str, bool]
    maximal_jointly_classicable: list[tuple[str, ...]]
    max_subset_size: int
    witnesses: dict[tuple[str, ...], float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "classical": self.classical,
            "classicable": self.classicable,
            "maximal_jointly_classicable": [list(s) for s in self.maximal_jointly_classicable],
            "max_subset_size": self.max_subset_size,
        }


def classicality_report(q: Sqmf, max_size: int = 4, tol: float | None = None) -> ClassicalityReport:
    """Per-pair classical / classicable flags and the maximal jointly
    classicable subsets of size at most ``max_size``.

    A subset larger than ``max_size`` is never examined, so a listed subset
    is maximal only among subsets within the cap.
    """
    tol = default_tol() if tol is None else tol
    kets = q.kets
    if len(kets) > 16:
        raise EnumerationCapError(f"{len(kets)} pairs: subset search is capped at 16 pairs")
    classical = {k: is_classical(q, k, tol) for k in kets}
    classicable = {k: is_jointly_classicable(q, [k], tol) for k in kets}
    good: list[tuple[str, ...]] = []
    witnesses: dict[tuple[str, ...], float] = {}
    for r in range(1, min(max_size, len(kets)) + 1):
        for sub in itertools.combinations(kets, r):
            # supersets of a failing set fail too: marginals of a diagonal kernel are diagonal
            if r > 1 and not all(s in good for s in itertools.combinations(sub, r - 1)):
                continue
            w = off_diagonal_witness(q, list(sub))
            mag = 0.0 if w is None else abs(w[1])
            witnesses[sub] = mag
            if mag <= tol:
                good.append(sub)
    maximal = [s for s in good if not any(set(s) < set(t) for t in good)]
    return ClassicalityReport(classical, classicable, maximal, max_size, witnesses)

"""Dense complex tensors with named axes, and contraction over shared axes.

A :class:`NamedTensor` is the value type for every factor in a factor graph.
:func:`contract` computes exterior functions: the sum, over all axes not
kept, of the product of the given factors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Axis",
    "AxisError",
    "NamedTensor",
    "as_matrix",
    "contract",
    "contract_naive",
    "elimination_order",
    "is_unitary",
    "peak_intermediate_size",
]


class AxisError(ValueError):
    """Raised for unknown axes, duplicate names or cardinality mismatches."""


@dataclass(frozen=True)
class Axis:
    name: str
    cardinality: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise AxisError(f"axis name must be a non-empty string, got {self.name!r}")
        if int(self.cardinality) != self.cardinality or self.cardinality < 1:
            raise AxisError(
                f"axis {self.name!r}: cardinality must be a positive integer, "
                f"got {self.cardinality!r}"
            )


class NamedTensor:
    """Immutable complex array whose axes carry names.

    Parameters
    ----------
    names : sequence of str
        Axis names, in storage order.
    data : array_like
        Complex values; ``data.shape`` gives the axis cardinalities.
    """

    __slots__ = ("_axes", "_data", "_index")

    def __init__(self, names: Sequence[str], data):
        names = tuple(names)
        arr = np.array(data, dtype=np.complex128)
        if arr.ndim != len(names):
            raise AxisError(
                f"{len(names)} axis names given for an array with {arr.ndim} dimensions"
            )
        if len(set(names)) != len(names):
            raise AxisError(f"duplicate axis names in {names}")
        self._axes = tuple(Axis(n, int(c)) for n, c in zip(names, arr.shape))
        arr.setflags(write=False)
        self._data = arr
        self._index = {n: i for i, n in enumerate(names)}

    @classmethod
    def from_axes(cls, axes: Sequence[Axis], flat: Iterable[complex]) -> "NamedTensor":
        """Build from a row-major flat list of values."""
        shape = tuple(a.cardinality for a in axes)
        arr = np.asarray(list(flat), dtype=np.complex128)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise AxisError(
                f"expected {int(np.prod(shape, dtype=np.int64))} values for shape {shape}, "
                f"got {arr.size}"
            )
        return cls([a.name for a in axes], arr.reshape(shape))

    @classmethod
    def scalar(cls, value: complex) -> "NamedTensor":
        return cls((), np.asarray(value, dtype=np.complex128))

    @property
    def axes(self) -> tuple[Axis, ...]:
        return self._axes

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self._axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def size(self) -> int:
        return int(self._data.size)

    def axis(self, name: str) -> Axis:
        try:
            return self._axes[self._index[name]]
        except KeyError:
            raise AxisError(f"tensor has no axis {name!r}; axes are {self.names}") from None

    def has_axis(self, name: str) -> bool:
        return name in self._index

    def cardinality(self, name: str) -> int:
        return self.axis(name).cardinality

    def transpose(self, names: Sequence[str]) -> "NamedTensor":
        names = tuple(names)
        if sorted(names) != sorted(self.names):
            raise AxisError(f"cannot reorder axes {self.names} as {names}")
        perm = [self._index[n] for n in names]
        return NamedTensor(names, np.transpose(self._data, perm))

    def rename(self, mapping: Mapping[str, str]) -> "NamedTensor":
        return NamedTensor([mapping.get(n, n) for n in self.names], self._data)

    def conj(self) -> "NamedTensor":
        return NamedTensor(self.names, np.conj(self._data))

    def scale(self, alpha: complex) -> "NamedTensor":
        return NamedTensor(self.names, alpha * self._data)

    def value(self, **assignment: int) -> complex:
        return complex(self._data[tuple(assignment[n] for n in self.names)])

    def item(self) -> complex:
        if self._data.ndim != 0:
            raise AxisError("item() requires a 0-axis tensor")
        return complex(self._data)

    def flat(self) -> np.ndarray:
        """Row-major flat view of the values."""
        return self._data.reshape(-1)

    def allclose(self, other: "NamedTensor", atol: float = 1e-12) -> bool:
        if sorted(self.names) != sorted(other.names):
            return False
        other = other.transpose(self.names)
        if other.shape != self.shape:
            return False
        return bool(np.allclose(self._data, other.data, rtol=0.0, atol=atol))

    def max_abs_diff(self, other: "NamedTensor") -> float:
        other = other.transpose(self.names)
        if other.shape != self.shape:
            raise AxisError(f"shape mismatch {self.shape} vs {other.shape}")
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self._data - other.data)))

    def __eq__(self, other):
        if not isinstance(other, NamedTensor):
            return NotImplemented
        return self._axes == other._axes and np.array_equal(self._data, other._data)

    __hash__ = None

    def __repr__(self):
        axes = ", ".join(f"{a.name}:{a.cardinality}" for a in self._axes)
        return f"NamedTensor([{axes}])"


def as_matrix(t: NamedTensor, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
    """Flatten ``t`` into a matrix with row-major grouped row and column axes."""
    rows, cols = list(rows), list(cols)
    tt = t.transpose(rows + cols)
    nr = int(np.prod([t.cardinality(n) for n in rows], dtype=np.int64))
    nc = int(np.prod([t.cardinality(n) for n in cols], dtype=np.int64))
    return tt.data.reshape(nr, nc)


def _cardinalities(factors: Sequence[NamedTensor], keep: Sequence[str]) -> dict[str, int]:
    cards: dict[str, int] = {}
    for f in factors:
        for ax in f.axes:
            seen = cards.setdefault(ax.name, ax.cardinality)
            if seen != ax.cardinality:
                raise AxisError(
                    f"axis {ax.name!r} has cardinality {seen} in one factor "
                    f"and {ax.cardinality} in another"
                )
    if len(set(keep)) != len(keep):
        raise AxisError(f"duplicate names in keep: {list(keep)}")
    for name in keep:
        if name not in cards:
            raise AxisError(f"unknown axis {name!r} in keep")
    return cards


def _greedy(sets: list[set[str]], cards: dict[str, int], keep: set[str]):
    sets = [set(s) for s in sets]
    remaining = set(cards) - keep
    order: list[str] = []
    peak = max((_size(s, cards) for s in sets), default=1)
    while remaining:
        best_key = None
        best = None
        for ax in remaining:
            merged = set().union(*(s for s in sets if ax in s))
            merged.discard(ax)
            key = (_size(merged, cards), ax)
            if best_key is None or key < best_key:
                best_key, best = key, (ax, merged)
        ax, merged = best
        sets = [s for s in sets if ax not in s] + [merged]
        peak = max(peak, best_key[0])
        order.append(ax)
        remaining.discard(ax)
    return order, sets, peak


def _size(names: Iterable[str], cards: dict[str, int]) -> int:
    n = 1
    for name in names:
        n *= cards[name]
    return n


def elimination_order(factors: Sequence[NamedTensor], keep: Sequence[str]) -> list[str]:
    """Greedy sum-elimination order for :func:`contract`.

    At every step the axis whose elimination produces the smallest
    intermediate tensor is chosen; ties break on the axis name, so the
    order is deterministic.
    """
    cards = _cardinalities(factors, keep)
    order, _, _ = _greedy([set(f.names) for f in factors], cards, set(keep))
    return order


def peak_intermediate_size(
    factors: Sequence[NamedTensor], keep: Sequence[str], order: Sequence[str] | None = None
) -> int:
    """Largest number of entries held by any tensor while contracting along ``order``."""
    cards = _cardinalities(factors, keep)
    if order is None:
        order = elimination_order(factors, keep)
    sets = [set(f.names) for f in factors]
    peak = max((_size(s, cards) for s in sets), default=1)
    for ax in order:
        merged = set().union(*(s for s in sets if ax in s))
        merged.discard(ax)
        sets = [s for s in sets if ax not in s] + [merged]
        peak = max(peak, _size(merged, cards))
    final = set().union(*sets) if sets else set()
    return max(peak, _size(final, cards))


def _einsum(operands: list[tuple[tuple[str, ...], np.ndarray]], out: Sequence[str]) -> np.ndarray:
    labels: dict[str, int] = {}
    args = []
    for names, data in operands:
        args.append(data)
        args.append([labels.setdefault(n, len(labels)) for n in names])
    if len(labels) > 52:
        raise AxisError(f"a single contraction step touches {len(labels)} axes (limit 52)")
    args.append([labels[n] for n in out])
    if not operands:
        return np.asarray(1.0 + 0.0j)
    return np.einsum(*args)


def contract(
    factors: Sequence[NamedTensor],
    keep: Sequence[str],
    order: Sequence[str] | None = None,
) -> NamedTensor:
    """Exterior function of a set of factors.

    Sums, over every axis not in ``keep``, the product of all factors.
    Axes shared by several factors are identified by name. The result has
    exactly the axes in ``keep``, in that order; ``keep=[]`` gives a scalar.

    Parameters
    ----------
    factors : sequence of NamedTensor
    keep : sequence of str
        Axes left open. A kept axis may be shared by several factors.
    order : sequence of str, optional
        Elimination order for the summed axes. Defaults to
        :func:`elimination_order`.
    """
    factors = list(factors)
    keep = list(keep)
    cards = _cardinalities(factors, keep)
    summed = set(cards) - set(keep)
    if order is None:
        order = elimination_order(factors, keep)
    else:
        order = list(order)
        if set(order) != summed or len(order) != len(summed):
            raise AxisError("order must list every non-kept axis exactly once")
    work = [(f.names, f.data) for f in factors]
    for ax in order:
        involved = [w for w in work if ax in w[0]]
        rest = [w for w in work if ax not in w[0]]
        out: list[str] = []
        for names, _ in involved:
            out.extend(n for n in names if n != ax and n not in out)
        work = rest + [(tuple(out), _einsum(involved, out))]
    return NamedTensor(keep, _einsum(work, keep))


def contract_naive(factors: Sequence[NamedTensor], keep: Sequence[str]) -> NamedTensor:
    """Brute-force exterior function by explicit enumeration of all assignments.

    Exponential in the number of axes; intended as an independent oracle
    for :func:`contract` on small inputs.
    """
    factors = list(factors)
    keep = list(keep)
    cards = _cardinalities(factors, keep)
    names = sorted(cards)
    out = np.zeros([cards[n] for n in keep], dtype=np.complex128)
    for values in itertools.product(*(range(cards[n]) for n in names)):
        point = dict(zip(names, values))
        prod = 1.0 + 0.0j
        for f in factors:
            prod *= f.data[tuple(point[n] for n in f.names)]
            if prod == 0:
                break
        out[tuple(point[n] for n in keep)] += prod
    return NamedTensor(keep, out)


def is_unitary(
    m: NamedTensor | np.ndarray,
    tol: float = 1e-12,
    rows: Sequence[str] | None = None,
) -> bool:
    """True iff ``max |M^H M - I| <= tol``.

    ``m`` is a square array or a 2-axis :class:`NamedTensor`. For gates with
    more axes, pass ``rows`` (the output axes); the remaining axes are the
    columns.
    """
    if isinstance(m, NamedTensor):
        if rows is None:
            if len(m.names) != 2:
                raise AxisError(
                    f"is_unitary needs a 2-axis tensor or explicit rows, got {m.names}"
                )
            rows = [m.names[0]]
        cols = [n for n in m.names if n not in rows]
        mat = as_matrix(m, rows, cols)
    else:
        mat = np.asarray(m, dtype=np.complex128)
        if mat.ndim != 2:
            raise AxisError("is_unitary needs a matrix")
    if mat.shape[0] != mat.shape[1]:
        raise AxisError(f"non-square matrix of shape {mat.shape}")
    err = mat.conj().T @ mat - np.eye(mat.shape[0])
    return bool(np.max(np.abs(err)) <= tol) if err.size else True

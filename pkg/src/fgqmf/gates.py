"""Gate library: the fixed matrices and constraint functions used by the models.

Every gate is returned as a plain numpy array; :func:`gate_tensor` attaches
axis names. Arrays are indexed ``[output..., input...]`` where that
distinction makes sense, with values starting at 0.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .tensor import NamedTensor

__all__ = [
    "GATES",
    "cnot",
    "constant",
    "f_eq",
    "f_oplus",
    "fredkin",
    "gate_array",
    "gate_tensor",
    "hadamard",
    "identity",
]


def hadamard() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def identity(M: int) -> np.ndarray:
    return np.eye(M, dtype=np.complex128)


def f_eq(n: int, M: int) -> np.ndarray:
    """Equality constraint with ``n`` arguments over ``{0..M-1}``."""
    if n < 1:
        raise ValueError("equality constraint needs at least one argument")
    out = np.zeros((M,) * n, dtype=np.complex128)
    for v in range(M):
        out[(v,) * n] = 1.0
    return out


def f_oplus(M: int, signs: Sequence[int] = (1, 1, 1)) -> np.ndarray:
    """Indicator of ``sum_i signs[i] * v_i == 0 (mod M)``.

    With ``signs=(1, 1, -1)`` the third argument carries the negative sign
    drawn as a small circle on a modular-sum node.
    """
    if M < 1:
        raise ValueError("M must be positive")
    out = np.zeros((M,) * len(signs), dtype=np.complex128)
    for vals in itertools.product(range(M), repeat=len(signs)):
        if sum(s * v for s, v in zip(signs, vals)) % M == 0:
            out[vals] = 1.0
    return out


def fredkin() -> np.ndarray:
    """Quantum-controlled swap as a function of ``(S, X, R, St, Xt, Rt)``.

    Equal to 1 iff ``R = Rt = 0, X = Xt, S = St`` or ``R = Rt = 1, X = St,
    S = Xt``. Reshaped to 8x8 (outputs S, X, R against inputs St, Xt, Rt) it
    is a permutation matrix.
    """
    out = np.zeros((2,) * 6, dtype=np.complex128)
    for st, xt, rt in itertools.product(range(2), repeat=3):
        if rt == 0:
            out[st, xt, 0, st, xt, 0] = 1.0
        else:
            out[xt, st, 1, st, xt, 1] = 1.0
    return out


def cnot(M: int = 2) -> np.ndarray:
    """Controlled modular adder as a function of ``(Xt, xit, X, xi)``.

    ``Xt = X`` and ``xit = xi + X (mod M)``; for ``M = 2`` this is the
    controlled-NOT gate with ``X`` as control.
    """
    out = np.zeros((M,) * 4, dtype=np.complex128)
    for x, xi in itertools.product(range(M), repeat=2):
        out[x, (xi + x) % M, x, xi] = 1.0
    return out


def constant(M: int, value: int) -> np.ndarray:
    """Indicator vector of a fixed known value."""
    if not 0 <= value < M:
        raise ValueError(f"constant value {value} outside 0..{M - 1}")
    out = np.zeros(M, dtype=np.complex128)
    out[value] = 1.0
    return out


GATES = {
    "hadamard": lambda: hadamard(),
    "identity": lambda M: identity(M),
    "f_eq": lambda n, M: f_eq(n, M),
    "f_oplus": lambda M, signs=(1, 1, 1): f_oplus(M, tuple(signs)),
    "fredkin": lambda: fredkin(),
    "cnot": lambda M=2: cnot(M),
    "constant": lambda M, value: constant(M, value),
}


def gate_array(name: str, conjugate: bool = False, **params) -> np.ndarray:
    try:
        build = GATES[name]
    except KeyError:
        raise KeyError(f"unknown gate {name!r}; known gates: {sorted(GATES)}") from None
    arr = build(**params)
    return np.conj(arr) if conjugate else arr


def gate_tensor(name: str, axes: Sequence[str], conjugate: bool = False, **params) -> NamedTensor:
    """A builtin gate as a :class:`NamedTensor` over the given axis names."""
    return NamedTensor(axes, gate_array(name, conjugate=conjugate, **params))

import itertools

import numpy as np
import pytest

from fgqmf import gates
from fgqmf.tensor import NamedTensor, is_unitary


def test_hadamard_unitary_and_self_inverse():
    h = gates.hadamard()
    assert is_unitary(h)
    assert np.allclose(h @ h, np.eye(2), atol=1e-15)


def test_fredkin_definition():
    f = gates.fredkin()
    for s, x, r, st, xt, rt in itertools.product(range(2), repeat=6):
        expect = (r == rt == 0 and x == xt and s == st) or (r == rt == 1 and x == st and s == xt)
        assert f[s, x, r, st, xt, rt] == (1.0 if expect else 0.0)
    assert is_unitary(NamedTensor(["S", "X", "R", "St", "Xt", "Rt"], f), rows=["S", "X", "R"])


def test_f_eq_support():
    f = gates.f_eq(3, 4)
    assert f.sum() == 4
    assert all(f[v, v, v] == 1 for v in range(4))
    assert set(np.unique(f.real)) == {0.0, 1.0}


@pytest.mark.parametrize("M", [2, 3, 5])
def test_f_oplus_support(M):
    f = gates.f_oplus(M, (1, 1, -1))
    for a, b, c in itertools.product(range(M), repeat=3):
        assert f[a, b, c] == (1.0 if (a + b - c) % M == 0 else 0.0)


@pytest.mark.parametrize("M", [2, 3])
def test_cnot_is_controlled_adder(M):
    c = gates.cnot(M)
    assert is_unitary(c.reshape(M * M, M * M))
    for x, xi in itertools.product(range(M), repeat=2):
        assert c[x, (x + xi) % M, x, xi] == 1


def test_gate_registry():
    t = gates.gate_tensor("hadamard", ["Y", "X"], conjugate=True)
    assert t.names == ("Y", "X")
    assert np.array_equal(gates.gate_array("f_eq", n=2, M=3), np.eye(3))
    with pytest.raises(KeyError):
        gates.gate_array("toffoli")
    with pytest.raises(ValueError):
        gates.constant(2, 5)

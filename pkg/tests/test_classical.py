import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from fgqmf import gates
from fgqmf.classical import (
    EnumerationCapError,
    classicality_report,
    format_number,
    is_classical,
    is_jointly_classicable,
    off_diagonal_witness,
    valid_configurations,
)
from fgqmf.graph import FactorGraph, mirror_complete, terminate
from fgqmf.models import classicable_example
from fgqmf.qmf import certify_sqmf, marginalize, sqmf_from_graph
from fgqmf.tensor import NamedTensor
from helpers import random_pmf, random_sqmf_tensor, random_unitary, seeds, sqmf_tensor


def fig8(p0, M=2, seed=0):
    rng = np.random.default_rng(seed)
    while True:
        U1, U2 = random_unitary(M, rng), random_unitary(M, rng)
        if max(np.abs(U1).max(), np.abs(U2).max()) < 0.99:
            break
    return sqmf_from_graph(classicable_example(p0, U1, U2), ["X0", "X1", "X2"])


def test_format_number():
    assert format_number(-0.0) == "0"
    assert format_number(1e-17) == "0"
    assert format_number(1 / 3) == "0.333333333333"
    assert format_number(0.5 - 0.25j) == "0.5-0.25j"
    assert format_number(2j) == "2j"


def test_uniform_diagonal_configs():
    q = certify_sqmf(NamedTensor(["A", "A'"], np.eye(2) / 2), ["A"])
    table = valid_configurations(q)
    assert [a for a, _ in table.rows] == [(0, 0), (1, 1)]
    assert table.values() == [0.5, 0.5]


def test_configs_reevaluate_and_respect_tol():
    rng = np.random.default_rng(0)
    q = certify_sqmf(random_sqmf_tensor(["A", "B"], [2, 2], rng), ["A", "B"])
    table = valid_configurations(q)
    for assignment, value in zip(table.assignments(), table.values()):
        assert abs(value) > 1e-9
        assert abs(q.tensor.value(**assignment) - value) <= 1e-12
    assert [a for a, _ in table.rows] == sorted(a for a, _ in table.rows)


def test_enumeration_cap():
    t = NamedTensor(["A", "B"], np.ones((4, 4)))
    with pytest.raises(EnumerationCapError):
        valid_configurations(t, cap=10)


def test_text_and_json_agree():
    t = NamedTensor(["A"], [0.25, -0.75])
    table = valid_configurations(t)
    assert table.to_text().splitlines()[-1].split() == ["1", "-0.75"]
    assert table.to_dict()["rows"][1]["text"] == "-0.75"


def test_fig8_classical_pairs():
    q = fig8([0.7, 0.3])
    assert is_classical(q, "X0") and is_classical(q, "X2")
    assert not is_classical(q, "X1")


def test_fig8_joint_classicability():
    skew = fig8([0.7, 0.3])
    uniform = fig8([0.5, 0.5])
    assert is_jointly_classicable(skew, ["X0", "X1"])
    assert is_jointly_classicable(uniform, ["X1", "X2"])
    assert not is_jointly_classicable(skew, ["X1", "X2"])
    assert abs(off_diagonal_witness(skew, ["X1", "X2"])[1]) > 1e-3
    assert not is_jointly_classicable(uniform, ["X0", "X1", "X2"])


def test_classicable_example_rejects_trivial_entries():
    with pytest.raises(ValueError, match="magnitude"):
        classicable_example([0.5, 0.5], np.eye(2), gates.hadamard())


def test_report_on_fig8():
    r = classicality_report(fig8([0.7, 0.3]))
    assert r.classical == {"X0": True, "X1": False, "X2": True}
    assert all(r.classicable.values())
    assert ("X0", "X1") in r.maximal_jointly_classicable
    assert ("X0", "X2") in r.maximal_jointly_classicable
    assert ("X1", "X2") not in r.maximal_jointly_classicable
    r2 = classicality_report(fig8([0.5, 0.5]))
    assert ("X1", "X2") in r2.maximal_jointly_classicable


def test_report_on_diagonal_sqmf():
    rng = np.random.default_rng(1)
    q = certify_sqmf(sqmf_tensor(np.diag(random_pmf(8, rng)), ["A", "B", "C"], [2, 2, 2]), ["A", "B", "C"])
    r = classicality_report(q)
    assert r.maximal_jointly_classicable == [("A", "B", "C")]


def random_fig8_like(rng, M=2):
    """Random SQMF with a mix of classical and non-classical pairs."""
    p0 = random_pmf(M, rng)
    U1, U2 = random_unitary(M, rng), random_unitary(M, rng)
    half = FactorGraph()
    for v in ("X0", "X1", "X2"):
        half.add_variable(v, M)
    half.add_factor("U1", NamedTensor(["X1", "X0"], U1))
    half.add_factor("U2", NamedTensor(["X2", "X1"], U2))
    g = mirror_complete(half)
    g.add_variable("P", M)
    g.add_factor("p", NamedTensor(["P"], p0))
    g.add_equality("prep", ["P", "X0", "X0'"])
    g = terminate(g, [("X2", "X2'")])
    return sqmf_from_graph(g, ["X0", "X1", "X2"])


@given(seeds)
@settings(max_examples=30)
def test_classical_survives_marginalization(seed):
    q = random_fig8_like(np.random.default_rng(seed))
    for k in q.kets:
        if not is_classical(q, k):
            continue
        for r in range(1, 4):
            for sub in itertools.combinations(q.kets, r):
                if k in sub:
                    assert is_classical(marginalize(q, list(sub)), k)


@given(seeds)
@settings(max_examples=30)
def test_classical_pairs_are_jointly_classicable(seed):
    q = random_fig8_like(np.random.default_rng(seed))
    classical = [k for k in q.kets if is_classical(q, k)]
    assert classical
    assert is_jointly_classicable(q, classical)


@given(seeds)
@settings(max_examples=30)
def test_jointly_classicable_is_classical_in_marginal(seed):
    q = random_fig8_like(np.random.default_rng(seed))
    for r in range(1, 4):
        for sub in itertools.combinations(q.kets, r):
            if is_jointly_classicable(q, list(sub)):
                m = marginalize(q, list(sub))
                assert all(is_classical(m, k) for k in sub)


@given(seeds)
@settings(max_examples=20)
def test_classicability_is_refinement_stable(seed):
    # refine by letting X2 interact with a fresh probe, then summing the probe out
    rng = np.random.default_rng(seed)
    M = 2
    p0 = random_pmf(M, rng)
    U1, U2, V = random_unitary(M, rng), random_unitary(M, rng), random_unitary(M * M, rng)
    half = FactorGraph()
    for v in ("X0", "X1", "X2", "X3", "E0", "E1"):
        half.add_variable(v, M)
    half.add_factor("U1", NamedTensor(["X1", "X0"], U1))
    half.add_factor("U2", NamedTensor(["X2", "X1"], U2))
    half.add_factor("V", NamedTensor(["X3", "E1", "X2", "E0"], V.reshape(M, M, M, M)))
    half.add_constant("e", "E0", 0)
    g = mirror_complete(half)
    g.add_variable("P", M)
    g.add_factor("p", NamedTensor(["P"], p0))
    g.add_equality("prep", ["P", "X0", "X0'"])
    g = terminate(g, [("X3", "X3'"), ("E1", "E1'")])
    fine = sqmf_from_graph(g, ["X0", "X1", "X2", "E1"])
    coarse = marginalize(fine, ["X0", "X1", "X2"])
    for r in range(1, 4):
        for sub in itertools.combinations(coarse.kets, r):
            if is_jointly_classicable(coarse, list(sub)):
                assert is_jointly_classicable(fine, list(sub))

import numpy as np
import pytest
from hypothesis import given, settings

from fgqmf import gates
from fgqmf.classical import is_classical, is_jointly_classicable, off_diagonal_witness
from fgqmf.models import (
    FR_B_ROW0,
    FR_U_COL0,
    check_implication,
    classicable_example,
    complete_unitary_column,
    complete_unitary_row,
    elementary_system,
    fr_implications,
    fr_model,
    fr_model_from,
    fr_table1_graph,
    fr_table2_graph,
    two_measurement_system,
)
from fgqmf.qmf import measurement_pmf, sqmf_from_graph
from fgqmf.tensor import is_unitary
from helpers import born_elementary, born_two_measurements, random_pmf, random_unitary, seeds

TABLE = ["R", "Rt", "X", "Xt", "S", "St"]
S6, S3 = np.sqrt(6), np.sqrt(3)


@pytest.fixture(scope="module")
def fr():
    return fr_model()


def test_elementary_trivial_measurement():
    # identity evolution measured in the computational basis returns p0
    p = np.array([0.2, 0.5, 0.3])
    g = elementary_system(p, np.eye(3), np.eye(3), np.eye(3))
    assert np.allclose(g.exterior(["Y"]).data.real, p, atol=1e-14)


def test_elementary_eigenbasis_measurement():
    rng = np.random.default_rng(0)
    U = random_unitary(2, rng)
    g = elementary_system([1.0, 0.0], U, np.eye(2), U)
    assert np.allclose(g.exterior(["Y"]).data, [1, 0], atol=1e-14)


@given(seeds)
@settings(max_examples=30)
def test_elementary_matches_born_rule(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(2, 5))
    p, U0, U1, B = random_pmf(M, rng), *(random_unitary(M, rng) for _ in range(3))
    got = elementary_system(p, U0, U1, B).exterior(["Y"]).data
    assert np.max(np.abs(got - born_elementary(p, U0, U1, B))) <= 1e-10


def test_elementary_measured_pair_is_classical():
    rng = np.random.default_rng(1)
    g = elementary_system(random_pmf(3, rng), *(random_unitary(3, rng) for _ in range(3)))
    q = sqmf_from_graph(g, ["X3"])
    assert is_classical(q, "X3")
    pmf = measurement_pmf(q, ["X3"])
    assert np.allclose(pmf.probs, g.exterior(["Y"]).data.real, atol=1e-12)


def test_elementary_rejects_bad_inputs():
    with pytest.raises(ValueError, match="probability"):
        elementary_system([0.5, 0.6], np.eye(2), np.eye(2), np.eye(2))
    with pytest.raises(ValueError, match="unitary"):
        elementary_system([0.5, 0.5], np.ones((2, 2)), np.eye(2), np.eye(2))


@given(seeds)
@settings(max_examples=20)
def test_two_measurements_match_density_matrices(seed):
    rng = np.random.default_rng(seed)
    MA, MC = int(rng.integers(2, 4)), int(rng.integers(1, 3))
    D = MA * MC
    p, U0, U1 = random_pmf(D, rng), random_unitary(D, rng), random_unitary(D, rng)
    B1, B2 = random_unitary(MA, rng), random_unitary(MA, rng)
    g = two_measurement_system(p, U0, B1, U1, B2, dims=(MA, MC))
    got = g.exterior(["Y1", "Y2"]).transpose(["Y1", "Y2"]).data
    assert np.max(np.abs(got - born_two_measurements(p, U0, B1, U1, B2, (MA, MC)))) <= 1e-10


def test_unknown_final_evolution_drops_out():
    rng = np.random.default_rng(2)
    p, U0, U1 = random_pmf(4, rng), random_unitary(4, rng), random_unitary(4, rng)
    B1, B2 = random_unitary(2, rng), random_unitary(2, rng)
    a = two_measurement_system(p, U0, B1, U1, B2, dims=(2, 2))
    b = two_measurement_system(p, U0, B1, U1, B2, dims=(2, 2), U2=random_unitary(4, rng))
    assert a.exterior(["Y1", "Y2"]).max_abs_diff(b.exterior(["Y1", "Y2"])) <= 1e-12


def test_commuting_measurements_swap_order():
    # with no evolution in between, the same basis twice gives identical results
    rng = np.random.default_rng(3)
    p, U0, B = random_pmf(2, rng), random_unitary(2, rng), random_unitary(2, rng)
    g = two_measurement_system(p, U0, B, np.eye(2), B, dims=(2, 1))
    t = g.exterior(["Y1", "Y2"]).transpose(["Y1", "Y2"]).data
    assert np.allclose(t, np.diag(np.diag(t)), atol=1e-14)
    assert np.allclose(t, t.T, atol=1e-14)


def test_classicable_example_structure():
    H = gates.hadamard()
    q = sqmf_from_graph(classicable_example([0.5, 0.5], H, H), ["X0", "X1", "X2"])
    assert is_classical(q, "X0") and is_classical(q, "X2")
    assert not is_classical(q, "X1")
    assert is_jointly_classicable(q, ["X1"])
    assert is_jointly_classicable(q, ["X1", "X2"])
    skew = sqmf_from_graph(classicable_example([0.7, 0.3], H, H), ["X0", "X1", "X2"])
    assert not is_jointly_classicable(skew, ["X1", "X2"])
    assert abs(off_diagonal_witness(skew, ["X1", "X2"])[1]) > 1e-3


def test_classicable_example_rejects_permutation_entries():
    with pytest.raises(ValueError, match="magnitude"):
        classicable_example([0.5, 0.5], np.eye(2), gates.hadamard())


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_unitary_completion(seed):
    U = complete_unitary_column(FR_U_COL0, seed)
    B = complete_unitary_row(FR_B_ROW0, seed)
    assert is_unitary(U) and is_unitary(B)
    assert np.array_equal(U[:, 0], FR_U_COL0)
    assert np.array_equal(B[0], FR_B_ROW0)


def test_fr_tables(fr):
    t1 = fr_table1_graph(fr.U, fr.B).exterior(TABLE)
    t2 = fr_table2_graph(fr.U, fr.B).exterior(TABLE)
    rows = [(0, 0, 0, 0, 0, 0), (0, 0, 1, 1, 0, 0), (1, 1, 0, 0, 0, 0), (1, 1, 0, 1, 1, 0)]
    v1 = [1 / (2 * S6), 1 / (2 * S6), -1 / S6, -1 / S6]
    v2 = [1 / (4 * S3), 1 / (4 * S3), -1 / (2 * S3), 1 / (2 * S3)]
    for t, vals in ((t1, v1), (t2, v2)):
        for r, v in zip(rows, vals):
            assert abs(t.value(**dict(zip(TABLE, r))) - v) <= 1e-12
        assert np.count_nonzero(np.abs(t.transpose(TABLE).data) > 1e-12) == 4
    assert abs(t2.data.sum() - 1 / (2 * S3)) <= 1e-12


def test_fr_scalars(fr):
    assert abs(fr.psi_S_Y1().value(S=0, Y1=0)) <= 1e-12
    assert abs(fr.pr_R1() - 2 / 3) <= 1e-12
    assert abs(fr.stop_probability() - 1 / 12) <= 1e-9


@pytest.mark.parametrize(
    "view, keep",
    [("F", ["R", "S"]), ("Wbar", ["S", "Y1"]), ("W", ["R", "Y2"])],
)
def test_fr_views_are_marginals(fr, view, keep):
    pairs = keep + [k + "'" for k in keep]
    full = fr.graph.exterior(pairs)
    assert fr.view(view).exterior(pairs).max_abs_diff(full) <= 1e-12


def test_fr_implications_and_verdict(fr):
    r = fr_implications(fr)
    assert all(i.holds and i.premise_configs > 0 for i in r.implications)
    assert not r.jointly_classicable
    a, v = r.witness
    assert abs(v) > 1e-3
    assert abs(abs(v) - 1 / 12) <= 1e-12
    assert a["R"] == a["R'"] == 1 and a["S"] != a["S'"]
    assert r.to_text().count("holds") == 3


def test_check_implication_finds_counterexamples(fr):
    bad = check_implication(fr.agent_W.exterior(["Rb", "Y2b"]), "W", {"Rb": 0}, {"Y2b": 0})
    assert not bad.holds and bad.counterexamples


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_fr_completion_invariance(fr, seed):
    other = fr_model(seed)
    assert abs(other.stop_probability() - fr.stop_probability()) <= 1e-12


def test_fr_model_is_frozen(fr):
    with pytest.raises(Exception):
        fr.graph.add_variable("Z", 2)
    with pytest.raises(ValueError):
        fr.U[0, 0] = 0
    with pytest.raises(ValueError, match="unitary"):
        fr_model_from(np.ones((2, 2)), np.eye(4))

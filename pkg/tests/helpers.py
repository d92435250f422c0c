"""Random instances and independent oracles shared by the tests."""

import itertools

import numpy as np
from hypothesis import strategies as st
from scipy.stats import unitary_group

from fgqmf.tensor import NamedTensor

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_unitary(n, rng):
    if n == 1:
        return np.exp(2j * np.pi * rng.random((1, 1)))
    return unitary_group.rvs(n, random_state=rng)


def random_pmf(n, rng, full_support=True):
    p = rng.dirichlet(np.ones(n))
    if not full_support:
        p[rng.integers(n)] = 0.0
        p /= p.sum()
    return p


def random_density(n, rng, rank=None):
    rank = n if rank is None else rank
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_sqmf_tensor(kets, cards, rng, rank=None):
    """Mixture of rank-one kernels ``f(x) conj(f(x'))``, each with ``sum f = 1``.

    The total sum over all ``(x, x')`` is then 1.
    """
    n = int(np.prod(cards))
    rank = int(rng.integers(1, 5)) if rank is None else rank
    w = rng.dirichlet(np.ones(rank))
    q = np.zeros((n, n), dtype=complex)
    for k in range(rank):
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        f /= f.sum()
        q += w[k] * np.outer(f, f.conj())
    return sqmf_tensor(q, kets, cards)


def sqmf_tensor(rho, kets, cards):
    """A density matrix as a tensor over ``kets`` then their primed mirrors."""
    bras = [k + "'" for k in kets]
    return NamedTensor(kets + bras, rho.reshape(list(cards) + list(cards)))


def random_factors(rng, n_vars=5, n_factors=4, max_card=3, max_arity=3):
    names = [f"v{i}" for i in range(n_vars)]
    cards = {n: int(rng.integers(1, max_card + 1)) for n in names}
    fs = []
    for _ in range(n_factors):
        k = int(rng.integers(1, max_arity + 1))
        axes = list(rng.choice(names, size=min(k, n_vars), replace=False))
        shape = [cards[a] for a in axes]
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        fs.append(NamedTensor(axes, data))
    used = sorted({a for f in fs for a in f.names})
    return fs, used


def born_elementary(p0, U0, U1, B):
    """``p(y) = sum_x0 p0(x0) |(B^H U1 U0)[y, x0]|^2``, straight from the formula."""
    amp = B.conj().T @ U1 @ U0
    return np.abs(amp) ** 2 @ p0


def born_two_measurements(p0, U0, B1, U1, B2, dims):
    """Joint pmf of two partial projection measurements by density matrices."""
    MA, MC = dims
    rho = U0 @ np.diag(p0).astype(complex) @ U0.conj().T
    out = np.zeros((MA, MA))
    for y1, y2 in itertools.product(range(MA), repeat=2):
        P1 = np.kron(np.outer(B1[:, y1], B1[:, y1].conj()), np.eye(MC))
        P2 = np.kron(np.outer(B2[:, y2], B2[:, y2].conj()), np.eye(MC))
        r = U1 @ P1 @ rho @ P1 @ U1.conj().T
        out[y1, y2] = np.trace(P2 @ r @ P2).real
    return out


def kappa_double_sum(p, unitaries):
    """``kappa(z, z') = sum_xi sum_xit p(xi) U_z[xit, xi] conj(U_z'[xit, xi])``."""
    M, K = len(unitaries), len(p)
    out = np.zeros((M, M), dtype=complex)
    for z, zp, xi, xit in itertools.product(range(M), range(M), range(K), range(K)):
        out[z, zp] += p[xi] * unitaries[z][xit, xi] * np.conj(unitaries[zp][xit, xi])
    return out

from itertools import combinations
from math import comb

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from fcistab.lattice import (LatticeError, LatticeGeometry, build_basis, build_hhbh, check_hermitian,
                             gauge_transform, hofstadter_hopping, many_body_hopping, number_operator,
                             pinning_potential, plaquette_fluxes)


def brute_force_hhbh(L, N, phi, J, pot=None):
    """Dense reference built from explicit occupation tuples and a dict lookup."""
    sites = L * L
    configs = [frozenset(c) for c in combinations(range(sites), N)]
    configs.sort(key=lambda c: sum(1 << s for s in c))
    where = {c: i for i, c in enumerate(configs)}
    H = np.zeros((len(configs), len(configs)), dtype=complex)
    for i, c in enumerate(configs):
        if pot is not None:
            H[i, i] += sum(pot[s] for s in c)
        for m in range(L):
            for n in range(L):
                a = L * m + n
                for b, amp in ((L * (m + 1) + n, -J * np.exp(-1j * phi * n)) if m + 1 < L else (None, 0),
                               (L * m + n + 1, -J) if n + 1 < L else (None, 0)):
                    if b is None:
                        continue
                    # amp a+_a a_b and its conjugate
                    if b in c and a not in c:
                        H[where[(c - {b}) | {a}], i] += amp
                    if a in c and b not in c:
                        H[where[(c - {a}) | {b}], i] += np.conj(amp)
    return H


@pytest.mark.parametrize("L,N", [(2, 1), (3, 2), (4, 2)])
def test_basis_dimension_and_bijection(L, N):
    b = build_basis(L * L, N)
    assert b.dim == comb(L * L, N)
    assert np.all(np.diff(b.states) > 0)
    assert np.array_equal(b.index(b.states), np.arange(b.dim))
    assert np.all(b.occupations().sum(axis=1) == N)


def test_basis_errors():
    with pytest.raises(LatticeError):
        build_basis(4, 5)
    with pytest.raises(LatticeError):
        build_basis(4, 2).index([0b111])


@pytest.mark.parametrize("L,N,phi", [(3, 2, np.pi / 2), (4, 2, 2 * np.pi * 0.27), (3, 1, 1.1)])
def test_hhbh_matches_brute_force(L, N, phi):
    geom = LatticeGeometry(L, phi=phi)
    pot = np.linspace(-0.3, 0.2, L * L)
    H = build_hhbh(geom, 0.55, build_basis(L * L, N), pot).toarray()
    assert np.allclose(H, brute_force_hhbh(L, N, phi, 0.55, pot), atol=1e-14)


def test_single_particle_sector_is_hopping_matrix():
    geom = LatticeGeometry(4, phi=np.pi / 2)
    h = hofstadter_hopping(geom, 1.0)
    b = build_basis(16, 1)
    H = many_body_hopping(b, h).toarray()
    order = [int(np.log2(s)) for s in b.states]
    assert np.allclose(H, h[np.ix_(order, order)])


def test_plaquette_flux_uniform():
    for phi in (np.pi / 2, 0.3, 2 * np.pi * 0.29):
        geom = LatticeGeometry(4, phi=phi)
        f = plaquette_fluxes(hofstadter_hopping(geom, 0.55), geom)
        assert np.allclose(np.angle(np.exp(1j * (f - phi))), 0, atol=1e-12)


def test_zero_flux_real():
    H = build_hhbh(LatticeGeometry(3), 1.0, build_basis(9, 2))
    assert np.allclose(H.toarray().imag, 0)


@given(st.lists(st.floats(-np.pi, np.pi), min_size=9, max_size=9), st.floats(0, 2 * np.pi))
def test_gauge_transform_preserves_spectrum(phases, phi):
    geom = LatticeGeometry(3, phi=phi)
    b = build_basis(9, 2)
    H = build_hhbh(geom, 0.55, b)
    Hg = gauge_transform(H, phases, b)
    check_hermitian(Hg, 1e-12)
    assert np.allclose(np.linalg.eigvalsh(H.toarray()), np.linalg.eigvalsh(Hg.toarray()), atol=1e-10)


def test_rotation_symmetry_of_spectrum():
    # a 90 degree rotation maps the uniform-flux model onto a gauge copy of itself
    geom = LatticeGeometry(4, phi=np.pi / 2)
    b = build_basis(16, 2)
    H = build_hhbh(geom, 0.55, b).toarray()
    perm = [geom.rotate(j) for j in range(16)]
    mapped = np.array([sum(1 << perm[j] for j in range(16) if (s >> j) & 1) for s in b.states])
    P = np.zeros((b.dim, b.dim))
    P[b.index(mapped), np.arange(b.dim)] = 1
    H_rot = P @ H @ P.T
    assert np.allclose(np.linalg.eigvalsh(H), np.linalg.eigvalsh(H_rot), atol=1e-10)
    assert sorted(perm) == list(range(16))
    assert all(geom.rotate(geom.rotate(geom.rotate(geom.rotate(j)))) == j for j in range(16))


@given(st.integers(1, 3), st.floats(0, 2 * np.pi), st.integers(0, 2 ** 31))
def test_hermitian_and_number_conserving(N, phi, seed):
    geom = LatticeGeometry(3, phi=phi)
    b = build_basis(9, N)
    pot = np.random.default_rng(seed).normal(size=9)
    H = build_hhbh(geom, 0.7, b, pot)
    assert abs(H - H.conj().T).max() < 1e-14
    total = sum(number_operator(b, j) for j in range(9))
    assert abs(total - N * sp.identity(b.dim)).max() < 1e-14
    assert abs(H @ total - total @ H).max() < 1e-12


def test_pinning_potential_center():
    geom = LatticeGeometry(6)
    pot = pinning_potential(geom, 0.3)
    assert sorted(np.nonzero(pot)[0]) == [14, 15, 20, 21]
    assert np.allclose(pot[pot != 0], -0.3)
    with pytest.raises(LatticeError):
        pinning_potential(geom, 0.3, [36])


def test_check_hermitian_rejects():
    A = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(LatticeError):
        check_hermitian(A)


def test_geometry_errors():
    with pytest.raises(LatticeError):
        LatticeGeometry(9)
    with pytest.raises(LatticeError):
        LatticeGeometry(4).coords(16)
    with pytest.raises(LatticeError):
        build_hhbh(LatticeGeometry(3), -1.0, build_basis(9, 1))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fcistab.floquet import CavitySpec
from fcistab.lattice import LatticeGeometry
from fcistab.rates import (RateError, RateMatrix, check_simplex, evolve_on_grid, evolve_populations,
                           lorentzian_rate, rate_matrix, steady_state, symmetrize_cavities)
from fcistab.spectra import Spectrum, TransitionTable


def cav(site=0, chi=0.05, alpha=1.0, kappa=0.2, d=1.0):
    return CavitySpec(site, 0.5, 30.0, 0.0, kappa, d, chi, alpha)


def toy_spectrum(E, M):
    k = len(E)
    return Spectrum(np.asarray(E, float), np.eye(k), "dense", 0.0, True), TransitionTable((0,), np.asarray([M]))


def test_lorentzian_peak_and_half_width():
    c = cav()
    peak = lorentzian_rate(-c.d, c, 0.3)
    assert np.isclose(peak, 4 * c.chi ** 2 * abs(c.alpha) ** 2 * 0.3 / c.kappa, rtol=1e-14)
    assert np.isclose(peak / lorentzian_rate(-c.d + c.kappa / 2, c, 0.3), 2.0, rtol=1e-14)
    assert np.isclose(peak / lorentzian_rate(-c.d - c.kappa / 2, c, 0.3), 2.0, rtol=1e-14)


def test_rate_matrix_zero_elements_give_zero_rates():
    spec, table = toy_spectrum([0, 1, 2], np.diag([0.2, 0.5, 0.9]))
    rm = rate_matrix(spec, table, [cav()])
    assert np.all(rm.R == 0)


def test_rate_matrix_requires_dressed():
    spec, table = toy_spectrum([0, 1], np.ones((2, 2)))
    with pytest.raises(RateError):
        rate_matrix(spec, table, [CavitySpec(0, 0.5, 30.0, 0.1, 0.1, 1.0)])


def random_generator(k, seed, density=1.0):
    rng = np.random.default_rng(seed)
    R = rng.exponential(size=(k, k)) * (rng.random((k, k)) < density)
    return RateMatrix.from_rates(R)


@given(st.integers(2, 7), st.integers(0, 10 ** 6))
def test_generator_columns_sum_to_zero(k, seed):
    rm = random_generator(k, seed)
    assert np.abs(rm.G.sum(axis=0)).max() < 1e-12
    assert np.all(rm.R >= 0) and np.all(np.diag(rm.R) == 0)


@given(st.integers(2, 6), st.integers(0, 10 ** 6), st.floats(0, 50))
def test_simplex_preserved(k, seed, t):
    rm = random_generator(k, seed)
    p0 = np.random.default_rng(seed + 1).dirichlet(np.ones(k))
    p = evolve_populations(rm, p0, t)
    check_simplex(p)


def test_zero_generator_is_identity():
    rm = RateMatrix.from_rates(np.zeros((3, 3)))
    p0 = np.array([0.2, 0.3, 0.5])
    assert np.allclose(evolve_populations(rm, p0, 17.0), p0)


def test_one_way_decay():
    R = np.array([[0, 0.3], [0, 0]])
    rm = RateMatrix.from_rates(R)
    for t in (0.5, 2.0, 10.0):
        assert np.isclose(evolve_populations(rm, [0, 1], t)[1], np.exp(-0.3 * t), rtol=1e-9)


def test_two_state_detailed_balance():
    rm = RateMatrix.from_rates([[0, 0.7], [0.2, 0]])
    p = steady_state(rm).populations
    assert np.isclose(p[1] / p[0], 0.2 / 0.7)


def test_disconnected_blocks_flag_degeneracy():
    R = np.zeros((4, 4))
    R[0, 1] = R[1, 0] = 1.0
    R[2, 3] = R[3, 2] = 0.5
    ss = steady_state(RateMatrix.from_rates(R))
    assert ss.degenerate and len(ss.extremal) == 2
    # reachability: starting inside one block picks that block only
    ss1 = steady_state(RateMatrix.from_rates(R), p0=[0.5, 0.5, 0, 0])
    assert not ss1.degenerate and np.allclose(ss1.populations, [0.5, 0.5, 0, 0])


@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_steady_state_matches_long_time_evolution(k, seed):
    rm = random_generator(k, seed)
    p0 = np.ones(k) / k
    ss = steady_state(rm, p0)
    rmin = rm.R[rm.R > 0].min()
    assert np.abs(evolve_populations(rm, p0, 100 / rmin) - ss.populations).max() < 1e-6


@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_total_variation_monotone(k, seed):
    rm = random_generator(k, seed)
    p0 = np.random.default_rng(seed).dirichlet(np.ones(k))
    ss = steady_state(rm, p0).populations
    P = evolve_on_grid(rm, p0, np.linspace(0, 20, 41))
    tv = 0.5 * np.abs(P - ss).sum(axis=1)
    assert np.all(np.diff(tv) <= 1e-12)


@given(st.permutations(range(4)))
def test_cavity_order_independent(perm):
    rng = np.random.default_rng(0)
    E = np.sort(rng.normal(size=5))
    V = np.linalg.qr(rng.normal(size=(5, 5)))[0]
    mats = np.array([V.T @ np.diag(rng.random(5)) @ V for _ in range(4)])
    spec = Spectrum(E, np.eye(5), "dense", 0, True)
    table = TransitionTable((0, 1, 2, 3), mats)
    cavs = [cav(site=j, chi=0.03 * (j + 1), d=0.3 + 0.2 * j) for j in range(4)]
    a = rate_matrix(spec, table, cavs).R
    b = rate_matrix(spec, table, [cavs[i] for i in perm]).R
    assert np.allclose(a, b, rtol=1e-14, atol=0)


def test_symmetrize_counts_and_idempotence():
    geom = LatticeGeometry(4)
    cavs = [cav(site=s, d=0.1 * (i + 1)) for i, s in enumerate([1, 5, 15, 4])]
    sym = symmetrize_cavities(cavs, geom)
    assert len(sym) <= 16 and len(sym) == 16
    again = symmetrize_cavities(sym, geom)
    assert sorted(c.site for c in again) == sorted(c.site for c in sym)
    # centre block site 5 has an orbit of four
    assert len(symmetrize_cavities([cav(site=5)], geom)) == 4
    # on odd L the centre maps to itself
    assert len(symmetrize_cavities([cav(site=4)], LatticeGeometry(3))) == 1


def test_symmetrize_collision():
    geom = LatticeGeometry(4)
    with pytest.raises(RateError):
        symmetrize_cavities([cav(site=5, d=0.1), cav(site=6, d=0.2)], geom)


def test_simplex_check():
    with pytest.raises(RateError):
        check_simplex([0.5, 0.6])
    with pytest.raises(RateError):
        evolve_populations(RateMatrix.from_rates(np.zeros((2, 2))), [1.2, -0.2], 1.0)

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from fcistab.lattice import LatticeGeometry, build_basis, build_hhbh
from fcistab.spectra import (ConvergenceError, SpectrumCache, SpectrumError, diagonal_expectations,
                             full_spectrum, lowest_eigenpairs, transition_table)


@pytest.fixture(scope="module")
def hhbh44():
    geom = LatticeGeometry(4, phi=np.pi / 2)
    b = build_basis(16, 2)
    return b, build_hhbh(geom, 0.55, b)


def test_full_spectrum_matches_dense(hhbh44):
    b, H = hhbh44
    spec = full_spectrum(H)
    assert spec.complete and spec.k == b.dim
    assert np.allclose(spec.energies, np.linalg.eigvalsh(H.toarray()))
    assert np.allclose(spec.vectors.conj().T @ spec.vectors, np.eye(b.dim), atol=1e-12)


def test_lanczos_matches_dense(hhbh44):
    b, H = hhbh44
    dense = np.linalg.eigvalsh(H.toarray())
    spec = lowest_eigenpairs(H, 12, seed=3)
    assert np.allclose(spec.energies, dense[:12], atol=1e-10)
    assert spec.residual < 1e-8 * abs(H).sum(axis=1).max()
    assert np.allclose(spec.vectors.conj().T @ spec.vectors, np.eye(12), atol=1e-10)


def test_lanczos_on_six_by_six_sector():
    geom = LatticeGeometry(6, phi=np.pi / 2)
    b = build_basis(36, 3)
    H = build_hhbh(geom, 0.55, b)
    spec = lowest_eigenpairs(H, 10)
    R = H @ spec.vectors - spec.vectors * spec.energies
    assert np.linalg.norm(R, axis=0).max() < 1e-8 * abs(H).sum(axis=1).max()
    assert np.all(np.diff(spec.energies) >= 0)


def test_phase_convention(hhbh44):
    _, H = hhbh44
    spec = full_spectrum(H)
    lead = spec.vectors[np.argmax(np.abs(spec.vectors), axis=0), np.arange(spec.k)]
    assert np.allclose(lead.imag, 0) and np.all(lead.real > 0)


def test_degenerate_multiplet():
    H = sp.diags([0.0, 0.0, 1.0, 2.0]).tocsr()
    spec = full_spectrum(H)
    assert list(spec.ground_multiplet) == [0, 1]


def test_transition_table(hhbh44):
    b, H = hhbh44
    spec = full_spectrum(H)
    t = transition_table(spec, b, [1, 5, 1])
    assert t.sites == (1, 5)
    M = t[5]
    assert np.allclose(M, M.conj().T)
    dense = spec.vectors.conj().T @ np.diag(b.site_occupation(5)) @ spec.vectors
    assert np.allclose(M, dense, atol=1e-12)
    # sum over all sites of n_j is N times identity
    total = sum(transition_table(spec, b, [j])[j] for j in range(16))
    assert np.allclose(total, 2 * np.eye(b.dim), atol=1e-10)
    with pytest.raises(KeyError):
        t[3]


def test_transition_table_dimension_mismatch(hhbh44):
    b, H = hhbh44
    spec = full_spectrum(H)
    with pytest.raises(SpectrumError):
        transition_table(spec, build_basis(9, 2), [0])


def test_diagonal_expectations(hhbh44):
    b, H = hhbh44
    spec = full_spectrum(H)
    occ = b.occupations()
    dens = np.array([diagonal_expectations(spec, occ[:, j]) for j in range(16)])
    assert np.allclose(dens.sum(axis=0), 2)


def test_convergence_error_reports_residual(hhbh44):
    _, H = hhbh44
    with pytest.raises(ConvergenceError) as exc:
        lowest_eigenpairs(H, 30, tol=1e-14, maxiter=2)
    assert exc.value.best_residual >= 0


def test_cache_roundtrip(tmp_path, hhbh44):
    _, H = hhbh44
    spec = lowest_eigenpairs(H, 5)
    cache = SpectrumCache(tmp_path)
    key = SpectrumCache.key(4, 2, np.pi / 2, np.zeros(16), 5, 1e-10, 0.55)
    assert cache.load(key) is None
    cache.store(key, spec)
    got = cache.load(key)
    assert np.array_equal(got.energies, spec.energies) and np.array_equal(got.vectors, spec.vectors)
    assert key != SpectrumCache.key(4, 2, np.pi / 2, np.ones(16), 5, 1e-10, 0.55)


@given(st.floats(0.05, 0.45))
def test_spectrum_symmetric_about_zero_without_potential(phi_frac):
    # bipartite hopping: the many-body spectrum is symmetric under E -> -E
    geom = LatticeGeometry(3, phi=2 * np.pi * phi_frac)
    b = build_basis(9, 2)
    E = full_spectrum(build_hhbh(geom, 0.55, b)).energies
    assert np.allclose(E, -E[::-1], atol=1e-10)

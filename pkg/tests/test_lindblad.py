from math import comb

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, strategies as st

from fcistab.floquet import CavitySpec, calibrate_drive, dress_cavity
from fcistab.lattice import LatticeGeometry, build_basis, build_hhbh, number_operator
from fcistab.lindblad import (ChebyshevPropagator, LindbladError, Observer, build_composite, cavity_occupation,
                              direct_lindblad, eigenstate_mixture_sampler, hermitian_bounds,
                              infinite_temperature_sampler, lattice_reduced, run_trajectories, two_site_toy)
from fcistab.spectra import full_spectrum


def dressed(site, chi=0.05, alpha=0.5, kappa=0.3, d=1.0):
    return CavitySpec(site, 0.5, 30.0, 0.0, kappa, d, chi, alpha)


@pytest.fixture(scope="module")
def lattice33():
    geom = LatticeGeometry(3, phi=np.pi / 2)
    b = build_basis(9, 2)
    return b, build_hhbh(geom, 0.55, b)


def test_fig1a_dimension():
    drive = calibrate_drive(np.pi / 2)
    b = build_basis(16, 2)
    H = build_hhbh(LatticeGeometry(4, phi=np.pi / 2), 0.55, b)
    cavs = [dress_cavity(CavitySpec(s, 0.8, 38.0, 0.4, 0.04, 0.13), drive) for s in (1, 5, 15, 4)]
    ham = build_composite(H, b, cavs, 2)
    assert ham.space.dim == 120 * 3 ** 4 == 9720
    assert len(ham.jumps) == 4


def test_dimension_cap(lattice33):
    b, H = lattice33
    with pytest.raises(LindbladError):
        build_composite(H, b, [dressed(0)], 2, dim_cap=50)
    with pytest.raises(LindbladError):
        build_composite(H, b, [dressed(0)], 0)
    with pytest.raises(LindbladError):
        build_composite(H, b, [CavitySpec(0, 0.5, 30.0, 0.1, 0.1, 1.0)], 2)


def test_no_cavities_is_lattice_model(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [], [])
    assert ham.space.dim == comb(9, 2)
    assert abs(ham.H - H).max() == 0 and ham.jumps == []


def test_index_layout(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0), dressed(4)], [2, 1])
    sp_ = ham.space
    seen = {sp_.index(i, (a, c)) for i in range(b.dim) for a in range(3) for c in range(2)}
    assert seen == set(range(sp_.dim))
    assert sp_.unravel(sp_.index(5, (2, 1))) == (5, (2, 1))


def test_zero_chi_factorizes(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0, chi=0.0)], 2)
    P = sp.kron(sp.diags((np.arange(b.dim) == 3).astype(float)), sp.identity(3))
    assert abs(ham.H @ P - P @ ham.H - sp.kron(H @ P.toarray()[::3, ::3] - P.toarray()[::3, ::3] @ H,
                                              sp.identity(3))).max() < 1e-14
    # the cavity part is d c+c exactly
    E = np.linalg.eigvalsh(ham.H.toarray())
    El = np.linalg.eigvalsh(H.toarray())
    assert np.allclose(np.sort(E), np.sort(np.concatenate([El + k * 1.0 for k in range(3)])))


def test_hermitian_and_number_conserving(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0), dressed(4, chi=0.1, alpha=0.3 - 0.2j)], 2)
    assert abs(ham.H - ham.H.conj().T).max() < 1e-14
    Ntot = sp.kron(sum(number_operator(b, j) for j in range(9)), sp.identity(9))
    assert abs(ham.H @ Ntot - Ntot @ ham.H).max() < 1e-12
    for C in ham.jumps:
        assert abs(C @ Ntot - Ntot @ C).max() < 1e-14


def test_chebyshev_matches_expm():
    rng = np.random.default_rng(0)
    n = 30
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Hm = 0.5 * (A + A.conj().T)
    B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    G = 0.002 * B @ B.conj().T
    Anh = sp.csr_matrix(Hm - 1j * G)
    w = np.linalg.eigvalsh(Hm)
    prop = ChebyshevPropagator(Anh, (w[0], w[-1]), np.linalg.eigvalsh(G)[-1], tol=1e-10)
    X = rng.normal(size=(n, 3)) + 0j
    for h in (0.1, 0.7, 2.0):
        K = prop.order(h)
        ref = sla.expm(-1j * (Hm - 1j * G) * h) @ X
        assert np.abs(prop.step(X, h, K) - ref).max() < 1e-9
        stack = prop.expansion(X[:, 0], K)
        for s in (0.0, 0.3 * h, h):
            ref_s = sla.expm(-1j * (Hm - 1j * G) * s) @ X[:, 0]
            assert np.abs(prop.evaluate(stack, s) - ref_s).max() < 1e-9


def test_closed_system_conserves_norm_and_energy(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0, kappa=1e-300)], 2)
    # switch decay off entirely
    ham = type(ham)(ham.H, [0 * C for C in ham.jumps], ham.space, [dressed(0, kappa=1e-300)], ham.n_max)
    obs = Observer(ham.space, hamiltonian=ham.H)
    sampler = infinite_temperature_sampler(b, ham.space)
    ens = run_trajectories(ham, sampler, 30.0, 8, 1, obs, n_steps=30)
    e = ens.mean["energy"]
    assert np.abs(e - e[0]).max() < 1e-8
    assert ens.jumps.sum() == 0


def test_pure_eigenstate_stationary_without_jumps(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [], [])
    spec = full_spectrum(H)
    rho0 = np.outer(spec.vectors[:, 2], spec.vectors[:, 2].conj())
    rhos = direct_lindblad(ham, rho0, np.linspace(0, 10, 6))
    assert np.abs(rhos - rho0).max() < 1e-9


def test_free_cavity_decay():
    b = build_basis(2, 1)
    H = build_hhbh(LatticeGeometry(2, rows=1), 1.0, b)
    kappa = 0.4
    ham = build_composite(H, b, [dressed(0, chi=0.0, alpha=0.0, kappa=kappa)], 4)
    psi = np.zeros(ham.space.dim, complex)
    psi[ham.space.index(0, (3,))] = 1.0
    times = np.linspace(0, 10, 11)
    rhos = direct_lindblad(ham, psi, times)
    n = [cavity_occupation(r, ham.space, 0) for r in rhos]
    assert np.allclose(n, 3 * np.exp(-kappa * times), atol=1e-8)


def test_direct_lindblad_dimension_cap(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0)], 8)
    with pytest.raises(LindbladError):
        direct_lindblad(ham, np.eye(ham.space.dim) / ham.space.dim, [0, 1])


def test_sampler_statistics(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0)], 1)
    sampler = infinite_temperature_sampler(b, ham.space)
    rng = np.random.default_rng(0)
    n = 20000
    counts = np.zeros(ham.space.dim)
    for _ in range(n):
        counts += np.abs(sampler(rng)) ** 2
    rho = counts / n
    lat = rho.reshape(b.dim, 2)
    assert np.all(lat[:, 1] == 0)
    occ = lat[:, 0] @ b.occupations()
    assert np.allclose(occ, 2 / 9, atol=0.02)
    purity = np.sum(lat[:, 0] ** 2)
    assert abs(purity - 1 / b.dim) < 0.2 / b.dim


def test_eigenstate_sampler(lattice33):
    b, H = lattice33
    spec = full_spectrum(H)
    ham = build_composite(H, b, [dressed(0)], 1)
    s = eigenstate_mixture_sampler(spec, ham.space, 3)
    psi = s(np.random.default_rng(1))
    assert np.isclose(np.linalg.norm(psi), 1)
    with pytest.raises(LindbladError):
        eigenstate_mixture_sampler(spec, ham.space, 0)


@pytest.fixture(scope="module")
def toy():
    H, basis, spec, cav = two_site_toy(chi=0.1, kappa=0.5)
    ham = build_composite(H, basis, [cav], 3)
    psi0 = np.kron(spec.vectors[:, 1], np.eye(4)[0]).astype(complex)
    return ham, spec, psi0


def test_trajectories_match_density_matrix(toy):
    ham, spec, psi0 = toy
    times = np.linspace(0, 60, 13)
    rhos = direct_lindblad(ham, psi0, times)
    obs = Observer(ham.space, spectrum=spec, cavity_sites=(0,))
    ens = run_trajectories(ham, lambda rng: psi0.copy(), 60.0, 3000, 11, obs, n_steps=12)
    pops = np.array([[np.real(v.conj() @ lattice_reduced(r, ham.space) @ v) for v in spec.vectors.T]
                     for r in rhos])
    err = ens.stderr["populations"]
    ok = np.abs(ens.mean["populations"] - pops) <= 3 * err + 1e-12
    assert ok[1:].all()
    photons = np.array([cavity_occupation(r, ham.space, 0) for r in rhos])
    assert np.all(np.abs(ens.mean["photon_0"] - photons) <= 3 * ens.stderr["photon_0"] + 1e-6)


def test_deterministic_given_seed(toy):
    ham, spec, psi0 = toy
    obs = Observer(ham.space, spectrum=spec)
    a = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 50, 5, obs, n_steps=10, batch_size=16)
    b = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 50, 5, obs, n_steps=10, batch_size=16)
    c = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 50, 6, obs, n_steps=10, batch_size=16)
    assert np.array_equal(a.mean["fidelity"], b.mean["fidelity"])
    assert np.array_equal(a.jumps, b.jumps)
    assert not np.array_equal(a.jumps, c.jumps)


def test_batching_does_not_change_result(toy):
    ham, spec, psi0 = toy
    obs = Observer(ham.space, spectrum=spec)
    a = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 40, 5, obs, n_steps=10, batch_size=40)
    b = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 40, 5, obs, n_steps=10, batch_size=7)
    assert np.allclose(a.mean["fidelity"], b.mean["fidelity"], atol=1e-9)
    assert np.array_equal(a.jumps, b.jumps)


def test_checkpoint_resume(toy, tmp_path):
    ham, spec, psi0 = toy
    obs = Observer(ham.space, spectrum=spec)
    path = str(tmp_path / "ck.npz")
    full = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 30, 2, obs, n_steps=10, batch_size=10)
    run_trajectories(ham, lambda r: psi0.copy(), 20.0, 30, 2, obs, n_steps=10, batch_size=10, checkpoint=path)
    resumed = run_trajectories(ham, lambda r: psi0.copy(), 20.0, 30, 2, obs, n_steps=10, batch_size=10,
                               checkpoint=path)
    assert np.allclose(full.mean["fidelity"], resumed.mean["fidelity"], atol=1e-12)
    with pytest.raises(LindbladError):
        run_trajectories(ham, lambda r: psi0.copy(), 20.0, 30, 3, obs, n_steps=10, batch_size=10,
                         checkpoint=path)


def test_particle_number_conserved_along_trajectories(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0, chi=0.2, alpha=1.0, kappa=0.5)], 2)
    Nop = sp.kron(sum(number_operator(b, j) for j in range(9)), sp.identity(3)).tocsr()

    class NumberObserver(Observer):
        def __call__(self, block):
            flat = block.reshape(block.shape[0], -1)
            return {"N": np.real(np.einsum("bi,ib->b", flat.conj(), Nop @ flat.T))}

    ens = run_trajectories(ham, infinite_temperature_sampler(b, ham.space), 40.0, 20, 0,
                           NumberObserver(ham.space), n_steps=20)
    assert np.abs(ens.mean["N"] - 2).max() < 1e-10
    assert ens.jumps.sum() > 0


def test_pumps_off_leave_cavity_empty(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0, alpha=0.0, kappa=0.5)], 2)
    spec = full_spectrum(H)
    obs = Observer(ham.space, spectrum=spec, cavity_sites=(0,))
    ens = run_trajectories(ham, eigenstate_mixture_sampler(spec, ham.space, 5), 30.0, 20, 0, obs, n_steps=10)
    assert np.abs(ens.mean["photon_0"]).max() < 1e-12
    assert np.abs(ens.mean["populations"] - ens.mean["populations"][0]).max() < 1e-10
    assert ens.truncation_ok()


def test_truncation_flag_raised_when_cavity_fills(lattice33):
    b, H = lattice33
    ham = build_composite(H, b, [dressed(0, chi=1.0, alpha=3.0, kappa=0.2, d=0.2)], 1)
    ens = run_trajectories(ham, infinite_temperature_sampler(b, ham.space), 10.0, 10, 0,
                           Observer(ham.space, cavity_sites=(0,)), n_steps=10)
    assert not ens.truncation_ok() and ens.flags


def test_bad_inputs(toy):
    ham, spec, psi0 = toy
    obs = Observer(ham.space)
    with pytest.raises(LindbladError):
        run_trajectories(ham, lambda r: psi0.copy(), 0.0, 1, 0, obs)
    with pytest.raises(LindbladError):
        run_trajectories(ham, lambda r: 2 * psi0, 1.0, 1, 0, obs)


@given(st.floats(0.01, 1.0), st.floats(0.1, 2.0))
def test_hermitian_bounds_enclose_spectrum(chi, d):
    H, basis, spec, cav = two_site_toy(chi=chi, detuning=d)
    ham = build_composite(H, basis, [cav], 2)
    lo, hi = hermitian_bounds(ham.H)
    w = np.linalg.eigvalsh(ham.H.toarray())
    assert lo <= w[0] + 1e-12 and hi >= w[-1] - 1e-12

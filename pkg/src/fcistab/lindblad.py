"""Lattice plus displaced-frame cavities: effective Lindblad dynamics.

States live in ``lattice (x) cavity_1 (x) ... (x) cavity_K`` with the lattice
index slowest. Cavity ``j`` keeps Fock levels ``0..n_max_j`` of the displaced
mode; its vacuum is the coherent state the bare pumped cavity relaxes to.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from math import prod

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg.blas import zaxpy
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from .bessel import besselj_orders
from .lattice import FockBasis, check_hermitian
from .spectra import Spectrum

DIM_CAP = 50_000
DENSE_RHO_CAP = 300
CROUZEIX = 1.0 + np.sqrt(2.0)


class LindbladError(RuntimeError):
    pass


@dataclass(frozen=True)
class CompositeSpace:
    lattice_dim: int
    cavity_dims: tuple[int, ...]

    @property
    def cavity_dim(self) -> int:
        return prod(self.cavity_dims)

    @property
    def dim(self) -> int:
        return self.lattice_dim * self.cavity_dim

    def index(self, lattice_index: int, cavity_levels=()) -> int:
        levels = tuple(cavity_levels) or (0,) * len(self.cavity_dims)
        return lattice_index * self.cavity_dim + int(np.ravel_multi_index(levels, self.cavity_dims)) \
            if self.cavity_dims else lattice_index

    def unravel(self, i: int) -> tuple[int, tuple[int, ...]]:
        lat, cav = divmod(int(i), self.cavity_dim)
        levels = tuple(int(x) for x in np.unravel_index(cav, self.cavity_dims)) if self.cavity_dims else ()
        return lat, levels


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    H: sp.csr_matrix
    jumps: list
    space: CompositeSpace
    cavities: list
    n_max: tuple[int, ...]

    @property
    def decay_bound(self) -> float:
        """Largest eigenvalue of ``(1/2) sum_j kappa_j c+_j c_j`` on the truncated space."""
        return 0.5 * sum(c.kappa * n for c, n in zip(self.cavities, self.n_max))

    def nonhermitian(self) -> sp.csr_matrix:
        H = self.H.astype(complex)
        for C in self.jumps:
            H = H - 0.5j * (C.conj().T @ C)
        return sp.csr_matrix(H)


def _ladder(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


def _embed(ops) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


def build_composite(H_lat, basis: FockBasis, cavities, n_max, dim_cap: int = DIM_CAP) -> EffectiveHamiltonian:
    """``H_eff = H_FCI - sum_j chi_j n_j (c+c + alpha c+ + alpha* c) + sum_j d_j c+c`` and jumps ``sqrt(kappa) c``."""
    cavities = list(cavities)
    if np.isscalar(n_max):
        n_max = [int(n_max)] * len(cavities)
    n_max = tuple(int(n) for n in n_max)
    if len(n_max) != len(cavities):
        raise LindbladError("need one truncation per cavity")
    if any(n < 1 for n in n_max):
        raise LindbladError("cavity truncation n_max must be >= 1")
    for c in cavities:
        if not c.dressed:
            raise LindbladError(f"cavity at site {c.site} lacks chi/alpha")
    space = CompositeSpace(basis.dim, tuple(n + 1 for n in n_max))
    if space.dim > dim_cap:
        raise LindbladError(f"composite dimension {space.dim} exceeds cap {dim_cap}")
    if H_lat.shape != (basis.dim, basis.dim):
        raise LindbladError("lattice Hamiltonian does not match basis")

    eye_lat = sp.identity(basis.dim, format="csr", dtype=complex)
    eyes = [sp.identity(n + 1, format="csr", dtype=complex) for n in n_max]
    H = _embed([sp.csr_matrix(H_lat, dtype=complex)] + eyes)
    jumps = []
    for k, (cav, nm) in enumerate(zip(cavities, n_max)):
        a = _ladder(nm).astype(complex)
        num = a.conj().T @ a
        drive = num + cav.alpha * a.conj().T + np.conj(cav.alpha) * a
        ops = list(eyes)
        ops[k] = drive
        nj = sp.diags(basis.site_occupation(cav.site).astype(complex), format="csr")
        H = H - cav.chi * _embed([nj] + ops)
        ops[k] = num
        H = H + cav.d * _embed([eye_lat] + ops)
        ops[k] = a
        jumps.append(np.sqrt(cav.kappa) * _embed([eye_lat] + ops))
    H = check_hermitian(H, 1e-12 * max(1.0, abs(H).max()))
    return EffectiveHamiltonian(H, jumps, space, cavities, n_max)


# ---------------------------------------------------------------- samplers

def infinite_temperature_sampler(basis: FockBasis, space: CompositeSpace):
    """Uniformly random lattice Fock configuration with every cavity in its vacuum."""
    def sample(rng: np.random.Generator) -> np.ndarray:
        psi = np.zeros(space.dim, dtype=complex)
        psi[space.index(int(rng.integers(basis.dim)))] = 1.0
        return psi
    return sample


def eigenstate_mixture_sampler(spec: Spectrum, space: CompositeSpace, n_states: int):
    """Uniformly random one of the ``n_states`` lowest eigenstates, cavities in vacuum."""
    if not 1 <= n_states <= spec.k:
        raise LindbladError(f"n_states must lie in [1, {spec.k}]")

    def sample(rng: np.random.Generator) -> np.ndarray:
        psi = np.zeros((space.lattice_dim, space.cavity_dim), dtype=complex)
        psi[:, 0] = spec.vectors[:, int(rng.integers(n_states))]
        return psi.ravel()
    return sample


# ---------------------------------------------------------------- propagator

def _ellipse_parameter(z: complex) -> float:
    r = np.sqrt(complex(z) ** 2 - 1)
    return float(max(abs(z + r), abs(z - r)))


class ChebyshevPropagator:
    """``exp(-i A t)`` for ``A = H - i Gamma`` with Hermitian ``H`` and ``Gamma >= 0``.

    The Jacobi-Anger series in Chebyshev polynomials of the rescaled operator is
    truncated using the field-of-values bound ``||T_k(A')|| <= (1+sqrt 2) rho^k``,
    where ``rho`` labels the Bernstein ellipse enclosing the rectangle
    ``[a, b] x [-gamma, 0]`` that contains the numerical range of ``A``.
    """

    def __init__(self, A: sp.csr_matrix, bounds: tuple[float, float], gamma: float, tol: float = 1e-10):
        a, b = bounds
        width = b - a
        pad = 0.01 * width + 1e-8
        a, b = a - pad, b + pad
        self.center = 0.5 * (a + b)
        self.half_width = 0.5 * (b - a)
        self.gamma = float(gamma)
        self.tol = tol
        n = A.shape[0]
        self.As = sp.csr_matrix((A - self.center * sp.identity(n, format="csr")) / self.half_width)
        self.rho = _ellipse_parameter(1.0 - 1j * self.gamma / self.half_width)
        self.matvecs = 0

    @classmethod
    def for_hamiltonian(cls, ham: EffectiveHamiltonian, tol: float = 1e-10) -> "ChebyshevPropagator":
        return cls(ham.nonhermitian(), hermitian_bounds(ham.H), ham.decay_bound, tol)

    def coefficients(self, h: float, K: int) -> np.ndarray:
        x = self.half_width * h
        J = besselj_orders(K, x)
        k = np.arange(K + 1)
        c = 2.0 * (-1j) ** k * J
        c[0] = J[0]
        return c * np.exp(-1j * self.center * h)

    def order(self, h: float) -> int:
        """Smallest truncation order meeting the tolerance for steps up to ``h``."""
        x = self.half_width * h
        top = int(x + 60 + 3 * np.sqrt(x + 1) * 4)
        J = np.abs(besselj_orders(top, x))
        weights = 2 * J * self.rho ** np.arange(top + 1)
        tail = CROUZEIX * np.cumsum(weights[::-1])[::-1]
        ok = np.nonzero(tail < self.tol)[0]
        if len(ok) == 0:
            raise LindbladError("Chebyshev step too long for the requested tolerance")
        K = max(int(ok[0]), 1)
        if np.max(weights[: K + 1]) * (K + 1) * 1e-16 > 0.1 * self.tol:
            raise LindbladError("Chebyshev step would amplify round-off beyond tolerance")
        return K

    def best_step(self, interval: float, x_candidates=(4.0, 8.0, 12.0, 16.0, 24.0, 32.0)) -> tuple[int, float, int]:
        """Split ``interval`` into equal substeps minimizing matvecs; returns (n_sub, h, K)."""
        best = None
        for xs in x_candidates:
            n_sub = max(1, int(np.ceil(interval * self.half_width / xs)))
            h = interval / n_sub
            try:
                K = self.order(h)
            except LindbladError:
                continue
            cost = n_sub * K
            if best is None or cost < best[0]:
                best = (cost, n_sub, h, K)
        if best is None:
            raise LindbladError("no admissible Chebyshev step")
        return best[1], best[2], best[3]

    def step(self, X: np.ndarray, h: float, K: int) -> np.ndarray:
        c = self.coefficients(h, K)
        v_prev = np.ascontiguousarray(X, dtype=complex)
        v = self.As @ v_prev
        out = c[0] * v_prev
        out = _axpy(v, out, c[1])
        for k in range(2, K + 1):
            v_next = self.As @ v
            v_next *= 2.0
            v_next -= v_prev
            out = _axpy(v_next, out, c[k])
            v_prev, v = v, v_next
        self.matvecs += K
        return out

    def expansion(self, x: np.ndarray, K: int) -> np.ndarray:
        """Stack ``[T_0(A')x, ..., T_K(A')x]`` for dense output at arbitrary substep times."""
        stack = np.empty((K + 1, len(x)), dtype=complex)
        stack[0] = x
        stack[1] = self.As @ x
        for k in range(2, K + 1):
            stack[k] = 2.0 * (self.As @ stack[k - 1]) - stack[k - 2]
        self.matvecs += K
        return stack

    def evaluate(self, stack: np.ndarray, s: float) -> np.ndarray:
        return self.coefficients(s, len(stack) - 1) @ stack


def _axpy(x: np.ndarray, y: np.ndarray, a: complex) -> np.ndarray:
    """``y += a x`` in place on contiguous complex arrays."""
    return zaxpy(x.ravel(), y.ravel(), a=a).reshape(y.shape)


def hermitian_bounds(H: sp.spmatrix) -> tuple[float, float]:
    n = H.shape[0]
    if n <= 64:
        w = np.linalg.eigvalsh(H.toarray() if sp.issparse(H) else H)
        return float(w[0]), float(w[-1])
    lo = eigsh(H, k=1, which="SA", tol=1e-8, return_eigenvectors=False)[0]
    hi = eigsh(H, k=1, which="LA", tol=1e-8, return_eigenvectors=False)[0]
    return float(lo), float(hi)


# ---------------------------------------------------------------- observers

@dataclass
class Observer:
    """Per-trajectory observables of a normalized state block of shape ``(B, lattice, cavity)``."""

    space: CompositeSpace
    spectrum: Spectrum | None = None
    bulk_sites: list | None = None
    basis: FockBasis | None = None
    cavity_sites: tuple = ()
    hamiltonian: sp.csr_matrix | None = None

    def __post_init__(self):
        if self.bulk_sites is not None:
            if self.basis is None:
                raise LindbladError("bulk density needs the lattice basis")
            occ = self.basis.occupations()[:, list(self.bulk_sites)]
            self._bulk_weights = occ.sum(axis=1) / len(self.bulk_sites)

    def __call__(self, block: np.ndarray) -> dict[str, np.ndarray]:
        B = block.shape[0]
        out: dict[str, np.ndarray] = {}
        probs = np.abs(block) ** 2
        lat = probs.sum(axis=2)
        if self.spectrum is not None:
            amps = np.matmul(self.spectrum.vectors.conj().T, block)
            pops = (np.abs(amps) ** 2).sum(axis=2)
            out["populations"] = pops
            out["fidelity"] = pops[:, self.spectrum.ground_multiplet].sum(axis=1)
        if self.bulk_sites is not None:
            out["bulk_density"] = lat @ self._bulk_weights
        if self.space.cavity_dims:
            cav = probs.sum(axis=1).reshape((B,) + self.space.cavity_dims)
            for k, site in enumerate(self.cavity_sites):
                axes = tuple(i + 1 for i in range(len(self.space.cavity_dims)) if i != k)
                marg = cav.sum(axis=axes)
                levels = np.arange(self.space.cavity_dims[k])
                out[f"photon_{site}"] = marg @ levels
                out[f"top_{site}"] = marg[:, -1]
        if self.hamiltonian is not None:
            flat = block.reshape(B, -1)
            out["energy"] = np.real(np.einsum("bi,ib->b", flat.conj(), self.hamiltonian @ flat.T))
        return out


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray
    mean: dict
    stderr: dict
    n_traj: int
    seed: int
    jumps: np.ndarray
    matvecs: int
    flags: list = field(default_factory=list)

    def truncation_ok(self, limit: float = 1e-4) -> bool:
        return all(np.max(v) < limit for k, v in self.mean.items() if k.startswith("top_"))


class _Accumulator:
    def __init__(self, n_times):
        self.n_times = n_times
        self.s1: dict = {}
        self.s2: dict = {}
        self.count = 0

    def add(self, it: int, values: dict):
        for k, v in values.items():
            if k not in self.s1:
                shape = (self.n_times,) + v.shape[1:]
                self.s1[k] = np.zeros(shape)
                self.s2[k] = np.zeros(shape)
            self.s1[k][it] += v.sum(axis=0)
            self.s2[k][it] += (v ** 2).sum(axis=0)

    def finish(self, n):
        mean = {k: v / n for k, v in self.s1.items()}
        err = {}
        for k in self.s1:
            if n > 1:
                var = (self.s2[k] - n * mean[k] ** 2) / (n - 1)
                err[k] = np.sqrt(np.maximum(var, 0.0) / n)
            else:
                err[k] = np.full_like(mean[k], np.nan)
        return mean, err


def _normalized_block(X: np.ndarray, space: CompositeSpace) -> np.ndarray:
    norms = np.linalg.norm(X, axis=0)
    return (X / norms).T.reshape(-1, space.lattice_dim, space.cavity_dim)


def run_trajectories(ham: EffectiveHamiltonian, sampler, t_final: float, n_traj: int, seed: int,
                     observer: Observer, n_steps: int = 400, tol: float = 1e-10,
                     batch_size: int = 200, propagator: ChebyshevPropagator | None = None,
                     checkpoint=None) -> TrajectoryEnsemble:
    """Monte-Carlo wavefunction unraveling on ``n_steps + 1`` uniform record times.

    Each trajectory owns an independent random stream spawned from ``seed``; a
    jump happens when the squared norm under the non-Hermitian drift falls to a
    pre-drawn uniform variate, located by bracketed root finding on the dense
    Chebyshev output. With ``checkpoint`` (a path) the partial sums are saved
    after every batch and a matching file is resumed from.
    """
    if t_final <= 0:
        raise LindbladError("t_final must be positive")
    if n_traj < 1:
        raise LindbladError("need at least one trajectory")
    space = ham.space
    prop = propagator or ChebyshevPropagator.for_hamiltonian(ham, tol)
    times = np.linspace(0.0, t_final, n_steps + 1)
    n_sub, h, K = prop.best_step(times[1] - times[0])
    acc = _Accumulator(len(times))
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_traj)]
    jump_counts = np.zeros(n_traj, dtype=int)
    jump_ops = ham.jumps
    tag = f"{space.dim}:{n_traj}:{seed}:{t_final!r}:{n_steps}:{batch_size}:{tol!r}"
    first = _load_checkpoint(checkpoint, tag, acc, jump_counts) if checkpoint else 0

    for start in range(first, n_traj, batch_size):
        ids = list(range(start, min(start + batch_size, n_traj)))
        X = np.empty((space.dim, len(ids)), dtype=complex)
        for col, i in enumerate(ids):
            psi = sampler(streams[i])
            nrm = np.linalg.norm(psi)
            if abs(nrm - 1) > 1e-10:
                raise LindbladError("sampler returned an unnormalized state")
            X[:, col] = psi
        thresholds = np.array([streams[i].random() for i in ids])
        acc.add(0, observer(_normalized_block(X, space)))
        for it in range(1, len(times)):
            for _ in range(n_sub):
                X_new = prop.step(X, h, K)
                n2 = np.einsum("ij,ij->j", X_new.conj(), X_new).real
                if np.any(n2 > 1 + 1e-8):
                    raise LindbladError(f"norm grew to {n2.max():.12f}: integrator fault")
                for col in np.nonzero(n2 < thresholds)[0]:
                    i = ids[col]
                    X_new[:, col], thresholds[col], nj = _resolve_jumps(
                        prop, X[:, col], h, K, thresholds[col], jump_ops, streams[i])
                    jump_counts[i] += nj
                X = X_new
            acc.add(it, observer(_normalized_block(X, space)))
        if checkpoint:
            _save_checkpoint(checkpoint, tag, acc, jump_counts, start + len(ids))
    mean, err = acc.finish(n_traj)
    ens = TrajectoryEnsemble(times, mean, err, n_traj, seed, jump_counts, prop.matvecs)
    if not ens.truncation_ok():
        ens.flags.append("cavity truncation: top Fock level population reached 1e-4; increase n_max")
    return ens


def _save_checkpoint(path, tag, acc, jumps, done):
    arrays = {f"s1_{k}": v for k, v in acc.s1.items()}
    arrays.update({f"s2_{k}": v for k, v in acc.s2.items()})
    tmp = f"{path}.tmp.npz"
    np.savez(tmp, tag=tag, done=done, jumps=jumps, **arrays)
    os.replace(tmp, path)


def _load_checkpoint(path, tag, acc, jumps) -> int:
    if not os.path.exists(path):
        return 0
    with np.load(path) as f:
        if str(f["tag"]) != tag:
            raise LindbladError(f"checkpoint {path} belongs to a different run")
        for name in f.files:
            if name.startswith("s1_"):
                acc.s1[name[3:]] = f[name].copy()
            elif name.startswith("s2_"):
                acc.s2[name[3:]] = f[name].copy()
        jumps[:] = f["jumps"]
        return int(f["done"])


def _resolve_jumps(prop, x0, h, K, r, jumps, rng):
    """Propagate one trajectory over ``[0, h]`` applying every jump on the way."""
    x, remaining, n_jumps = x0, h, 0
    while True:
        stack = prop.expansion(x, K)
        end = prop.evaluate(stack, remaining)
        if np.vdot(end, end).real >= r:
            return end, r, n_jumps

        def excess(s):
            y = prop.evaluate(stack, s)
            return np.vdot(y, y).real - r

        if excess(0.0) <= 0:
            s_jump = 0.0
        else:
            s_jump = brentq(excess, 0.0, remaining, xtol=1e-12, rtol=1e-10, maxiter=200)
        y = prop.evaluate(stack, s_jump)
        weights = np.array([np.vdot(C @ y, C @ y).real for C in jumps])
        if weights.sum() <= 0:
            raise LindbladError("jump requested from a state with no decay channel")
        ch = int(rng.choice(len(jumps), p=weights / weights.sum()))
        y = jumps[ch] @ y
        x = y / np.linalg.norm(y)
        r = rng.random()
        remaining -= s_jump
        n_jumps += 1
        if remaining <= 0:
            return x, r, n_jumps


# ---------------------------------------------------------------- density matrix oracle

def direct_lindblad(ham: EffectiveHamiltonian, rho0, times, rtol: float = 1e-10, atol: float = 1e-12,
                    check_tol: float = 1e-9) -> np.ndarray:
    """Integrate ``drho/dt = -i[H, rho] + sum_j D[C_j] rho`` densely (DOP853)."""
    n = ham.space.dim
    if n > DENSE_RHO_CAP:
        raise LindbladError(f"dimension {n} too large for dense density matrices (cap {DENSE_RHO_CAP})")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    A = ham.nonhermitian().toarray()
    Cs = [C.toarray() for C in ham.jumps]

    def rhs(_t, y):
        r = y.reshape(n, n)
        out = -1j * (A @ r - r @ A.conj().T)
        for C in Cs:
            out += C @ r @ C.conj().T
        return out.ravel()

    times = np.asarray(times, dtype=float)
    sol = solve_ivp(rhs, (times[0], times[-1]), rho0.ravel(), method="DOP853", t_eval=times,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise LindbladError(f"density-matrix integration failed: {sol.message}")
    rhos = sol.y.T.reshape(len(times), n, n)
    for r in rhos:
        if abs(np.trace(r) - 1) > check_tol:
            raise LindbladError("trace not preserved")
        if np.abs(r - r.conj().T).max() > check_tol:
            raise LindbladError("density matrix lost hermiticity")
        if np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] < -check_tol:
            raise LindbladError("density matrix lost positivity")
    return rhos


def lattice_reduced(rho: np.ndarray, space: CompositeSpace) -> np.ndarray:
    dl, dc = space.lattice_dim, space.cavity_dim
    return np.trace(rho.reshape(dl, dc, dl, dc), axis1=1, axis2=3)


def cavity_occupation(rho: np.ndarray, space: CompositeSpace, k: int) -> float:
    dl, dc = space.lattice_dim, space.cavity_dim
    diag = np.real(np.diagonal(rho)).reshape((dl,) + space.cavity_dims).sum(axis=0)
    axes = tuple(i for i in range(len(space.cavity_dims)) if i != k)
    marg = diag.sum(axis=axes) if axes else diag
    return float(marg @ np.arange(space.cavity_dims[k]))


def two_site_toy(J: float = 1.0, chi: float = 0.05, kappa: float = 0.5, alpha_abs: float = 1.0,
                 detuning: float | None = None):
    """Single boson on two sites with one cavity on site 0, tuned to the bonding gap.

    Returns ``(H_lat, basis, spectrum, cavity)``; defaults sit deep in the
    bad-cavity regime (``kappa >> chi |alpha| M``, gap ``>> kappa``).
    """
    from .floquet import CavitySpec
    from .lattice import LatticeGeometry, build_basis, build_hhbh
    from .spectra import full_spectrum

    geom = LatticeGeometry(2, rows=1)
    basis = build_basis(2, 1)
    H = build_hhbh(geom, J, basis)
    spec = full_spectrum(H)
    d = spec.energies[1] - spec.energies[0] if detuning is None else detuning
    pump = alpha_abs * abs(d - 0.5j * kappa)
    alpha = -pump / (d - 0.5j * kappa)
    cav = CavitySpec(0, 1.0, 30.0, pump, kappa, d, chi, alpha)
    return H, basis, spec, cav

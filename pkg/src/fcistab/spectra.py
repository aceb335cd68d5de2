"""Eigenstates of sector Hamiltonians and density transition tables."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .lattice import FockBasis

DENSE_CAP = 4096
DEGENERACY_TOL = 1e-9


class SpectrumError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual=np.inf):
        super().__init__(f"{msg} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


@dataclass(frozen=True, eq=False)
class Spectrum:
    energies: np.ndarray
    vectors: np.ndarray
    method: str
    residual: float
    complete: bool

    @property
    def k(self) -> int:
        return len(self.energies)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def ground_multiplet(self) -> np.ndarray:
        """Indices of states degenerate with the ground state."""
        return np.nonzero(self.energies - self.energies[0] < DEGENERACY_TOL)[0]

    def gaps(self) -> np.ndarray:
        return self.energies[1:] - self.energies[0]


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)[None, :]


def _residual(H, energies, vecs) -> float:
    R = H @ vecs - vecs * energies[None, :]
    return float(np.max(np.linalg.norm(R, axis=0))) if vecs.size else 0.0


def _operator_scale(H) -> float:
    return float(abs(H).sum(axis=1).max()) if sp.issparse(H) else float(np.abs(H).sum(axis=1).max())


def full_spectrum(H, dense_cap: int = DENSE_CAP) -> Spectrum:
    """All eigenpairs by dense diagonalization, ascending."""
    dim = H.shape[0]
    if dim > dense_cap:
        raise SpectrumError(f"dimension {dim} exceeds dense cap {dense_cap}; use lowest_eigenpairs")
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    w, v = np.linalg.eigh(A)
    v = _fix_phases(v)
    return Spectrum(w, v, "dense", _residual(A, w, v), True)


def lowest_eigenpairs(H, k: int, tol: float = 1e-10, seed: int = 0, maxiter: int | None = None) -> Spectrum:
    """The ``k`` lowest eigenpairs by implicitly restarted Lanczos.

    A Rayleigh-Ritz pass over the converged subspace restores exact
    orthonormality inside degenerate multiplets.
    """
    dim = H.shape[0]
    if not 1 <= k < dim:
        raise SpectrumError(f"need 1 <= k < {dim}, got k = {k}")
    H = sp.csr_matrix(H)
    v0 = np.random.default_rng(seed).standard_normal(dim).astype(H.dtype)
    scale = max(_operator_scale(H), 1e-300)
    ncv = min(dim, max(2 * k + 1, k + 40))
    try:
        w, v = eigsh(H, k=k, which="SA", tol=tol, v0=v0, ncv=ncv, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        best = _residual(H, exc.eigenvalues, exc.eigenvectors) if len(exc.eigenvalues) else np.inf
        raise ConvergenceError(f"Lanczos did not converge for k = {k}", best) from None
    Q, _ = np.linalg.qr(v)
    Hs = Q.conj().T @ (H @ Q)
    w, u = np.linalg.eigh(0.5 * (Hs + Hs.conj().T))
    v = _fix_phases(Q @ u)
    res = _residual(H, w, v)
    if res > 10 * tol * scale:
        raise ConvergenceError(f"Lanczos residual above tolerance for k = {k}", res)
    return Spectrum(w, v, "lanczos", res, False)


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """Per-site matrices ``M[j][a, b] = <e_a|n_j|e_b>``."""

    sites: tuple[int, ...]
    matrices: np.ndarray

    def __getitem__(self, site: int) -> np.ndarray:
        try:
            return self.matrices[self.sites.index(site)]
        except ValueError:
            raise KeyError(site) from None

    def __contains__(self, site) -> bool:
        return site in self.sites


def transition_table(spec: Spectrum, basis: FockBasis, sites) -> TransitionTable:
    if spec.dim != basis.dim:
        raise SpectrumError(f"spectrum dimension {spec.dim} does not match basis {basis.dim}")
    sites = tuple(dict.fromkeys(int(j) for j in sites))
    V = spec.vectors
    mats = np.empty((len(sites), spec.k, spec.k), dtype=complex)
    for i, j in enumerate(sites):
        occ = basis.site_occupation(j)
        M = V.conj().T @ (occ[:, None] * V)
        mats[i] = 0.5 * (M + M.conj().T)
    return TransitionTable(sites, mats)


def diagonal_expectations(spec: Spectrum, weights: np.ndarray) -> np.ndarray:
    """``<e_a| sum_i weights[i] |i><i| |e_a>`` for a diagonal operator in the Fock basis."""
    return np.einsum("ia,i,ia->a", spec.vectors.conj(), weights, spec.vectors).real


class SpectrumCache:
    """Spectra stored as ``.npz`` files keyed by the sector description."""

    def __init__(self, directory):
        self.directory = Path(directory)

    @staticmethod
    def key(L, N, phi, pot, k, tol, J_eff=1.0) -> str:
        pot = np.ascontiguousarray(np.asarray(pot, dtype=float))
        h = hashlib.sha256()
        h.update(repr((int(L), int(N), float(phi), k, float(tol), float(J_eff))).encode())
        h.update(pot.tobytes())
        return h.hexdigest()[:24]

    def load(self, key: str) -> Spectrum | None:
        path = self.directory / f"{key}.npz"
        if not path.exists():
            return None
        with np.load(path) as f:
            return Spectrum(f["energies"], f["vectors"], str(f["method"]), float(f["residual"]),
                            bool(f["complete"]))

    def store(self, key: str, spec: Spectrum) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        np.savez(self.directory / f"{key}.npz", energies=spec.energies, vectors=spec.vectors,
                 method=spec.method, residual=spec.residual, complete=spec.complete)

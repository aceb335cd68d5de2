"""Hard-core boson Fock bases and sparse operators on open square lattices.

Sites are labelled ``j = L*m + n`` for coordinates ``(m, n)``; ``m`` runs over
``rows`` values (``L`` by default) and ``n`` over ``L`` values. Hopping along
``m`` ("x-bonds") carries the Peierls phase, hopping along ``n`` ("y-bonds")
does not.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12


class LatticeError(ValueError):
    """Invalid lattice, basis, or operator request."""


@dataclass(frozen=True)
class LatticeGeometry:
    L: int
    phi: float = 0.0
    rows: int | None = None

    def __post_init__(self):
        if not 1 <= self.L <= 8:
            raise LatticeError(f"L must lie in [1, 8], got {self.L}")
        if self.rows is not None and not 1 <= self.rows <= 8:
            raise LatticeError(f"rows must lie in [1, 8], got {self.rows}")
        if not np.isfinite(self.phi):
            raise LatticeError("flux must be finite")

    @property
    def n_rows(self) -> int:
        return self.L if self.rows is None else self.rows

    @property
    def n_sites(self) -> int:
        return self.n_rows * self.L

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.L

    def site(self, m: int, n: int) -> int:
        if not (0 <= m < self.n_rows and 0 <= n < self.L):
            raise LatticeError(f"site ({m}, {n}) outside lattice")
        return self.L * m + n

    def coords(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.n_sites:
            raise LatticeError(f"site index {j} outside [0, {self.n_sites})")
        return divmod(j, self.L)

    def bonds(self) -> list[tuple[int, int, str]]:
        """Nearest-neighbour pairs ``(l, l2, axis)`` with ``l2`` one step further along ``axis``."""
        out = []
        for m in range(self.n_rows):
            for n in range(self.L):
                l = self.site(m, n)
                if m + 1 < self.n_rows:
                    out.append((l, self.site(m + 1, n), "x"))
                if n + 1 < self.L:
                    out.append((l, self.site(m, n + 1), "y"))
        return out

    def plaquettes(self) -> list[tuple[int, int, int, int]]:
        """Unit cells as loops (m,n) -> (m,n+1) -> (m+1,n+1) -> (m+1,n)."""
        return [
            (self.site(m, n), self.site(m, n + 1), self.site(m + 1, n + 1), self.site(m + 1, n))
            for m in range(self.n_rows - 1)
            for n in range(self.L - 1)
        ]

    def rotate(self, j: int) -> int:
        """Image of site ``j`` under a 90 degree rotation of a square lattice."""
        if not self.is_square:
            raise LatticeError("rotation needs a square lattice")
        m, n = self.coords(j)
        return self.site(n, self.L - 1 - m)

    def central_block(self) -> list[int]:
        """The 2x2 block of sites around the lattice centre (even L)."""
        if not self.is_square or self.L % 2 or self.L < 2:
            raise LatticeError("central 2x2 block needs an even square lattice")
        c = self.L // 2
        return sorted(self.site(m, n) for m in (c - 1, c) for n in (c - 1, c))


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Hard-core configurations with exactly ``N`` particles, as ascending bit words."""

    n_sites: int
    N: int
    states: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, pattern) -> np.ndarray | int:
        pattern = np.asarray(pattern, dtype=np.int64)
        idx = np.searchsorted(self.states, pattern)
        ok = (idx < self.dim) & (self.states[np.minimum(idx, self.dim - 1)] == pattern)
        if not np.all(ok):
            raise LatticeError("pattern not in basis")
        return int(idx) if idx.ndim == 0 else idx

    def occupations(self) -> np.ndarray:
        """``(dim, n_sites)`` array of 0/1 occupation numbers."""
        return ((self.states[:, None] >> np.arange(self.n_sites)) & 1).astype(float)

    def site_occupation(self, j: int) -> np.ndarray:
        return ((self.states >> j) & 1).astype(float)


def build_basis(n_sites: int, N: int) -> FockBasis:
    """All ``C(n_sites, N)`` hard-core configurations in ascending integer order."""
    if not 0 <= N <= n_sites:
        raise LatticeError(f"particle number {N} outside [0, {n_sites}]")
    if n_sites > 62:
        raise LatticeError("at most 62 sites fit in an int64 occupation word")
    words = np.fromiter(
        (sum(1 << b for b in c) for c in combinations(range(n_sites), N)),
        dtype=np.int64,
        count=comb(n_sites, N),
    )
    words.sort()
    return FockBasis(n_sites, N, words)


def hofstadter_hopping(geom: LatticeGeometry, J_eff: float) -> np.ndarray:
    """Single-particle matrix ``h`` with ``H = sum_ll' h[l, l'] a+_l a_l'``.

    x-bonds: ``-J_eff e^{-i phi n} a+_{m,n} a_{m+1,n}``, y-bonds: ``-J_eff a+_{m,n} a_{m,n+1}``.
    """
    h = np.zeros((geom.n_sites, geom.n_sites), dtype=complex)
    for l, l2, axis in geom.bonds():
        n = geom.coords(l)[1]
        t = -J_eff * (np.exp(-1j * geom.phi * n) if axis == "x" else 1.0)
        h[l, l2] += t
        h[l2, l] += np.conj(t)
    return h


def many_body_hopping(basis: FockBasis, h: np.ndarray) -> sp.csr_matrix:
    """Second-quantize a single-particle matrix on the hard-core basis.

    Diagonal entries of ``h`` act as on-site energies.
    """
    h = np.asarray(h)
    if h.shape != (basis.n_sites, basis.n_sites):
        raise LatticeError(f"hopping matrix shape {h.shape} does not match {basis.n_sites} sites")
    states = basis.states
    rows, cols, vals = [], [], []
    occ = basis.occupations()
    diag = occ @ np.real(np.diag(h))
    rows.append(np.arange(basis.dim))
    cols.append(np.arange(basis.dim))
    vals.append(diag.astype(complex))
    src, dst = np.nonzero(h)
    for l, l2 in zip(src, dst):
        if l == l2:
            continue
        # a+_l a_l2: bit l2 set, bit l empty
        mask = (((states >> l2) & 1) == 1) & (((states >> l) & 1) == 0)
        if not mask.any():
            continue
        i = np.nonzero(mask)[0]
        target = states[i] ^ (np.int64(1) << l) ^ (np.int64(1) << l2)
        rows.append(basis.index(target))
        cols.append(i)
        vals.append(np.full(len(i), h[l, l2], dtype=complex))
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    H.eliminate_zeros()
    return H


def check_hermitian(A: sp.spmatrix, tol: float = HERMITIAN_TOL) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    resid = abs(A - A.conj().T).max() if A.nnz else 0.0
    if resid > tol:
        raise LatticeError(f"operator not Hermitian: max |A - A^H| = {resid:.3e}")
    return A


def pinning_potential(geom: LatticeGeometry, V: float, sites=None) -> np.ndarray:
    """On-site energies with a dip ``-V`` on ``sites`` (central 2x2 block by default)."""
    pot = np.zeros(geom.n_sites)
    if V == 0 and sites is None:
        return pot
    sites = geom.central_block() if sites is None else list(sites)
    for j in sites:
        geom.coords(j)
        pot[j] = -V
    return pot


def build_hhbh(geom: LatticeGeometry, J_eff: float, basis: FockBasis, pot=None) -> sp.csr_matrix:
    """Harper-Hofstadter hard-core boson Hamiltonian plus on-site potential ``pot``."""
    if J_eff <= 0:
        raise LatticeError("J_eff must be positive")
    if basis.n_sites != geom.n_sites:
        raise LatticeError(f"basis has {basis.n_sites} sites, geometry has {geom.n_sites}")
    h = hofstadter_hopping(geom, J_eff)
    if pot is not None:
        pot = np.asarray(pot, dtype=float)
        if pot.shape != (geom.n_sites,) or not np.all(np.isfinite(pot)):
            raise LatticeError("potential must be a finite array with one entry per site")
        h = h + np.diag(pot)
    return check_hermitian(many_body_hopping(basis, h))


def number_operator(basis: FockBasis, j: int) -> sp.csr_matrix:
    if not 0 <= j < basis.n_sites:
        raise LatticeError(f"site {j} outside [0, {basis.n_sites})")
    return sp.diags(basis.site_occupation(j).astype(complex), format="csr")


def gauge_transform(op: sp.spmatrix, phases, basis: FockBasis) -> sp.csr_matrix:
    """Conjugate ``op`` by ``exp(i sum_j phases[j] n_j)``."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (basis.n_sites,) or not np.all(np.isfinite(phases)):
        raise LatticeError("need one finite phase per site")
    u = np.exp(1j * (basis.occupations() @ phases))
    U = sp.diags(u)
    return sp.csr_matrix(U @ op @ U.conj())


def plaquette_fluxes(h: np.ndarray, geom: LatticeGeometry) -> np.ndarray:
    """Phase of the product of tunnelling amplitudes ``-h[next, cur]`` around every plaquette."""
    out = []
    for loop in geom.plaquettes():
        prod = 1.0 + 0j
        for a, b in zip(loop, loop[1:] + loop[:1]):
            prod *= -h[b, a]
        out.append(np.angle(prod))
    return np.array(out)

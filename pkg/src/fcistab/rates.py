"""Pauli rate equation between lattice eigenstates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .floquet import CavitySpec
from .lattice import LatticeGeometry
from .spectra import Spectrum, TransitionTable

SIMPLEX_TOL = 1e-10


class RateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """``R[a, b]`` is the rate of ``|e_b> -> |e_a>``; ``G`` the column-conserving generator."""

    R: np.ndarray
    G: np.ndarray

    @classmethod
    def from_rates(cls, R) -> "RateMatrix":
        R = np.array(R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise RateError("rate matrix must be square")
        if np.any(R < 0):
            raise RateError("rates must be non-negative")
        np.fill_diagonal(R, 0.0)
        G = R - np.diag(R.sum(axis=0))
        return cls(R, G)

    @property
    def k(self) -> int:
        return len(self.R)


def lorentzian_rate(gap, cav: CavitySpec, coupling2):
    """Rate for energy change ``gap = e_final - e_initial`` and ``|<f|n_j|i>|^2 = coupling2``."""
    return (cav.kappa * cav.chi ** 2 * abs(cav.alpha) ** 2 * coupling2
            / ((gap + cav.d) ** 2 + cav.kappa ** 2 / 4))


def rate_matrix(spec: Spectrum, table: TransitionTable, cavities) -> RateMatrix:
    E = spec.energies
    gaps = E[:, None] - E[None, :]
    R = np.zeros((spec.k, spec.k))
    for cav in cavities:
        if not cav.dressed:
            raise RateError(f"cavity at site {cav.site} lacks chi/alpha; call dress_cavity first")
        R += lorentzian_rate(gaps, cav, np.abs(table[cav.site]) ** 2)
    return RateMatrix.from_rates(R)


def check_simplex(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise RateError(f"populations leave the simplex (min {p.min():.3e}, sum {p.sum():.12f})")
    return p


def _clean(p):
    p = np.where(p < 0, 0.0, p)
    return p / p.sum()


def evolve_populations(rates: RateMatrix, p0, t: float) -> np.ndarray:
    """``p(t) = exp(G t) p0``."""
    p0 = check_simplex(p0)
    if t < 0:
        raise RateError("time must be non-negative")
    p = sla.expm(rates.G * t) @ p0
    return _clean(check_simplex(p, 1e-9))


def evolve_on_grid(rates: RateMatrix, p0, times) -> np.ndarray:
    """Populations at each of the uniformly spaced ``times`` (first entry must be 0)."""
    times = np.asarray(times, dtype=float)
    p = check_simplex(p0).copy()
    out = np.empty((len(times), len(p)))
    out[0] = p
    if len(times) < 2:
        return out
    dt = np.diff(times)
    if times[0] != 0 or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise RateError("grid must start at 0 and be uniform")
    P = sla.expm(rates.G * dt[0])
    for i in range(1, len(times)):
        p = _clean(check_simplex(P @ p, 1e-9))
        out[i] = p
    return out


@dataclass(frozen=True, eq=False)
class SteadyState:
    populations: np.ndarray
    extremal: list
    degenerate: bool


def _closed_classes(R: np.ndarray, rel_cut: float = 1e-12):
    cut = rel_cut * (R.max() if R.size and R.max() > 0 else 1.0)
    adj = csr_matrix((R.T > cut).astype(np.int8))  # adj[b, a] = 1 if b -> a
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    outgoing = np.zeros(n_comp, dtype=bool)
    src, dst = adj.nonzero()
    for b, a in zip(src, dst):
        if labels[b] != labels[a]:
            outgoing[labels[b]] = True
    return [np.nonzero(labels == c)[0] for c in range(n_comp) if not outgoing[c]], adj


def _class_kernel(G: np.ndarray, idx: np.ndarray) -> np.ndarray:
    sub = G[np.ix_(idx, idx)]
    A = np.vstack([sub, np.ones((1, len(idx)))])
    b = np.zeros(len(idx) + 1)
    b[-1] = 1.0
    q, *_ = np.linalg.lstsq(A, b, rcond=None)
    p = np.zeros(len(G))
    p[idx] = q
    return _clean(p)


def steady_state(rates: RateMatrix, p0=None) -> SteadyState:
    """Stationary distribution of the rate equation.

    Each closed communicating class carries one extremal stationary
    distribution. With ``p0`` given, only classes reachable from its support
    count. More than one surviving class sets ``degenerate``; the returned
    populations are then the equal mixture of the extremal ones.
    """
    classes, adj = _closed_classes(rates.R)
    if p0 is not None:
        p0 = check_simplex(p0)
        support = np.nonzero(p0 > 0)[0]
        reach = np.zeros(rates.k, dtype=bool)
        stack = list(support)
        reach[support] = True
        while stack:
            b = stack.pop()
            for a in adj.indices[adj.indptr[b]:adj.indptr[b + 1]]:
                if not reach[a]:
                    reach[a] = True
                    stack.append(a)
        classes = [c for c in classes if reach[c].all()]
    extremal = [_class_kernel(rates.G, c) for c in classes]
    if not extremal:
        raise RateError("no closed class found")
    p = _clean(np.mean(extremal, axis=0))
    return SteadyState(p, extremal, len(extremal) > 1)


def symmetrize_cavities(cavities, geom: LatticeGeometry) -> list[CavitySpec]:
    """Add copies of every cavity at the 90, 180 and 270 degree rotated sites."""
    out: dict[int, CavitySpec] = {}
    for cav in cavities:
        j = cav.site
        for _ in range(4):
            image = CavitySpec(j, cav.g, cav.delta, cav.pump, cav.kappa, cav.d, cav.chi, cav.alpha)
            if j in out:
                if out[j].physical()[1:] != image.physical()[1:]:
                    raise RateError(f"rotated copy collides with a different cavity at site {j}")
            else:
                out[j] = image
            j = geom.rotate(j)
    return list(out.values())

"""Fidelity, bulk density, Streda slope and bulk charge response."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import FockBasis, LatticeGeometry
from .lindblad import CompositeSpace, TrajectoryEnsemble, lattice_reduced
from .spectra import Spectrum


class ObservableError(ValueError):
    pass


@dataclass(frozen=True)
class BulkRegion:
    name: str
    sites: tuple[int, ...]

    @classmethod
    def preset(cls, geom: LatticeGeometry, name: str = "default") -> "BulkRegion":
        """``default`` drops the outer ring; ``literal`` is the (L-1)x(L-1) block anchored at the origin."""
        L, R = geom.L, geom.n_rows
        if name == "default":
            sites = [geom.site(m, n) for m in range(1, L - 1) for n in range(1, R - 1)]
        elif name == "literal":
            sites = [geom.site(m, n) for m in range(L - 1) for n in range(R - 1)]
        else:
            raise ObservableError(f"unknown bulk region {name!r}")
        return cls.custom(geom, sites, name)

    @classmethod
    def custom(cls, geom: LatticeGeometry, sites, name: str = "custom") -> "BulkRegion":
        sites = tuple(sorted(set(int(s) for s in sites)))
        if not sites:
            raise ObservableError("bulk region is empty")
        if sites[0] < 0 or sites[-1] >= geom.n_sites:
            raise ObservableError("bulk region leaves the lattice")
        return cls(name, sites)

    def __len__(self):
        return len(self.sites)


@dataclass(frozen=True)
class FluxScanResult:
    phi_over_2pi: np.ndarray
    density: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.phi_over_2pi, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ObservableError("flux values must be strictly increasing")
        object.__setattr__(self, "phi_over_2pi", x)
        object.__setattr__(self, "density", np.asarray(self.density, dtype=float))
        object.__setattr__(self, "stderr", np.zeros_like(x) if self.stderr is None
                           else np.asarray(self.stderr, dtype=float))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    covariance: np.ndarray

    @property
    def slope_err(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))


# ---------------------------------------------------------------- state handling

def _as_lattice_rho(state, space: CompositeSpace | None):
    rho = np.asarray(state)
    if space is not None and rho.shape[0] == space.dim and space.cavity_dim > 1:
        rho = lattice_reduced(rho, space)
    return rho


def ground_state_fidelity(state, spec: Spectrum | None, space: CompositeSpace | None = None):
    """Population of the ground multiplet.

    ``state`` may be an eigenbasis population vector (length ``spec.k``), a
    lattice or composite density matrix, or a trajectory ensemble (then the
    recorded time series is returned).
    """
    if spec is None:
        raise ObservableError("fidelity needs a spectrum")
    gm = spec.ground_multiplet
    if isinstance(state, TrajectoryEnsemble):
        if "fidelity" not in state.mean:
            raise ObservableError("ensemble did not record fidelity")
        return state.mean["fidelity"]
    arr = np.asarray(state)
    if arr.ndim == 1:
        if len(arr) != spec.k:
            raise ObservableError("population vector does not match the spectrum")
        return float(arr[gm].sum())
    rho = _as_lattice_rho(arr, space)
    V = spec.vectors[:, gm]
    return float(np.real(np.trace(V.conj().T @ rho @ V)))


def site_densities(state, basis: FockBasis, spec: Spectrum | None = None,
                   space: CompositeSpace | None = None) -> np.ndarray:
    """``<n_j>`` for every site from populations (needs ``spec``) or a density matrix."""
    occ = basis.occupations().astype(float)
    arr = np.asarray(state)
    if arr.ndim == 1:
        if spec is None:
            raise ObservableError("population vectors need the spectrum")
        w = np.abs(spec.vectors) ** 2
        return (arr @ (w.T @ occ))
    rho = _as_lattice_rho(arr, space)
    return np.real(np.diagonal(rho)) @ occ


def bulk_density(state, region: BulkRegion, basis: FockBasis, spec: Spectrum | None = None,
                 space: CompositeSpace | None = None) -> float:
    if isinstance(state, TrajectoryEnsemble):
        return state.mean["bulk_density"]
    dens = site_densities(state, basis, spec, space)
    return float(dens[list(region.sites)].mean())


def bulk_charge(state, region: BulkRegion, basis: FockBasis, spec: Spectrum | None = None,
                space: CompositeSpace | None = None) -> float:
    return bulk_density(state, region, basis, spec, space) * len(region)


def streda_slope(scan: FluxScanResult, method: str = "lstsq") -> SlopeFit:
    """Slope of per-site bulk density against flux in units of 2 pi, i.e. sigma_xy/sigma_0."""
    x, y = scan.phi_over_2pi, scan.density
    if len(x) < 3:
        raise ObservableError("need at least three scan points")
    if np.ptp(x) == 0:
        raise ObservableError("degenerate abscissae")
    if method == "finite-difference":
        slope = (y[-1] - y[0]) / (x[-1] - x[0])
        var = (scan.stderr[-1] ** 2 + scan.stderr[0] ** 2) / (x[-1] - x[0]) ** 2
        return SlopeFit(float(slope), float(y[0] - slope * x[0]), np.diag([var, scan.stderr[0] ** 2]))
    if method != "lstsq":
        raise ObservableError(f"unknown slope method {method!r}")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    sigma2 = max(float(resid @ resid) / dof, float(np.mean(scan.stderr ** 2)))
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return SlopeFit(float(coef[0]), float(coef[1]), cov)


def bulk_charge_response(states: dict, region: BulkRegion | None = None, basis: FockBasis | None = None) -> dict:
    """``Delta Q(V) = Q(V) - Q(0)``.

    Values of ``states`` are either bulk charges or ``(state, spectrum)`` pairs,
    which are reduced with ``region`` on ``basis``.
    """
    if not any(V == 0 for V in states):
        raise ObservableError("the V = 0 reference is missing")
    charges = {}
    for V, val in states.items():
        if isinstance(val, tuple):
            if region is None or basis is None:
                raise ObservableError("states need a region and basis")
            state, spec = val
            charges[float(V)] = bulk_charge(state, region, basis, spec)
        else:
            charges[float(V)] = float(val)
    q0 = charges[0.0]
    return {V: q - q0 for V, q in sorted(charges.items())}

"""Floquet dressing and reservoir-engineering coefficients.

Energies are in units of the bare tunnelling ``J`` with ``hbar = 1``; rates are
in ``J/hbar`` and times in ``hbar/J``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .bessel import besselj_orders
from .lattice import LatticeGeometry

DEFAULT_HBAR_OMEGA = 20.0
CALIBRATION_CONSTANT = 0.72
WARN_RATIO = 3.0
FAIL_RATIO = 1.0
FLOQUET_RESONANCE_WINDOW = 0.5


class ReservoirError(ValueError):
    pass


@dataclass(frozen=True)
class DriveSpec:
    """Lattice modulation ``d theta_l/dt = m*omega + lam*sin(omega*t - phi*(m+n))`` (hbar = 1)."""

    hbar_omega: float
    lam: float
    phi: float

    def __post_init__(self):
        if self.lam < 0:
            raise ReservoirError("drive amplitude must be non-negative")
        if self.hbar_omega <= 0:
            raise ReservoirError("drive quantum must be positive")
        if self.hbar_omega < 10.0:
            warnings.warn(f"hbar*omega = {self.hbar_omega} J is not far above J", stacklevel=3)

    @property
    def ratio(self) -> float:
        """``lam / (hbar omega)``, the argument of the dressing Bessel functions."""
        return self.lam / self.hbar_omega

    def theta(self, m: int, n: int, t) -> np.ndarray:
        """Accumulated phase of site ``(m, n)`` with ``theta(0) = 0``."""
        w = self.hbar_omega
        s = self.phi * (m + n)
        return m * w * t - self.ratio * (np.cos(w * t - s) - np.cos(s))


def calibrate_drive(phi: float, hbar_omega: float = DEFAULT_HBAR_OMEGA) -> DriveSpec:
    """Amplitude giving uniform effective hopping: ``lam = 0.72 hbar omega / sin(phi/2)``."""
    if not 0 < phi < 2 * np.pi:
        raise ReservoirError(f"flux must lie in (0, 2 pi), got {phi}")
    s = np.sin(phi / 2)
    if s < 1e-8:
        raise ReservoirError("flux too close to zero for calibration")
    return DriveSpec(hbar_omega, CALIBRATION_CONSTANT * hbar_omega / s, phi)


def period_averaged_bond(drive: DriveSpec, geom: LatticeGeometry, bond, J: float = 1.0,
                         rtol: float = 1e-10) -> complex:
    """``(1/T) int_0^T J exp(i[theta_l(t) - theta_l2(t)]) dt`` by periodic trapezoid.

    The hopping term in the period-averaged Hamiltonian is ``-result * a+_l a_l2 + h.c.``.
    """
    l, l2 = bond[0], bond[1]
    (m1, n1), (m2, n2) = geom.coords(l), geom.coords(l2)
    if abs(m1 - m2) + abs(n1 - n2) != 1:
        raise ReservoirError(f"sites {l} and {l2} are not nearest neighbours")
    T = 2 * np.pi / drive.hbar_omega
    n_samples = 256
    prev = None
    while True:
        t = np.arange(n_samples) * (T / n_samples)
        val = J * np.mean(np.exp(1j * (drive.theta(m1, n1, t) - drive.theta(m2, n2, t))))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-6 * abs(J)):
            return complex(val)
        if n_samples > 1 << 20:
            raise ReservoirError("period average failed to converge")
        prev = val
        n_samples *= 2


def averaged_hopping(drive: DriveSpec, geom: LatticeGeometry, J: float = 1.0) -> np.ndarray:
    """Single-particle hopping matrix of the period-averaged lattice Hamiltonian."""
    h = np.zeros((geom.n_sites, geom.n_sites), dtype=complex)
    for l, l2, _ in geom.bonds():
        t = -period_averaged_bond(drive, geom, (l, l2), J)
        h[l, l2] += t
        h[l2, l] += np.conj(t)
    return h


def effective_tunneling(drive: DriveSpec, J: float = 1.0) -> float:
    """Closed form of the y-bond magnitude, ``J * J_0(2 lam sin(phi/2) / hbar omega)``."""
    x = 2 * drive.ratio * np.sin(drive.phi / 2)
    return J * besselj_orders(0, x)[0]


def chi_coupling(g: float, delta: float, drive: DriveSpec, M_max: int = 8) -> float:
    """Dressed dispersive coupling ``sum_mu 2 g^2 J_mu(lam/hbar w)^2 / (delta - mu hbar w)``.

    The harmonic cutoff grows until the outermost ring changes the sum by
    less than 1e-12 relative.
    """
    w = drive.hbar_omega

    def ring(mu, bess):
        total = 0.0
        for s in {mu, -mu}:
            den = delta - s * w
            if abs(den) < 1e-6 * w:
                raise ReservoirError(f"Floquet resonance: delta - mu*hbar*omega ~ 0 at mu = {s}")
            total += 2 * g * g * bess[abs(s)] ** 2 / den
        return total

    M = max(int(M_max), 1)
    while True:
        bess = besselj_orders(M + 1, drive.ratio)
        chi = sum(ring(mu, bess) for mu in range(M + 1))
        last = ring(M, bess)
        if g == 0 or abs(last) <= 1e-12 * abs(chi):
            return float(chi)
        M *= 2
        if M > 4096:
            raise ReservoirError("harmonic sum did not converge")


def cavity_displacement(pump: float, d: float, kappa: float) -> complex:
    """Stationary coherent amplitude of the uncoupled pumped cavity, ``-E / (d - i kappa/2)``."""
    if d == 0 and kappa == 0:
        raise ReservoirError("displacement undefined for d = kappa = 0")
    return complex(-pump / (d - 0.5j * kappa))


@dataclass(frozen=True)
class CavitySpec:
    """One pumped leaky cavity coupled dispersively to lattice site ``site``.

    ``delta`` is the atom-cavity detuning in ``J`` (absolute, not in units of hbar omega).
    ``chi`` and ``alpha`` are filled in by :func:`dress_cavity`.
    """

    site: int
    g: float
    delta: float
    pump: float
    kappa: float
    d: float
    chi: float | None = None
    alpha: complex | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ReservoirError(f"cavity at site {self.site}: kappa must be positive")
        if self.delta <= 0:
            raise ReservoirError(f"cavity at site {self.site}: delta must be positive")

    @property
    def dressed(self) -> bool:
        return self.chi is not None and self.alpha is not None

    def physical(self) -> tuple:
        return (self.site, self.g, self.delta, self.pump, self.kappa, self.d)


def dress_cavity(cav: CavitySpec, drive: DriveSpec) -> CavitySpec:
    return replace(
        cav,
        chi=chi_coupling(cav.g, cav.delta, drive),
        alpha=cavity_displacement(cav.pump, cav.d, cav.kappa),
    )


@dataclass
class CavityRegime:
    site: int
    dispersive_margin: float
    dispersive_mu: int
    transition: tuple[int, int] | None
    gap: float
    gap_over_kappa: float
    kappa_over_coupling: float
    floquet_detuning: float
    flags: list[str] = field(default_factory=list)


@dataclass
class RegimeReport:
    cavities: list[CavityRegime]

    @property
    def violations(self) -> list[str]:
        return [f"site {c.site}: {f}" for c in self.cavities for f in c.flags if f.startswith("violation")]

    @property
    def warnings(self) -> list[str]:
        return [f"site {c.site}: {f}" for c in self.cavities for f in c.flags if f.startswith("warning")]

    def rows(self) -> list[dict]:
        return [
            {
                "site": c.site,
                "dispersive_margin": c.dispersive_margin,
                "dispersive_mu": c.dispersive_mu,
                "transition": list(c.transition) if c.transition else None,
                "gap": c.gap,
                "gap_over_kappa": c.gap_over_kappa,
                "kappa_over_coupling": c.kappa_over_coupling,
                "floquet_detuning": c.floquet_detuning,
                "flags": list(c.flags),
            }
            for c in self.cavities
        ]

    def to_text(self) -> str:
        lines = [
            "site  disp.margin(mu)   transition   gap/kappa  kappa/|a chi M|  min|mu w - delta|  flags",
        ]
        for c in self.cavities:
            tr = f"{c.transition[1]}->{c.transition[0]}" if c.transition else "-"
            lines.append(
                f"{c.site:>4}  {c.dispersive_margin:10.3g}({c.dispersive_mu:+d})  {tr:>10}"
                f"  {c.gap_over_kappa:9.3g}  {c.kappa_over_coupling:15.3g}  {c.floquet_detuning:17.3g}"
                f"  {', '.join(c.flags) or 'ok'}"
            )
        return "\n".join(lines)


def _grade(name: str, ratio: float, flags: list[str]):
    if ratio < FAIL_RATIO:
        flags.append(f"violation: {name} = {ratio:.3g}")
    elif ratio < WARN_RATIO:
        flags.append(f"warning: {name} = {ratio:.3g}")


def regime_report(cavities, drive: DriveSpec, energies, table, M_max: int = 8) -> RegimeReport:
    """Check dispersive, bad-cavity and Floquet-resonance conditions for each cavity.

    ``table`` maps each cavity site to its transition matrix ``<e_a|n_j|e_b>``.
    The targeted transition of a cavity is the coupled downward transition whose
    energy is closest to its pump detuning ``d``.
    """
    energies = np.asarray(energies)
    if len(energies) < 2:
        raise ReservoirError("need at least two eigenstates")
    w = drive.hbar_omega
    bess = besselj_orders(M_max, drive.ratio)
    out = []
    for cav in cavities:
        if not cav.dressed:
            cav = dress_cavity(cav, drive)
        flags: list[str] = []
        margins = []
        for mu in range(-M_max, M_max + 1):
            coupling = cav.g * abs(bess[abs(mu)])
            if coupling > 0:
                margins.append((abs(cav.delta - mu * w) / coupling, mu))
        disp, disp_mu = min(margins) if margins else (np.inf, 0)
        _grade("dispersive margin", disp, flags)

        M = np.asarray(table[cav.site])
        gaps = energies[None, :] - energies[:, None]  # gaps[a, b] = e_b - e_a
        coupled = (np.abs(M) > 1e-9) & (gaps > 1e-12)
        transition, gap, r_gap, r_coup = None, np.nan, np.inf, np.inf
        if coupled.any():
            miss = np.where(coupled, np.abs(gaps - cav.d), np.inf)
            a, b = np.unravel_index(np.argmin(miss), miss.shape)
            transition = (int(a), int(b))
            gap = float(gaps[a, b])
            r_gap = gap / cav.kappa
            strength = abs(cav.alpha * cav.chi * M[a, b])
            r_coup = cav.kappa / strength if strength > 0 else np.inf
            _grade("gap/kappa", r_gap, flags)
            _grade("kappa/|alpha chi M|", r_coup, flags)
        mus = np.round(cav.delta / w)
        floq = float(abs(mus * w - cav.delta))
        if floq < FLOQUET_RESONANCE_WINDOW:
            flags.append(f"violation: Floquet resonance at mu = {int(mus)}")
        out.append(CavityRegime(cav.site, float(disp), int(disp_mu), transition, gap,
                                float(r_gap), float(r_coup), floq, flags))
    return RegimeReport(out)

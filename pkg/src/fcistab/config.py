"""Scenario configuration: TOML files or named presets, validated into frozen dataclasses.

Energies are converted to units of J once, here. Cavity detunings ``delta_hw``
stay in units of the drive quantum.
"""
from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .lattice import LatticeGeometry
from .presets import PRESET_NAMES, _match_rank, preset

J_EFF_DEFAULT = 0.55
SOLVERS = ("traj", "rates", "both")
BULK_PRESETS = ("default", "literal")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeConfig:
    L: int
    N: int
    phi_over_2pi: float = 0.25
    phi_scan: tuple | None = None
    V: float = 0.0
    V_scan: tuple | None = None
    V_units: str = "J"
    pot_sites: tuple = ()
    J_eff: float = J_EFF_DEFAULT
    symmetrize: bool = False


@dataclass(frozen=True)
class DriveConfig:
    hbar_omega: float = 20.0
    lam_rule: str = "calibrated"
    lam: float | None = None


@dataclass(frozen=True)
class CavityRow:
    site: int
    g: float
    delta_hw: float
    E: float
    kappa: float
    d: float
    when: str | None = None


@dataclass(frozen=True)
class RunConfig:
    t_final: float = 4000.0
    n_traj: int = 200
    seed: int = 0
    k: int = 0
    n_max: int = 2
    solver: str = "rates"
    initial: str = "mixed"
    bulk: str = "default"
    n_steps: int = 400
    tol: float = 1e-10
    checkpoints: int = 5
    adapt_n_max: bool = False
    out: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    lattice: LatticeConfig
    drive: DriveConfig = field(default_factory=DriveConfig)
    cavities: tuple = ()
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(self.lattice.L, phi=2 * 3.141592653589793 * self.lattice.phi_over_2pi)

    def scan_points(self) -> list[tuple[float, float]]:
        """``(phi/2pi, V in J)`` for every point the scenario visits."""
        lat = self.lattice
        phis = lat.phi_scan or (lat.phi_over_2pi,)
        Vs = lat.V_scan or (lat.V,)
        return [(p, V) for p in phis for V in Vs]

    def cavities_for(self, phi_over_2pi: float, V: float) -> list[CavityRow]:
        scale = self.lattice.J_eff if self.lattice.V_units == "J_eff" else 1.0
        return [c for c in self.cavities if _applies(c.when, phi_over_2pi, round(V / scale, 12))]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cavities"] = [{k: v for k, v in c.items() if v is not None} for c in d["cavities"]]
        for sec in ("lattice", "drive", "run"):
            d[sec] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in d[sec].items() if v is not None}
        if self.lattice.V_units == "J_eff":
            # V fields are written back in the units they were given in
            lat = d["lattice"]
            lat["V"] = lat["V"] / self.lattice.J_eff
            if "V_scan" in lat:
                lat["V_scan"] = [v / self.lattice.J_eff for v in lat["V_scan"]]
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


_COND = re.compile(r"\s*(phi|V)\s*(<=|>=|<|>|=|in)\s*(.+?)\s*$")


def _applies(when: str | None, phi: float, V: float) -> bool:
    if not when:
        return True
    m = _COND.fullmatch(when)
    var, op, rhs = m.groups()
    x = phi if var == "phi" else V
    if op == "in":
        return _match_rank(rhs, repr(float(x))) is not None
    y = float(rhs)
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y, "=": abs(x - y) <= 1e-12}[op]


# ---------------------------------------------------------------- parsing

_TOP = {"scenario", "lattice", "drive", "run", "cavities"}
_CAVITY_KEYS = {"site", "g", "delta_hw", "E", "kappa", "d", "units", "when"}


def _check_keys(section: str, data: dict, allowed):
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")


def _typed(section, data, cls, required=()):
    names = {f.name: f for f in cls.__dataclass_fields__.values()}
    _check_keys(section, data, names)
    for r in required:
        if r not in data:
            raise ConfigError(f"[{section}] missing required field '{r}'")
    return data


def from_dict(raw: dict) -> ScenarioConfig:
    """Validate a raw mapping and apply unit conversion to J."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    _check_keys("top level", raw, _TOP)
    if "lattice" not in raw:
        raise ConfigError("missing [lattice] section")
    lat = dict(_typed("lattice", dict(raw["lattice"]), LatticeConfig, ("L", "N")))
    drive = dict(_typed("drive", dict(raw.get("drive", {})), DriveConfig))
    run = dict(_typed("run", dict(raw.get("run", {})), RunConfig))

    L, N = lat["L"], lat["N"]
    if not isinstance(L, int) or L < 2:
        raise ConfigError("lattice.L must be an integer >= 2")
    if not isinstance(N, int) or not 1 <= N <= L * L:
        raise ConfigError("lattice.N must be an integer in [1, L^2]")
    J_eff = float(lat.get("J_eff", J_EFF_DEFAULT))
    if J_eff <= 0:
        raise ConfigError("lattice.J_eff must be positive")
    V_units = lat.get("V_units", "J")
    if V_units not in ("J", "J_eff"):
        raise ConfigError("lattice.V_units must be 'J' or 'J_eff'")
    vscale = J_eff if V_units == "J_eff" else 1.0
    for key in ("phi_scan", "V_scan"):
        if key in lat:
            vals = [float(x) for x in lat[key]]
            if len(vals) == 0 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"lattice.{key} must be a non-empty increasing list")
            lat[key] = tuple(vals)
    if "V_scan" in lat:
        lat["V_scan"] = tuple(v * vscale for v in lat["V_scan"])
    if "V" in lat:
        lat["V"] = float(lat["V"]) * vscale
    pot = lat.get("pot_sites", ())
    geom = LatticeGeometry(L)
    if pot == "center":
        pot = tuple(geom.central_block())
    elif isinstance(pot, str):
        raise ConfigError("lattice.pot_sites must be 'center' or a list of sites")
    pot = tuple(int(s) for s in pot)
    if any(not 0 <= s < L * L for s in pot):
        raise ConfigError("lattice.pot_sites out of range")
    lat.update(pot_sites=pot, J_eff=J_eff, V_units=V_units)
    lat["phi_over_2pi"] = float(lat.get("phi_over_2pi", 0.25))
    lattice = LatticeConfig(**lat)

    if drive.get("lam_rule", "calibrated") not in ("calibrated", "fixed"):
        raise ConfigError("drive.lam_rule must be 'calibrated' or 'fixed'")
    if drive.get("lam_rule") == "fixed" and drive.get("lam") is None:
        raise ConfigError("drive.lam is required with lam_rule = 'fixed'")
    if float(drive.get("hbar_omega", 20.0)) <= 0:
        raise ConfigError("drive.hbar_omega must be positive")
    drive_cfg = DriveConfig(**drive)

    rows = []
    for i, c in enumerate(raw.get("cavities", [])):
        _check_keys(f"cavities #{i}", c, _CAVITY_KEYS)
        for key in ("site", "g", "delta_hw", "E", "kappa", "d"):
            if key not in c:
                raise ConfigError(f"cavities #{i} missing required field '{key}'")
        units = c.get("units", "J")
        if units not in ("J", "J_eff"):
            raise ConfigError(f"cavities #{i}: units must be 'J' or 'J_eff'")
        s = J_eff if units == "J_eff" else 1.0
        site = c["site"]
        if not isinstance(site, int) or not 0 <= site < L * L:
            raise ConfigError(f"cavities #{i}: site {site} outside the {L}x{L} lattice")
        if c["kappa"] <= 0:
            raise ConfigError(f"cavities #{i}: kappa must be positive")
        when = c.get("when")
        if when is not None and not _COND.fullmatch(when):
            raise ConfigError(f"cavities #{i}: cannot parse condition {when!r}")
        rows.append(CavityRow(site, float(c["g"]) * s, float(c["delta_hw"]), float(c["E"]) * s,
                              float(c["kappa"]) * s, float(c["d"]) * s, when))

    if run.get("solver", "rates") not in SOLVERS:
        raise ConfigError(f"run.solver must be one of {SOLVERS}")
    if run.get("bulk", "default") not in BULK_PRESETS:
        raise ConfigError(f"run.bulk must be one of {BULK_PRESETS}")
    init = run.get("initial", "mixed")
    if not (init == "mixed" or re.fullmatch(r"lowest:\d+", init)):
        raise ConfigError("run.initial must be 'mixed' or 'lowest:<n>'")
    for key in ("n_traj", "n_max", "n_steps", "checkpoints"):
        if key in run and (not isinstance(run[key], int) or run[key] < 1):
            raise ConfigError(f"run.{key} must be a positive integer")
    if "k" in run and (not isinstance(run["k"], int) or run["k"] < 0):
        raise ConfigError("run.k must be a non-negative integer (0 = full sector)")
    if float(run.get("t_final", 1.0)) <= 0:
        raise ConfigError("run.t_final must be positive")
    if "seed" in run and (not isinstance(run["seed"], int) or not 0 <= run["seed"] < 2 ** 64):
        raise ConfigError("run.seed must be an unsigned 64-bit integer")
    cfg = ScenarioConfig(str(raw.get("scenario", "custom")), lattice, drive_cfg, tuple(rows), RunConfig(**run))
    if any(c.when for c in rows):
        for phi, V in cfg.scan_points():
            if not cfg.cavities_for(phi, V):
                raise ConfigError(f"no cavity row applies at phi/2pi={phi}, V={V}")
    return cfg


def load_config(source) -> ScenarioConfig:
    """A preset name or a path to a TOML file."""
    if isinstance(source, str) and source in PRESET_NAMES:
        return from_dict(preset(source))
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"no preset or file named {source!r}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(raw)


def dump_config(cfg: ScenarioConfig) -> str:
    """TOML text that loads back to an equal config (energies already in J)."""
    return tomli_w.dumps(cfg.to_dict())


def with_overrides(cfg: ScenarioConfig, **run) -> ScenarioConfig:
    run = {k: v for k, v in run.items() if v is not None}
    return replace(cfg, run=replace(cfg.run, **run)) if run else cfg

"""Scenario pipeline: build, diagnose, solve, observe, report."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb, pi
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, dump_config
from .floquet import CavitySpec, DriveSpec, calibrate_drive, dress_cavity, regime_report
from .lattice import LatticeGeometry, build_basis, build_hhbh, pinning_potential
from .lindblad import (LindbladError, Observer, build_composite, eigenstate_mixture_sampler,
                       infinite_temperature_sampler, run_trajectories)
from .observables import BulkRegion, FluxScanResult, streda_slope
from .rates import evolve_on_grid, rate_matrix, steady_state, symmetrize_cavities
from .spectra import SpectrumCache, diagonal_expectations, full_spectrum, lowest_eigenpairs, transition_table

log = logging.getLogger("fcistab")

SECTOR_CAP = 2_000_000


class ScenarioError(RuntimeError):
    pass


@dataclass
class Series:
    """Time series on the record grid; photon columns keyed by cavity site."""

    times: np.ndarray
    fidelity: np.ndarray
    fidelity_stderr: np.ndarray
    bulk_density: np.ndarray
    photons: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass
class PointResult:
    phi_over_2pi: float
    V: float
    energies: np.ndarray
    regime: object
    series: dict
    steady: dict
    ground_bulk_density: float
    baseline_bulk_density: float
    region_size: int
    notes: list = field(default_factory=list)


@dataclass
class RunReport:
    config: ScenarioConfig
    config_hash: str
    seed: int
    points: list
    scans: dict
    fits: dict
    summary: dict
    wall_clock: float
    stats: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def _drive(cfg: ScenarioConfig, phi: float) -> DriveSpec:
    if cfg.drive.lam_rule == "calibrated":
        return calibrate_drive(phi, cfg.drive.hbar_omega)
    return DriveSpec(cfg.drive.hbar_omega, cfg.drive.lam, phi)


def build_cavities(cfg: ScenarioConfig, phi_over_2pi: float, V: float, geom: LatticeGeometry, drive: DriveSpec):
    cavs = [CavitySpec(c.site, c.g, c.delta_hw * drive.hbar_omega, c.E, c.kappa, c.d)
            for c in cfg.cavities_for(phi_over_2pi, V)]
    if cfg.lattice.symmetrize:
        cavs = symmetrize_cavities(cavs, geom)
    return [dress_cavity(c, drive) for c in cavs]


def _initial_populations(initial: str, k: int) -> np.ndarray:
    n = k if initial == "mixed" else int(initial.split(":")[1])
    if n > k:
        raise ScenarioError(f"initial mixture of {n} states exceeds the {k} computed eigenstates")
    p = np.zeros(k)
    p[:n] = 1.0 / n
    return p


def run_point(cfg: ScenarioConfig, phi_over_2pi: float, V: float, cache_dir=None, checkpoint_dir=None) -> PointResult:
    lat, run = cfg.lattice, cfg.run
    phi = 2 * pi * phi_over_2pi
    geom = LatticeGeometry(lat.L, phi=phi)
    basis = build_basis(geom.n_sites, lat.N)
    pot = pinning_potential(geom, V, lat.pot_sites or None) if (V or lat.pot_sites) else None
    H = build_hhbh(geom, lat.J_eff, basis, pot)
    k = run.k or basis.dim
    spec = None
    cache = SpectrumCache(cache_dir) if cache_dir else None
    key = SpectrumCache.key(lat.L, lat.N, phi, pot if pot is not None else np.zeros(geom.n_sites), k, 1e-10, lat.J_eff)
    if cache:
        spec = cache.load(key)
    if spec is None:
        spec = full_spectrum(H) if k >= basis.dim else lowest_eigenpairs(H, k, seed=run.seed)
        if cache:
            cache.store(key, spec)
    drive = _drive(cfg, phi)
    cavities = build_cavities(cfg, phi_over_2pi, V, geom, drive)
    table = transition_table(spec, basis, [c.site for c in cavities])
    regime = regime_report(cavities, drive, spec.energies, table)
    for msg in regime.violations + regime.warnings:
        log.warning("phi/2pi=%g V=%g %s", phi_over_2pi, V, msg)

    region = BulkRegion.preset(geom, run.bulk)
    weights = basis.occupations()[:, list(region.sites)].sum(axis=1) / len(region)
    dens_eig = diagonal_expectations(spec, weights.astype(float))
    p0 = _initial_populations(run.initial, spec.k)
    times = np.linspace(0.0, run.t_final, run.n_steps + 1)
    gm = spec.ground_multiplet
    series, steady, notes = {}, {}, []

    if run.solver in ("rates", "both"):
        rates = rate_matrix(spec, table, cavities)
        P = evolve_on_grid(rates, p0, times)
        fid = P[:, gm].sum(axis=1)
        series["rates"] = Series(times, fid, np.zeros_like(fid), P @ dens_eig,
                                 {c.site: np.full_like(fid, np.nan) for c in cavities}, {"populations": P})
        ss = steady_state(rates, p0)
        steady = {"fidelity": float(ss.populations[gm].sum()),
                  "bulk_density": float(ss.populations @ dens_eig),
                  "degenerate": bool(ss.degenerate)}
        if ss.degenerate:
            notes.append("rate graph has several closed classes reachable from the initial state")

    if run.solver in ("traj", "both"):
        if run.initial == "mixed" and spec.k == basis.dim:
            sampler_of = lambda space: infinite_temperature_sampler(basis, space)
        else:
            n = spec.k if run.initial == "mixed" else int(run.initial.split(":")[1])
            sampler_of = lambda space: eigenstate_mixture_sampler(spec, space, n)
        n_max = run.n_max
        while True:
            ham = build_composite(H, basis, cavities, n_max)
            obs = Observer(ham.space, spectrum=spec, bulk_sites=list(region.sites), basis=basis,
                           cavity_sites=tuple(c.site for c in cavities))
            ckpt = None
            if checkpoint_dir:
                Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
                ckpt = str(Path(checkpoint_dir) / f"traj_{phi_over_2pi:.6g}_{V:.6g}_n{n_max}.npz")
            ens = run_trajectories(ham, sampler_of(ham.space), run.t_final, run.n_traj, run.seed, obs,
                                   n_steps=run.n_steps, tol=run.tol, checkpoint=ckpt)
            if ens.truncation_ok() or not run.adapt_n_max:
                break
            n_max += 1
            try:
                build_composite(H, basis, cavities, n_max)
            except LindbladError as exc:
                notes.append(f"cannot raise n_max to {n_max}: {exc}")
                break
            log.warning("top Fock level populated; rerunning with n_max = %d", n_max)
        series["traj"] = Series(times, ens.mean["fidelity"], ens.stderr["fidelity"], ens.mean["bulk_density"],
                                {c.site: ens.mean[f"photon_{c.site}"] for c in cavities},
                                {"populations": ens.mean["populations"], "jumps": ens.jumps,
                                 "bulk_density_stderr": float(ens.stderr["bulk_density"][-1]),
                                 "matvecs": ens.matvecs,
                                 "top_level": max(float(np.max(ens.mean[f"top_{c.site}"])) for c in cavities)
                                 if cavities else 0.0})
        notes.extend(ens.flags)
        series["traj"].extra["n_max"] = n_max

    return PointResult(phi_over_2pi, V, spec.energies, regime, series, steady,
                       float(dens_eig[gm].mean()), float(p0 @ dens_eig), len(region), notes)


def _checkpoint_agreement(a: Series, b: Series, n: int) -> list[dict]:
    idx = np.linspace(0, len(a.times) - 1, n + 1).round().astype(int)[1:]
    return [{"t": float(a.times[i]), "rates": float(a.fidelity[i]), "traj": float(b.fidelity[i]),
             "traj_stderr": float(b.fidelity_stderr[i]),
             "agree": bool(abs(a.fidelity[i] - b.fidelity[i]) <= max(0.05, 3 * b.fidelity_stderr[i]))}
            for i in idx]


def run_scenario(cfg: ScenarioConfig, workers: int = 1, cache_dir=None, checkpoint_dir=None) -> RunReport:
    lat = cfg.lattice
    dim = comb(lat.L * lat.L, lat.N)
    if dim > SECTOR_CAP:
        raise ScenarioError(
            f"scenario {cfg.scenario!r}: the N={lat.N} sector on {lat.L}x{lat.L} has {dim} states; "
            f"exact diagonalization is capped at {SECTOR_CAP}. Matrix-product-state solvers needed "
            "for this case are outside this package.")
    if cfg.run.solver in ("traj", "both") and (lat.phi_scan or lat.V_scan):
        log.info("running trajectories at every scan point")
    t0 = time.perf_counter()
    points = cfg.scan_points()
    try:
        if workers > 1 and len(points) > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(run_point, [cfg] * len(points), [p for p, _ in points],
                                        [v for _, v in points], [cache_dir] * len(points),
                                        [checkpoint_dir] * len(points)))
        else:
            results = [run_point(cfg, p, v, cache_dir, checkpoint_dir) for p, v in points]
    except Exception as exc:
        raise ScenarioError(f"scenario {cfg.scenario!r}: {exc}") from exc

    scans, fits, summary = {}, {}, {}
    warnings = [f"phi/2pi={r.phi_over_2pi:g} V={r.V:g} {m}" for r in results
                for m in r.regime.violations + r.regime.warnings + r.notes]
    main = "rates" if "rates" in results[0].series else "traj"
    if lat.phi_scan:
        x = np.array([r.phi_over_2pi for r in results])
        cooled = np.array([_final_density(r, main) for r in results])
        cooled_err = np.array([_final_density_err(r, main) for r in results])
        scans["scan_cooled"] = (x, cooled, cooled_err)
        scans["scan_ground"] = (x, np.array([r.ground_bulk_density for r in results]), np.zeros(len(x)))
        scans["scan_baseline"] = (x, np.array([r.baseline_bulk_density for r in results]), np.zeros(len(x)))
        for name, (xs, ys, es) in scans.items():
            fit = streda_slope(FluxScanResult(xs, ys, es))
            fits[name] = {"slope": fit.slope, "intercept": fit.intercept, "covariance": fit.covariance.tolist()}
    if lat.V_scan:
        Vs = np.array([r.V for r in results])
        q = np.array([_final_density(r, main) * r.region_size for r in results])
        qe = np.array([_final_density_err(r, main) * r.region_size for r in results])
        qg = np.array([r.ground_bulk_density * r.region_size for r in results])
        ref = int(np.argmin(np.abs(Vs)))
        if Vs[ref] != 0:
            raise ScenarioError("V scan lacks the V = 0 reference")
        scans["scan_delta_q"] = (Vs, q - q[ref], qe)
        scans["scan_delta_q_ground"] = (Vs, qg - qg[ref], np.zeros(len(Vs)))
        scans["scan_fidelity"] = (Vs, np.array([r.series[main].fidelity[-1] for r in results]),
                                  np.array([r.series[main].fidelity_stderr[-1] for r in results]))
        if "rates" in results[0].series:
            scans["scan_fidelity_steady"] = (Vs, np.array([r.steady["fidelity"] for r in results]), np.zeros(len(Vs)))
    for r in results:
        label = _point_label(cfg, r)
        entry = {"gap": float(r.energies[1] - r.energies[0]),
                 "ground_bulk_density": r.ground_bulk_density}
        for solver, s in r.series.items():
            entry[f"fidelity_final_{solver}"] = float(s.fidelity[-1])
            entry[f"bulk_density_final_{solver}"] = float(s.bulk_density[-1])
        if r.steady:
            entry["steady_state"] = r.steady
        if "rates" in r.series and "traj" in r.series:
            entry["agreement"] = _checkpoint_agreement(r.series["rates"], r.series["traj"], cfg.run.checkpoints)
        if "traj" in r.series:
            entry["top_level_population"] = r.series["traj"].extra["top_level"]
            entry["mean_jumps"] = float(np.mean(r.series["traj"].extra["jumps"]))
            entry["n_max"] = r.series["traj"].extra["n_max"]
        summary[label] = entry
    return RunReport(cfg, cfg.digest(), cfg.run.seed, results, scans, fits, summary,
                     time.perf_counter() - t0, warnings=warnings)


def _final_density(r: PointResult, solver: str) -> float:
    if solver == "rates" and r.steady:
        return r.steady["bulk_density"]
    return float(r.series[solver].bulk_density[-1])


def _final_density_err(r: PointResult, solver: str) -> float:
    if solver == "rates":
        return 0.0
    return float(r.series[solver].extra.get("bulk_density_stderr", 0.0))


def _point_label(cfg: ScenarioConfig, r: PointResult) -> str:
    parts = []
    if cfg.lattice.phi_scan:
        parts.append(f"phi{r.phi_over_2pi:g}")
    if cfg.lattice.V_scan:
        parts.append(f"V{r.V:g}")
    return "_".join(parts) or "single"


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    return repr(float(x))


def timeseries_csv(series: Series | None, sites=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    sites = list(series.photons) if series is not None else list(sites)
    w.writerow(["t_hbar_over_J", "fidelity", "fidelity_stderr", "bulk_density"] + [f"photon_{s}" for s in sites])
    if series is not None:
        for i, t in enumerate(series.times):
            w.writerow([_fmt(t), _fmt(series.fidelity[i]), _fmt(series.fidelity_stderr[i]),
                        _fmt(series.bulk_density[i])] + [_fmt(series.photons[s][i]) for s in sites])
    return buf.getvalue()


def scan_csv(x, y, e) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["abscissa", "value", "stderr"])
    for a, b, c in zip(x, y, e):
        w.writerow([_fmt(a), _fmt(b), _fmt(c)])
    return buf.getvalue()


def _write(path: Path, text: str):
    """Write ``text``; an existing different file is kept as ``name.~n~``."""
    if path.exists():
        if path.read_text() == text:
            return
        n = 1
        while path.with_name(f"{path.name}.~{n}~").exists():
            n += 1
        path.rename(path.with_name(f"{path.name}.~{n}~"))
    path.write_text(text)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return None if not np.isfinite(x) else float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def emit_report(report: RunReport, directory) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    cfg = report.config

    def put(name, text):
        _write(out / name, text)
        written.append(out / name)

    put("config.toml", dump_config(cfg))
    single = len(report.points) == 1
    for r in report.points:
        suffix = "" if single else "_" + _point_label(cfg, r)
        for solver, s in r.series.items():
            put(f"timeseries_{solver}{suffix}.csv", timeseries_csv(s))
    for name, (x, y, e) in report.scans.items():
        put(f"{name}.csv", scan_csv(x, y, e))
    payload = {"scenario": cfg.scenario, "config_hash": report.config_hash, "seed": report.seed,
               "summary": report.summary, "fits": report.fits, "warnings": report.warnings,
               "regime": {_point_label(cfg, r): r.regime.rows() for r in report.points},
               "stats": report.stats}
    put("report.json", json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    put("report.txt", report_text(report, timing=False))
    # timing varies between identical runs, so it lives apart and is simply replaced
    (out / "timing.json").write_text(json.dumps({"wall_clock_s": report.wall_clock}) + "\n")
    written.append(out / "timing.json")
    return written


def report_text(report: RunReport, timing: bool = True) -> str:
    cfg = report.config
    lines = [f"scenario {cfg.scenario}  config {report.config_hash}  seed {report.seed}",
             f"L={cfg.lattice.L} N={cfg.lattice.N} J_eff={cfg.lattice.J_eff:g} J  solver={cfg.run.solver}"
             f"  t_final={cfg.run.t_final:g} hbar/J", ""]
    for r in report.points:
        label = _point_label(cfg, r)
        lines.append(f"[{label}]")
        for k, v in report.summary[label].items():
            lines.append(f"  {k}: {v}")
        lines.append(r.regime.to_text())
        lines.append("")
    for name, fit in report.fits.items():
        err = np.sqrt(fit["covariance"][0][0])
        lines.append(f"{name}: slope {fit['slope']:.4f} +- {err:.4f}  intercept {fit['intercept']:.4f}")
    if report.warnings:
        lines.append("")
        lines.append("warnings:")
        lines.extend(f"  {w}" for w in report.warnings)
    if timing:
        lines.append(f"wall clock {report.wall_clock:.1f} s")
    return "\n".join(lines) + "\n"

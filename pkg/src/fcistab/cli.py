"""Command line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import BULK_PRESETS, SOLVERS, ConfigError, load_config, with_overrides
from .presets import PRESET_NAMES
from .runner import ScenarioError, emit_report, report_text, run_scenario


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fcistab", description="Run a cavity-stabilization scenario.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=PRESET_NAMES)
    src.add_argument("--config", help="TOML scenario file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int, dest="n_traj")
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--out", help="output directory (default runs/<scenario>)")
    p.add_argument("--bulk", choices=BULK_PRESETS)
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cache", help="directory for cached spectra")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.scenario or args.config)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = with_overrides(cfg, seed=args.seed, n_traj=args.n_traj, solver=args.solver,
                             bulk=args.bulk, t_final=args.t_final, out=args.out)
        out = cfg.run.out or f"runs/{cfg.scenario}"
        report = run_scenario(cfg, workers=args.workers, cache_dir=args.cache,
                              checkpoint_dir=f"{out}/checkpoints")
        emit_report(report, out)
    except (ConfigError, ScenarioError, OSError) as exc:
        print(f"fcistab: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report_text(report))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

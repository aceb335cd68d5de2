"""Reservoir-engineered stabilization of fractional Chern insulators in driven optical lattices."""

from .config import ScenarioConfig, load_config
from .lattice import FockBasis, LatticeGeometry, build_basis, build_hhbh
from .runner import RunReport, emit_report, run_scenario

__version__ = "0.1.0"

"""Scenario-driven box model built on the mpkin core."""

from importlib import resources

from mpkin.boxmodel.aerosol import discretize_modes_to_bins, sample_particles
from mpkin.boxmodel.plot import emit_plot_data
from mpkin.boxmodel.runner import BoxModel, run_scenario
from mpkin.boxmodel.scenario import Scenario, load_scenario


def data_path(name: str) -> str:
    """Path of a bundled data file (demo mechanism and scenario)."""
    return str(resources.files("mpkin.boxmodel") / "data" / name)


__all__ = [
    "BoxModel",
    "Scenario",
    "data_path",
    "discretize_modes_to_bins",
    "emit_plot_data",
    "load_scenario",
    "run_scenario",
    "sample_particles",
]

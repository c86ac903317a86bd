"""Regenerate the golden fixtures (run from the repository root).

    python3 tests/data/make_golden.py

golden_modes.csv: hourly values of selected species from the 24 h demo
scenario (modal representation) integrated at rel_tol 1e-8.
golden_state.bin: state snapshot of a small fixed state vector.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from mpkin import EnvironmentalState
from mpkin.boxmodel import data_path, load_scenario
from mpkin.boxmodel.runner import BoxModel
from mpkin.config import load_config
from mpkin.layout import serialize_state

HERE = Path(__file__).parent
SPECIES = ["O3", "NO2", "ISOP", "FORM", "ISOP-P1_aero", "ISOP-P2_aero"]


def golden_trajectory(rel_tol: float = 1e-8) -> list[list[float]]:
    from dataclasses import replace
    sc = load_scenario(data_path("demo_scenario.json"))
    sc = replace(sc, output_interval=3600.0)
    model = BoxModel(load_config([data_path("demo_mechanism.json")]), sc, "modes",
                     rel_tol=rel_tol)
    lay = model.core.layout
    cols = [np.array([lay.gas_index[s]]) if s in lay.gas_index else lay.aerosol_offsets(s)
            for s in SPECIES]
    rows = []

    def record(t, y):
        rows.append([t] + [float(y[c].sum()) for c in cols])

    record(0.0, model.state)
    y = model.state
    for k in range(24):
        y, _ = model.core.solve(y, model.env, 3600.0)
        record(3600.0 * (k + 1), y)
    return rows


def golden_state() -> bytes:
    y = np.array([0.0, 1.0, -2.5, 1e-300, 3.14159, 6.02214076e23])
    return serialize_state(y, EnvironmentalState(290.0, 1.0e5, 0.5))


def main() -> None:
    with open(HERE / "golden_modes.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + SPECIES)
        w.writerows([[repr(v) for v in r] for r in golden_trajectory()])
    (HERE / "golden_state.bin").write_bytes(golden_state())


if __name__ == "__main__":
    main()

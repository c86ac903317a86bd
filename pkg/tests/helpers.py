"""Shared builders and oracles for the test-suite."""

from __future__ import annotations

import json

import numpy as np

from mpkin import Core, EnvironmentalState
from mpkin.boxmodel import data_path
from mpkin.solver import finite_difference_jacobian

EPS = np.finfo(float).eps
ENV = EnvironmentalState(290.0, 1.0e5, 0.9)
DEMO_MECHANISM = data_path("demo_mechanism.json")
DEMO_SCENARIO = data_path("demo_scenario.json")


def doc(*entries) -> str:
    return json.dumps({"camp-data": list(entries)})


def gas(name, mw=0.03, **kw):
    return {"type": "CHEM_SPEC", "name": name, "molecular_weight": mw, **kw}


def aero(name, mw=0.1, density=1000.0, **kw):
    return {"type": "CHEM_SPEC", "name": name, "phase": "AEROSOL",
            "molecular_weight": mw, "density": density, **kw}


def phase(name, species):
    return {"type": "AERO_PHASE", "name": name, "species": list(species)}


def modal(*modes, sections=()):
    return {"type": "AERO_REP_MODAL_SECTIONAL", "name": "rep",
            "modes": [{"name": n, "GMD": gmd, "GSD": gsd, "phases": list(ph)}
                      for n, gmd, gsd, ph in modes],
            "sections": [{"name": n, "mid_diameter": d, "phases": list(ph)}
                         for n, d, ph in sections]}


def particles(n, phases):
    return {"type": "AERO_REP_SINGLE_PARTICLE", "name": "rep",
            "max_computational_particles": n, "phases": list(phases)}


def make_core(*entries, env=ENV, options=None) -> Core:
    core = Core.from_json(doc(*entries), options)
    core.set_environment(env)
    return core


def demo_core(rep_entry=None, env=EnvironmentalState(290.0, 1.0e5)) -> Core:
    with open(DEMO_MECHANISM, encoding="utf-8") as fh:
        texts = [fh.read()]
    if rep_entry is not None:
        texts.append(doc(rep_entry))
    core = Core.from_json(texts)
    core.set_environment(env)
    return core


def random_positive_state(core: Core, rng, gas_scale=1e-3, aero_scale=1e-9) -> np.ndarray:
    """Strictly positive state with entries spread over two decades."""
    n_gas = core.layout.n_gas
    y = np.empty(core.n_total)
    y[:n_gas] = gas_scale * 10.0 ** rng.uniform(-1, 1, n_gas)
    y[n_gas:] = aero_scale * 10.0 ** rng.uniform(-1, 1, core.n_total - n_gas)
    return y


def jacobian_check(core: Core, y: np.ndarray) -> tuple[float, float]:
    """(max row-scaled analytic-vs-FD error, max |FD| outside the pattern, row-scaled)."""
    fd = finite_difference_jacobian(core.compute_forcing, y, rel_step=EPS ** (1 / 3))
    an = core.compute_jacobian(y).toarray()
    scale = np.maximum(np.abs(fd).max(axis=1), np.abs(an).max(axis=1))
    scale = np.where(scale > 0, scale, 1.0)[:, None]
    err = float((np.abs(an - fd) / scale).max())
    mask = np.ones(an.shape, dtype=bool)
    rows, cols = core.pattern.coo()
    mask[rows, cols] = False
    outside = float((np.abs(fd) / scale)[mask].max()) if mask.any() else 0.0
    return err, outside

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from helpers import ENV, demo_core, doc, gas, make_core, modal, particles
from mpkin import Core, SolverOptions
from mpkin.core import CoreInitError, deserialize_core, serialize_core
from mpkin.layout import deserialize_state

DATA = Path(__file__).parent / "data"


def test_empty_species_config_fails():
    with pytest.raises(CoreInitError):
        Core.from_json(doc())


def test_invalid_config_lists_every_error():
    with pytest.raises(CoreInitError) as info:
        Core.from_json(doc(gas("A", mw=-1.0), {"type": "ARRHENIUS", "reactants": {"Q": {}},
                                                "A": 1.0}))
    text = str(info.value)
    assert "molecular_weight" in text and "Q" in text


def test_demo_mechanism_loads_deterministically():
    a, b = demo_core(), demo_core()
    assert a.n_total == 20 - 3  # aerosol species live only in phase instances
    assert a.pattern.equals(b.pattern) and a.pattern.nnz > a.n_total


def test_unset_environment():
    core = Core.from_json(doc(gas("A"), {"type": "EMISSION", "species": "A", "rate": 1.0}))
    with pytest.raises(RuntimeError):
        core.compute_forcing(core.new_state())


def test_zero_rates_leave_state_unchanged():
    core = make_core(gas("A"), gas("B"), {"type": "PHOTOLYSIS", "label": "j",
                                          "reactants": {"A": {}}, "products": {"B": {}}})
    y0 = np.array([1.0, 2.0])
    y, _ = core.solve(y0, ENV, 3600.0)
    assert np.array_equal(y, y0)


def test_first_order_loss_over_dt():
    core = make_core(gas("A"), {"type": "FIRST_ORDER_LOSS", "label": "l", "species": "A",
                                "rate": 1e-3})
    y, stats = core.solve(np.array([2.0]), ENV, 1000.0)
    assert y[0] == pytest.approx(2.0 * math.exp(-1.0), rel=10 * core.options.rel_tol)
    assert stats.steps > 0


def test_solve_rejects_bad_input():
    core = make_core(gas("A"), {"type": "EMISSION", "species": "A", "rate": 1.0})
    with pytest.raises(ValueError):
        core.solve(np.zeros(1), ENV, 0.0)
    with pytest.raises(ValueError):
        core.solve(np.zeros(3), ENV, 1.0)


def test_history_resume_only_on_continuation():
    core = demo_core(modal(("m", 1e-7, 1.6, ["organic"])))
    y = core.new_state()
    y[core.layout.gas_index["O3"]] = 0.05
    y[core.layout.gas_index["ISOP"]] = 0.005
    a, s1 = core.solve(y, core.env, 600.0)
    b, s2 = core.solve(a, core.env, 600.0)
    core.reset_history()
    c, s3 = core.solve(a, core.env, 600.0)
    assert s2.steps < s3.steps
    assert np.allclose(b, c, rtol=1e-3, atol=1e-12)
    # a modified state starts afresh
    a2 = a.copy()
    a2[0] *= 1.0001
    _, s4 = core.solve(a2, core.env, 600.0)
    assert s4.order_history[0] == 1


def test_gas_chemistry_is_representation_independent():
    rng = np.random.default_rng(4)
    cores = [demo_core(), demo_core(modal(("m", 1e-7, 1.6, ["organic"]))),
             demo_core(particles(3, ["organic"]))]
    n_gas = cores[0].layout.n_gas
    g = 10 ** rng.uniform(-6, -2, n_gas)
    forcings = []
    for core in cores:
        y = core.new_state()
        y[:n_gas] = g  # no aerosol mass: transfer terms vanish
        forcings.append(core.compute_forcing(y)[:n_gas])
    assert np.array_equal(forcings[0], forcings[1])
    # particles keep their number without mass, so only condensables may differ
    keep = [i for i, name in enumerate(cores[0].layout.gas_species)
            if name not in ("ISOP-P1", "ISOP-P2")]
    assert np.array_equal(forcings[0][keep], forcings[2][keep])


def test_serialization_round_trip_and_corruption():
    core = demo_core(particles(4, ["organic"]))
    core.set_particle_weights([1e6, 2e6, 3e6, 4e6])
    core.get_rate_handle("NO2 photolysis").set(7e-3)
    buf = serialize_core(core)
    assert buf[:4] == b"MPKC"
    again = deserialize_core(buf)
    assert again.pattern.equals(core.pattern)
    y = 10 ** np.random.default_rng(1).uniform(-9, -3, core.n_total)
    assert np.array_equal(again.compute_forcing(y), core.compute_forcing(y))
    assert np.array_equal(again.aero_rep.weights, core.aero_rep.weights)
    with pytest.raises(ValueError):
        deserialize_core(b"NOPE" + buf[4:])
    with pytest.raises(ValueError):
        deserialize_core(buf[:4] + (99).to_bytes(4, "little") + buf[8:])
    with pytest.raises(ValueError):
        deserialize_core(buf[:-5])


def test_options_default_to_config_tolerances():
    core = demo_core()
    assert core.options.rel_tol > 0
    custom = Core.from_json(doc(gas("A")), SolverOptions(rel_tol=1e-3))
    assert custom.options.rel_tol == 1e-3


def test_golden_state_snapshot():
    from mpkin import EnvironmentalState
    from mpkin.layout import serialize_state
    golden = (DATA / "golden_state.bin").read_bytes()
    y = np.array([0.0, 1.0, -2.5, 1e-300, 3.14159, 6.02214076e23])
    assert serialize_state(y, EnvironmentalState(290.0, 1.0e5, 0.5)) == golden
    y2, env = deserialize_state(golden)
    assert np.array_equal(y, y2) and env.relative_humidity == 0.5


@pytest.mark.slow
def test_golden_trajectory():
    import sys
    sys.path.insert(0, str(DATA))
    from make_golden import SPECIES, golden_trajectory
    with open(DATA / "golden_modes.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][1:] == SPECIES
    golden = np.array(rows[1:], dtype=float)
    rtol = 1e-4
    got = np.array(golden_trajectory(rel_tol=rtol))
    scale = np.abs(golden).max(axis=0)
    err = np.abs(got - golden) / np.maximum(np.abs(golden), 1e-3 * scale)
    assert err.max() <= 10 * rtol

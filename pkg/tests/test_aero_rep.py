import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import EPS, aero, gas, make_core, modal, particles, phase
from mpkin.solver import finite_difference_jacobian

ENTRIES = [gas("G"), aero("x", 0.1, 1000.0), aero("y", 0.2, 1500.0), phase("p", ["x", "y"])]


def _rep(rep_entry):
    core = make_core(*ENTRIES, rep_entry)
    return core, core.aero_rep


def test_modal_number_and_radius():
    gmd, gsd = 1e-7, 1.6
    core, rep = _rep(modal(("m", gmd, gsd, ["p"])))
    y = core.new_state()
    y[core.layout.index_of("m", "p", "x")] = 2e-9
    y[core.layout.index_of("m", "p", "y")] = 3e-9
    s2 = math.log(gsd) ** 2
    vbar = math.pi / 6 * gmd ** 3 * math.exp(4.5 * s2)
    n = rep.number_concentration__n_m3(y, 0)
    assert n.value == pytest.approx((2e-9 / 1000 + 3e-9 / 1500) / vbar, rel=1e-14)
    assert n.dvalue_dy[core.layout.index_of("m", "p", "x")] == pytest.approx(1 / (vbar * 1000))
    r = rep.effective_radius__m(y, 0)
    assert r.value == pytest.approx(0.5 * gmd * math.exp(2.5 * s2), rel=1e-14)
    assert all(v == 0 for v in r.dvalue_dy.values())


def test_section_uses_mid_diameter():
    core, rep = _rep(modal(sections=[("b", 2e-7, ["p"])]))
    y = core.new_state()
    y[core.layout.index_of("b", "p", "x")] = 1e-9
    vbar = math.pi / 6 * 2e-7 ** 3
    assert rep.number_concentration__n_m3(y, 0).value == pytest.approx(1e-12 / vbar)
    assert rep.effective_radius__m(y, 0).value == pytest.approx(1e-7)


def test_particle_weight_is_number_and_radius_from_mass():
    core, rep = _rep(particles(2, ["p"]))
    core.set_particle_weights([3.2e4, 1e6])
    y = core.new_state()
    y[core.layout.index_of(0, "p", "x")] = 1e-9
    assert rep.number_concentration__n_m3(y, 0).value == 3.2e4
    y[core.layout.index_of(0, "p", "y")] = 5e-9
    assert rep.number_concentration__n_m3(y, 0).value == 3.2e4
    v = (1e-9 / 1000 + 5e-9 / 1500) / 3.2e4
    assert rep.effective_radius__m(y, 0).value == pytest.approx(np.cbrt(3 * v / (4 * math.pi)))


def test_weight_validation():
    core, _ = _rep(particles(2, ["p"]))
    with pytest.raises(ValueError):
        core.set_particle_weights([1.0])
    with pytest.raises(ValueError):
        core.set_particle_weights([1.0, 0.0])
    core2, _ = _rep(modal(("m", 1e-7, 1.5, ["p"])))
    with pytest.raises(TypeError):
        core2.set_particle_weights([1.0])


def test_average_mw_and_errors():
    core, rep = _rep(modal(("m", 1e-7, 1.5, ["p"])))
    y = core.new_state()
    with pytest.raises(ZeroDivisionError):
        rep.aerosol_phase_average_molecular_weight__kg_mol(y, 0)
    with pytest.raises(IndexError):
        rep.aerosol_phase_mass__kg_m3(y, 5)
    y[core.layout.index_of("m", "p", "x")] = 1.0
    y[core.layout.index_of("m", "p", "y")] = 1.0
    mw = rep.aerosol_phase_average_molecular_weight__kg_mol(y, 0).value
    assert mw == pytest.approx(2.0 / (1 / 0.1 + 1 / 0.2))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["modal", "particle"]),
       st.lists(st.floats(-12, -7), min_size=4, max_size=4),
       st.floats(3, 8))
def test_gradients_match_finite_differences(kind, log_masses, log_weight):
    if kind == "modal":
        core, rep = _rep(modal(("m", 1e-7, 1.5, ["p"]), ("n", 1e-6, 2.0, ["p"])))
    else:
        core, rep = _rep(particles(2, ["p"]))
        core.set_particle_weights([10 ** log_weight, 10 ** (log_weight + 1)])
    y = core.new_state()
    y[1:] = 10.0 ** np.array(log_masses)
    for getter in (rep.effective_radius__m, rep.number_concentration__n_m3,
                   rep.aerosol_phase_mass__kg_m3,
                   rep.aerosol_phase_average_molecular_weight__kg_mol):
        for inst in (0, 1):
            an = getter(y, inst).dense_gradient(core.n_total)
            fd = finite_difference_jacobian(lambda v: np.array([getter(v, inst).value]), y,
                                            rel_step=EPS ** (1 / 3))[0]
            scale = max(np.abs(fd).max(), np.abs(an).max(), 1e-300)
            assert np.abs(an - fd).max() / scale < 1e-6

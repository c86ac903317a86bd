import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import EPS, aero, gas, jacobian_check, make_core, modal, phase
from mpkin import EnvironmentalState
from mpkin.linalg import PatternError, compose_solver_jacobian, pattern_from_coo
from mpkin.solver import finite_difference_jacobian

ENV = EnvironmentalState(290.0, 1e5, 0.8)


def _core(polys, forms=None, with_transfer=False):
    forms = forms or ["molality"] * len(polys)
    names = [f"S{i}" for i in range(len(polys))]
    entries = [gas("X", 0.1, diffusion_coeff=1e-5), aero("x", 0.1), aero("w", 0.018),
               *[aero(n, 0.05 + 0.01 * i, 2000.0) for i, n in enumerate(names)],
               phase("aq", ["w", "x", *names]),
               modal(("m", 2e-7, 1.6, ["aq"]), ("n", 1e-6, 1.8, ["aq"])),
               {"type": "ZSR_AEROSOL_WATER", "aerosol_phase": "aq", "water_species": "w",
                "electrolytes": [{"name": n, "molecular_weight": 0.05 + 0.01 * i,
                                  "molality_poly": poly, "form": f}
                                 for i, (n, poly, f) in enumerate(zip(names, polys, forms))]}]
    if with_transfer:
        entries.append({"type": "HENRYS_LAW_PHASE_TRANSFER", "gas_species": "X",
                        "aerosol_phase": "aq", "aerosol_species": "x", "aerosol_water": "w",
                        "H298": 1e-2})
    return make_core(*entries, env=ENV), names


def test_constant_polynomial_oracle():
    core, (s0,) = _core([[4.0]])
    y = core.new_state()
    y[core.layout.index_of("m", "aq", s0)] = 2e-9
    lam = core.compute_parameters(y)
    assert lam[0] == pytest.approx(1000 * 2e-9 / (50.0 * 4.0), rel=1e-15)
    assert lam[1] == 0.0


def test_zero_electrolyte_gives_zero_water():
    core, _ = _core([[1.0, 2.0]])
    assert not np.any(core.compute_parameters(core.new_state()))


def test_sqrt_form_squares_the_polynomial():
    lin, (s0,) = _core([[4.0, 1.0]])
    sq, _ = _core([[2.0, 0.5]], forms=["sqrt_molality"])
    a_w = ENV.relative_humidity
    m_sqrt = (2.0 + 0.5 * a_w) ** 2
    y = lin.new_state()
    y[lin.layout.index_of("m", "aq", s0)] = 1e-9
    assert sq.compute_parameters(y)[0] == pytest.approx(1000 * 1e-9 / (50.0 * m_sqrt))
    assert lin.compute_parameters(y)[0] == pytest.approx(1000 * 1e-9 / (50.0 * (4.0 + a_w)))


def test_missing_relative_humidity_is_an_error():
    core, _ = _core([[1.0]])
    with pytest.raises(ValueError, match="relative_humidity"):
        core.set_environment(EnvironmentalState(290.0, 1e5))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-12, 1e-8), min_size=4, max_size=4), st.floats(0.1, 10),
       st.floats(0.1, 10))
def test_linearity_in_electrolyte_mass(masses, a, b):
    core, names = _core([[1.5, 0.5], [3.0]])
    lay = core.layout
    u, v = core.new_state(), core.new_state()
    for k, slot in enumerate(("m", "n")):
        u[lay.index_of(slot, "aq", names[0])] = masses[k]
        v[lay.index_of(slot, "aq", names[1])] = masses[2 + k]
    lu, lv, luv = (core.compute_parameters(z) for z in (u, v, a * u + b * v))
    assert np.allclose(luv, a * lu + b * lv, rtol=1e-13, atol=0)


def test_parameter_jacobian_matches_fd():
    core, names = _core([[1.5, 0.5], [3.0, -1.0, 2.0]])
    par = core.parameters[0]
    rng = np.random.default_rng(3)
    y = 10 ** rng.uniform(-11, -8, core.n_total)
    dense = np.zeros((core.n_params, core.n_total))
    np.add.at(dense, (par.p_rows, par.p_cols), par.jacobian_values(y))
    fd = finite_difference_jacobian(core.compute_parameters, y, rel_step=EPS ** (1 / 3))
    assert np.allclose(dense, fd, rtol=1e-6, atol=1e-12 * np.abs(fd).max())


def test_full_system_jacobian_with_diagnosed_water():
    core, _ = _core([[1.5, 0.5]], with_transfer=True)
    rng = np.random.default_rng(11)
    for _ in range(5):
        y = 10 ** rng.uniform(-11, -8, core.n_total)
        y[0] = 1e-3
        err, outside = jacobian_check(core, y)
        assert err < 1e-6 and outside < 1e-12


def test_compose_rank_one_against_dense():
    rng = np.random.default_rng(0)
    jd = sp.random(5, 5, density=0.4, random_state=1, format="csc") + sp.identity(5)
    jp = sp.csc_matrix(rng.standard_normal((5, 1)) * (rng.random((5, 1)) > 0.3))
    dp = sp.csc_matrix(rng.standard_normal((1, 5)) * (rng.random((1, 5)) > 0.3))
    dense = jd.toarray() + jp.toarray() @ dp.toarray()
    assert np.allclose(compose_solver_jacobian(jd, jp, dp).toarray(), dense)
    rows, cols = np.nonzero(np.ones((5, 5)))
    full = pattern_from_coo(5, 5, rows, cols)
    assert np.allclose(compose_solver_jacobian(jd, jp, dp, full).toarray(), dense)
    assert np.array_equal(compose_solver_jacobian(jd, sp.csc_matrix((5, 1)),
                                                  sp.csc_matrix((1, 5))).toarray(), jd.toarray())
    diag = pattern_from_coo(5, 5, np.arange(5), np.arange(5))
    with pytest.raises(PatternError):
        compose_solver_jacobian(sp.identity(5), np.ones((5, 1)), np.ones((1, 5)), diag)

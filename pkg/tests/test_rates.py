import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpkin import rates


def test_arrhenius_forms():
    assert rates.arrhenius_rate_constant(250.0, 5e4, A=7.3) == 7.3
    assert rates.arrhenius_rate_constant(290.0, A=2.54e-11, C=-407.6) == pytest.approx(
        1.0357e-10, rel=1e-4)
    assert rates.arrhenius_rate_constant(290.0, A=7.86e-15, C=1912.0) == pytest.approx(
        7.86e-15 * math.exp(-1912.0 / 290.0), rel=1e-14)
    base = rates.arrhenius_rate_constant(290.0, 1e5, A=1.0, C=100.0)
    assert rates.arrhenius_rate_constant(290.0, 1e5, A=1.0, C=100.0, E=1e-5) == pytest.approx(
        2.0 * base)


def test_troe_limits():
    m = 2.5e19
    k0, kinf = 1e-30, 1e-11
    assert rates.troe_rate_constant(290.0, 0.0, k0, kinf) == 0.0
    centre = rates.troe_rate_constant(290.0, kinf / k0, k0, kinf, Fc=0.6, N=1.0)
    assert centre == pytest.approx(0.3 * kinf, rel=1e-14)
    lind = rates.troe_rate_constant(290.0, m, k0, kinf, Fc=1.0)
    assert lind == pytest.approx(k0 * m / (1 + k0 * m / kinf), rel=1e-14)


def test_custom_h2o2():
    p = {"k1_A": 2.3e-13, "k1_C": -600.0, "k2_A": 1.7e-33, "k2_C": -1000.0}
    k1 = 2.3e-13 * math.exp(600.0 / 290.0)
    assert rates.custom_h2o2_rate_constant(290.0, 0.0, p) == pytest.approx(k1)
    assert rates.custom_h2o2_rate_constant(290.0, 2.5e19, {**p, "k2_A": 0.0}) == pytest.approx(k1)
    full = k1 + 1.7e-33 * math.exp(1000.0 / 290.0) * 2.5e19
    assert rates.custom_h2o2_rate_constant(290.0, 2.5e19, p) == pytest.approx(full, rel=1e-14)


def test_custom_oh_hno3_limits():
    p = {"k0_A": 2.4e-14, "k0_C": -460.0, "k2_A": 2.7e-17, "k2_C": -2199.0,
         "k3_A": 6.5e-34, "k3_C": -1335.0}
    k0 = 2.4e-14 * math.exp(460.0 / 290.0)
    k2 = 2.7e-17 * math.exp(2199.0 / 290.0)
    assert rates.custom_oh_hno3_rate_constant(290.0, 0.0, p) == pytest.approx(k0)
    assert rates.custom_oh_hno3_rate_constant(290.0, 1e40, p) == pytest.approx(k0 + k2, rel=1e-9)
    k3m = 6.5e-34 * math.exp(1335.0 / 290.0) * 2.5e19
    mid = k0 + k3m / (1 + k3m / k2)
    assert rates.custom_oh_hno3_rate_constant(290.0, 2.5e19, p) == pytest.approx(mid, rel=1e-14)


def test_tunneling():
    assert rates.wennberg_tunneling_rate_constant(290.0, 1.0, 290.0, 290.0 ** 3) == pytest.approx(1.0)
    assert rates.wennberg_tunneling_rate_constant(250.0, 3.0) == 3.0


def test_wennberg_no_ro2():
    kn, ka = rates.wennberg_no_ro2_rate_constants(290.0, 2.5e19, 2e-12, -360.0, 1.0, 6.0)
    assert ka == 0.0 and kn == pytest.approx(2e-12 * math.exp(360.0 / 290.0))
    # independent evaluation of A(T, M, n)
    n = 5.0
    k0m = 2e-22 * math.exp(n) * 2.45e19
    kinf = 0.43 * (293.0 / 298.0) ** -8
    a = k0m / (1 + k0m / kinf) * 0.41 ** (1 / (1 + math.log10(k0m / kinf) ** 2))
    assert rates.wennberg_a(293.0, 2.45e19, n) == pytest.approx(a, rel=1e-14)


@settings(max_examples=200)
@given(st.floats(180, 330), st.floats(1e17, 1e20), st.floats(1e-14, 1e-10),
       st.floats(-800, 800), st.floats(1e-3, 1.0), st.floats(0.5, 15))
def test_wennberg_branch_sum(t, m, x, y, a0, n):
    kn, ka = rates.wennberg_no_ro2_rate_constants(t, m, x, y, a0, n)
    assert kn >= 0 and ka >= -1e-15 * kn
    assert kn + ka == pytest.approx(x * math.exp(-y / t), rel=1e-13)


def test_simpol_and_henry():
    assert rates.simpol_vapor_pressure(290.0, 3.81e3, -21.3) == pytest.approx(6.885e-9, rel=1e-3)
    assert rates.simpol_vapor_pressure(290.0, 3.81e3, -20.9) == pytest.approx(1.73e-8, rel=1e-2)
    assert rates.simpol_vapor_pressure(250.0, 0.0, 0.0) == 1.0
    assert rates.simpol_vapor_pressure_pa(250.0, 0.0, 0.0) == 101325.0
    assert rates.henrys_law_constant(250.0, 1.3e-2) == 1.3e-2
    assert rates.aqueous_equilibrium_constant(298.0, 2.0, 1234.0) == 2.0
    assert rates.aqueous_equilibrium_constant(280.0, 2.0, 500.0) == pytest.approx(
        2.0 * math.exp(500.0 * (1 / 280.0 - 1 / 298.0)))


def test_condensation_rate_constant():
    assert rates.fuchs_sutugin(1e-12, 0.3) == pytest.approx(1.0, rel=1e-10)
    kc = rates.condensation_rate_constant(1e-6, 1e-5, 290.0, 0.1, 1.0)
    fs = rates.fuchs_sutugin(rates.mean_free_path(1e-5, 290.0, 0.1) / 1e-6, 1.0)
    assert kc == pytest.approx(4 * math.pi * 1e-11 * fs, rel=1e-14)
    assert kc / fs == pytest.approx(1.2566e-10, rel=1e-4)

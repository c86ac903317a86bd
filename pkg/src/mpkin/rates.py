"""Rate-constant and equilibrium expressions for the supported process types.

All gas-phase constants are in molecule cm-3 based units,
(molec cm-3)^-(n-1) s-1 for n reactants; ``air_number_density`` returns
[M] in molec cm-3.  Activation terms use ``C`` in K, i.e. exp(-C/T), which
is Ea/k_b.
"""

from __future__ import annotations

import math

from mpkin.constants import AVOGADRO, BOLTZMANN, GAS_CONSTANT, STANDARD_ATM, T_REF


def air_number_density(temperature: float, pressure: float) -> float:
    """[M] in molecules cm-3."""
    return pressure / (GAS_CONSTANT * temperature) * AVOGADRO * 1.0e-6


def air_molar_density(temperature: float, pressure: float) -> float:
    """n_air = P / (R T) in mol m-3."""
    return pressure / (GAS_CONSTANT * temperature)


def arrhenius_rate_constant(temperature, pressure=0.0, A=1.0, Ea=0.0, B=0.0, D=300.0,
                            E=0.0, C=None) -> float:
    """k = A exp(-Ea / (k_b T)) (T / D)^B (1 + E P).

    ``C`` (K) may be given instead of ``Ea`` (J); Ea = C k_b.
    """
    if C is not None:
        Ea = C * BOLTZMANN
    return A * math.exp(-Ea / (BOLTZMANN * temperature)) * (temperature / D) ** B * (
        1.0 + E * pressure
    )


def _sub_arrhenius(params: dict, prefix: str, temperature: float) -> float:
    # sub-constants of the compound forms fix D = 300 K and E = 0
    return arrhenius_rate_constant(
        temperature, 0.0, params.get(f"{prefix}_A", 0.0), 0.0,
        params.get(f"{prefix}_B", 0.0), 300.0, 0.0, params.get(f"{prefix}_C", 0.0),
    )


def troe_rate_constant(temperature, M, k0_A, kinf_A, k0_B=0.0, k0_C=0.0, kinf_B=0.0,
                       kinf_C=0.0, Fc=0.6, N=1.0) -> float:
    """Fall-off constant k0[M]/(1 + k0[M]/kinf) * Fc^(1/(1 + (1/N) log10(k0[M]/kinf)^2))."""
    p = dict(k0_A=k0_A, k0_B=k0_B, k0_C=k0_C, kinf_A=kinf_A, kinf_B=kinf_B, kinf_C=kinf_C)
    k0m = _sub_arrhenius(p, "k0", temperature) * M
    kinf = _sub_arrhenius(p, "kinf", temperature)
    if k0m == 0.0:
        return 0.0
    if kinf == 0.0:
        return 0.0
    ratio = k0m / kinf
    expo = 1.0 / (1.0 + math.log10(ratio) ** 2 / N)
    return k0m / (1.0 + ratio) * Fc ** expo


def custom_h2o2_rate_constant(temperature, M, params: dict) -> float:
    """k = k1 + k2 [M]."""
    return _sub_arrhenius(params, "k1", temperature) + _sub_arrhenius(
        params, "k2", temperature
    ) * M


def custom_oh_hno3_rate_constant(temperature, M, params: dict) -> float:
    """k = k0 + k3[M] / (1 + k3[M]/k2)."""
    k0 = _sub_arrhenius(params, "k0", temperature)
    k2 = _sub_arrhenius(params, "k2", temperature)
    k3m = _sub_arrhenius(params, "k3", temperature) * M
    if k3m == 0.0:
        return k0
    if k2 == 0.0:
        return k0
    return k0 + k3m / (1.0 + k3m / k2)


def wennberg_tunneling_rate_constant(temperature, A=1.0, B=0.0, C=0.0) -> float:
    """k = A exp(-B/T) exp(C/T^3)."""
    return A * math.exp(-B / temperature) * math.exp(C / temperature ** 3)


def wennberg_a(temperature: float, M: float, n: float) -> float:
    """Structure- and pressure-dependent nitrate term A(T, [M], n)."""
    k0m = 2.0e-22 * math.exp(n) * M
    kinf = 0.43 * (temperature / 298.0) ** -8.0
    if k0m == 0.0:
        return 0.0
    ratio = k0m / kinf
    return k0m / (1.0 + ratio) * 0.41 ** (1.0 / (1.0 + math.log10(ratio) ** 2))


def wennberg_no_ro2_rate_constants(temperature, M, X, Y, a0, n) -> tuple[float, float]:
    """(k_nitrate, k_alkoxy) for the RO2 + NO branches."""
    k = X * math.exp(-Y / temperature)
    a = wennberg_a(temperature, M, n)
    z = wennberg_a(293.0, 2.45e19, n) * (1.0 - a0) / a0
    if a + z == 0.0:
        return k, 0.0
    k_nitrate = k * (a / (a + z))
    return k_nitrate, k - k_nitrate


def simpol_vapor_pressure(temperature, B1, B2, B3=0.0, B4=0.0) -> float:
    """Saturation vapour pressure (atm): log10 p = B1/T + B2 + B3 T + B4 ln T."""
    return 10.0 ** (B1 / temperature + B2 + B3 * temperature + B4 * math.log(temperature))


def simpol_vapor_pressure_pa(temperature, B1, B2, B3=0.0, B4=0.0) -> float:
    return simpol_vapor_pressure(temperature, B1, B2, B3, B4) * STANDARD_ATM


def van_t_hoff(value_298: float, C: float, temperature: float) -> float:
    """value(T) = value(298 K) exp(C (1/T - 1/298))."""
    return value_298 * math.exp(C * (1.0 / temperature - 1.0 / T_REF))


def henrys_law_constant(temperature, H298, C=0.0) -> float:
    """H(T) in M Pa-1."""
    return van_t_hoff(H298, C, temperature)


def aqueous_equilibrium_constant(temperature, A, C=0.0) -> float:
    return van_t_hoff(A, C, temperature)


def mean_molecular_speed(temperature: float, molecular_weight: float) -> float:
    """sqrt(8 R T / (pi MW)) in m s-1."""
    return math.sqrt(8.0 * GAS_CONSTANT * temperature / (math.pi * molecular_weight))


def mean_free_path(diff_coeff: float, temperature: float, molecular_weight: float) -> float:
    """lambda = 3 D_g / c_bar (m)."""
    return 3.0 * diff_coeff / mean_molecular_speed(temperature, molecular_weight)


def fuchs_sutugin(knudsen: float, alpha: float) -> float:
    return 0.75 * alpha * (1.0 + knudsen) / (
        knudsen ** 2 + knudsen + 0.283 * knudsen * alpha + 0.75 * alpha
    )


def condensation_rate_constant(radius, diff_coeff, temperature, molecular_weight,
                               alpha=1.0) -> float:
    """k_c = 4 pi r D_g f_fs(Kn, alpha) in m3 s-1 per particle."""
    kn = mean_free_path(diff_coeff, temperature, molecular_weight) / radius
    return 4.0 * math.pi * radius * diff_coeff * fuchs_sutugin(kn, alpha)

"""Physical constants (SI)."""

GAS_CONSTANT = 8.314462618  # J mol-1 K-1
BOLTZMANN = 1.380649e-23  # J K-1
AVOGADRO = 6.02214076e23  # mol-1
STANDARD_ATM = 101325.0  # Pa
T_REF = 298.0  # K, reference temperature for Henry / equilibrium constants

PPM = 1.0e-6

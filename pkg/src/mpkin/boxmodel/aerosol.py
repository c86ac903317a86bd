"""Initial aerosol: lognormal modes, their discretisation into bins, particle sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from mpkin.boxmodel.scenario import Mode


def mixture_density(mode: Mode, densities: dict[str, float]) -> float:
    """Volume-additive density of the mode's composition (kg m-3)."""
    return 1.0 / sum(f / densities[name] for name, f in mode.composition)


def mode_mass(mode: Mode, densities: dict[str, float]) -> float:
    """Total mass concentration of a lognormal mode (kg m-3)."""
    s2 = math.log(mode.gsd) ** 2
    mean_volume = math.pi / 6.0 * mode.gmd ** 3 * math.exp(4.5 * s2)
    return mode.number * mean_volume * mixture_density(mode, densities)


def default_bin_range(modes) -> tuple[float, float]:
    """Smallest GMD * GSD^-3 to largest GMD * GSD^3."""
    lo = min(m.gmd * m.gsd ** -3 for m in modes)
    hi = max(m.gmd * m.gsd ** 3 for m in modes)
    return lo, hi


def _mass_cdf(d, mode: Mode):
    """Fraction of a lognormal mode's mass below diameter d."""
    ln_s = math.log(mode.gsd)
    if ln_s == 0.0:
        return np.where(np.asarray(d) >= mode.gmd, 1.0, 0.0)
    d_vol = mode.gmd * math.exp(3.0 * ln_s ** 2)
    with np.errstate(divide="ignore"):
        z = (np.log(d) - math.log(d_vol)) / (math.sqrt(2.0) * ln_s)
    return 0.5 * (1.0 + erf(z))


@dataclass
class BinnedAerosol:
    edges: np.ndarray  # n_bins + 1, m
    mid_diameters: np.ndarray  # geometric mean of the edges, m
    mass: dict[str, np.ndarray]  # species -> kg m-3 per bin

    def total(self) -> float:
        return float(sum(v.sum() for v in self.mass.values()))


def discretize_modes_to_bins(modes, n_bins: int, d_min: float, d_max: float,
                             densities: dict[str, float], open_ends: bool = True
                             ) -> BinnedAerosol:
    """Integrate each mode's lognormal mass into log-spaced bins.

    With ``open_ends`` the first and last bins also take the mass below
    ``d_min`` and above ``d_max``, so total mass is conserved exactly;
    otherwise only the mass inside [d_min, d_max] is kept.
    """
    if not 0 < d_min < d_max:
        raise ValueError("need 0 < d_min < d_max")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    edges = np.exp(np.linspace(math.log(d_min), math.log(d_max), n_bins + 1))
    mids = np.sqrt(edges[:-1] * edges[1:])
    species = sorted({name for m in modes for name, _ in m.composition})
    mass = {name: np.zeros(n_bins) for name in species}
    for m in modes:
        cdf = _mass_cdf(edges, m)
        if open_ends:
            cdf = cdf.copy()
            cdf[0] = 0.0
            cdf[-1] = 1.0
        frac = np.diff(cdf)
        total = mode_mass(m, densities)
        for name, f in m.composition:
            mass[name] += total * f * frac
    return BinnedAerosol(edges, mids, mass)


@dataclass
class ParticleSample:
    diameters: np.ndarray  # m
    weights: np.ndarray  # real particles m-3 per computational particle
    mode_index: np.ndarray
    mass: dict[str, np.ndarray]  # species -> kg per real particle

    def mass_concentration(self, species: str) -> np.ndarray:
        """kg m-3 carried by each computational particle."""
        return self.mass[species] * self.weights


def _allot(fractions: np.ndarray, n: int) -> np.ndarray:
    """Integer counts summing to ``n``, closest to ``fractions * n``."""
    exact = fractions * n
    counts = np.floor(exact).astype(np.int64)
    short = n - counts.sum()
    counts[np.argsort(counts - exact, kind="stable")[:short]] += 1
    return counts


def sample_particles(modes, n_particles: int, rng_seed: int, densities: dict[str, float],
                     conserve_mode_mass: bool = False) -> ParticleSample:
    """Draw equally weighted particles from the number-weighted mode mixture.

    Particles are allotted to modes in proportion to mode number (largest
    remainder rounding) rather than by a multinomial draw, so a sparse mode
    cannot vanish by chance; diameters within each mode are random.
    ``conserve_mode_mass`` rescales each sampled mode's particle masses so
    the mode's total mass matches its lognormal value (modes left without
    any particle keep zero mass).
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if not modes:
        raise ValueError("no aerosol modes to sample")
    rng = np.random.default_rng(rng_seed)
    numbers = np.array([m.number for m in modes])
    n_total = numbers.sum()
    which = np.repeat(np.arange(len(modes)), _allot(numbers / n_total, n_particles))
    gmd = np.array([m.gmd for m in modes])[which]
    ln_gsd = np.log(np.array([m.gsd for m in modes]))[which]
    diam = gmd * np.exp(ln_gsd * rng.standard_normal(n_particles))
    weights = np.full(n_particles, n_total / n_particles)
    rho = np.array([mixture_density(m, densities) for m in modes])[which]
    pmass = rho * math.pi / 6.0 * diam ** 3
    if conserve_mode_mass:
        for k, m in enumerate(modes):
            sel = which == k
            if sel.any():
                pmass[sel] *= mode_mass(m, densities) / (weights[sel] * pmass[sel]).sum()
        diam = np.cbrt(6.0 * pmass / (math.pi * rho))
    species = sorted({name for m in modes for name, _ in m.composition})
    mass = {name: np.zeros(n_particles) for name in species}
    for k, m in enumerate(modes):
        sel = which == k
        for name, f in m.composition:
            mass[name][sel] = pmass[sel] * f
    return ParticleSample(diam, weights, which, mass)

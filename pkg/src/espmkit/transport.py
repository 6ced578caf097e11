"""Temperature and concentration dependence of transport/kinetic properties.

Solid diffusivities and reaction rate constants follow an Arrhenius law
referenced to ``T_ref``.  Electrolyte diffusivity, ionic conductivity and
the activity/transference factor ``nu`` use empirical LiPF6-in-carbonate
correlations whose fitted coefficients assume the salt concentration in
kmol/m^3 (= mol/L) and, for the diffusivity, return cm^2/s.  All unit
conversion between those fit conventions and the SI units used everywhere
else in the package is centralised here; nothing outside this module is
allowed to rescale concentration.
"""

from __future__ import annotations

import numpy as np

# mol/m^3 -> kmol/m^3, the concentration unit the empirical fits expect
_MOL_PER_M3_TO_KMOL_PER_M3 = 1.0e-3
# cm^2/s -> m^2/s for the electrolyte diffusivity fit
_CM2_PER_S_TO_M2_PER_S = 1.0e-4
# mS/cm -> S/m for the conductivity fit
_MS_PER_CM_TO_S_PER_M = 0.1


def arrhenius_scale(value_ref: float, activation_energy: float, temperature: float,
                    t_ref: float, gas_constant: float = 8.314462618) -> float:
    """Scale a reference property to temperature ``T``.

    value(T) = value_ref * exp(-Ea/Rg * (1/T - 1/T_ref))

    so the property grows with temperature for positive activation energy.

    Parameters
    ----------
    value_ref : property value at ``t_ref`` (any unit; returned unit matches)
    activation_energy : J/mol
    temperature, t_ref : K
    """
    if temperature <= 0.0 or t_ref <= 0.0:
        raise ValueError(f"absolute temperatures must be positive, got T={temperature}, T_ref={t_ref}")
    return value_ref * np.exp(-activation_energy / gas_constant * (1.0 / temperature - 1.0 / t_ref))


def electrolyte_diffusivity(c_e: np.ndarray | float, temperature: float) -> np.ndarray | float:
    """Salt diffusion coefficient D_e(c_e, T) in m^2/s.

    Empirical fit; c_e in mol/m^3, internally converted to kmol/m^3.  The
    fit's temperature pole sits at T = 229 K + c_e[kmol/m^3] K; we require
    operating temperatures comfortably above it.
    """
    c = np.asarray(c_e, dtype=float) * _MOL_PER_M3_TO_KMOL_PER_M3
    if np.any(c < 0.0):
        raise ValueError("negative electrolyte concentration")
    pole = 229.0 + c
    if np.any(temperature <= pole + 5.0):
        raise ValueError(
            f"temperature {temperature} K within 5 K of the D_e fit pole (229 + c_e) K; fit invalid"
        )
    exponent = 4.43 + 54.0 / (temperature - pole) + 0.22 * c
    d_cm2 = 10.0 ** (-exponent)
    return d_cm2 * _CM2_PER_S_TO_M2_PER_S


def electrolyte_conductivity(c_e: np.ndarray | float, temperature: float) -> np.ndarray | float:
    """Ionic conductivity kappa(c_e, T) in S/m.

    Empirical polynomial-squared fit, c_e in mol/m^3 (converted to kmol/m^3
    internally), fit output in mS/cm.
    """
    c = np.asarray(c_e, dtype=float) * _MOL_PER_M3_TO_KMOL_PER_M3
    if np.any(c < 0.0):
        raise ValueError("negative electrolyte concentration")
    T = temperature
    inner = (
        (-10.5 + 0.074 * T - 6.96e-5 * T ** 2)
        + c * (0.668 - 0.0178 * T - 2.8e-5 * T ** 2)
        + c ** 2 * (0.494 - 8.86e-4 * T)
    )
    kappa_ms_cm = c * inner ** 2
    return kappa_ms_cm * _MS_PER_CM_TO_S_PER_M


def activity_factor_nu(c_e: np.ndarray | float, temperature: float) -> np.ndarray | float:
    """Dimensionless electrolyte activity factor nu(c_e, T).

    Multiplies the concentration-overpotential log term in the cell voltage.
    c_e in mol/m^3 (converted to kmol/m^3 internally).
    """
    c = np.asarray(c_e, dtype=float) * _MOL_PER_M3_TO_KMOL_PER_M3
    if np.any(c < 0.0):
        raise ValueError("negative electrolyte concentration")
    return 0.601 - 0.24 * c ** 0.5 + 0.982 * (1.0 - 0.0052 * (temperature - 293.0)) * c ** 1.5


def bruggeman(porosity: np.ndarray | float, exponent: float = 1.5) -> np.ndarray | float:
    """Tortuosity correction eps^1.5 applied to electrolyte transport properties."""
    return np.asarray(porosity, dtype=float) ** exponent

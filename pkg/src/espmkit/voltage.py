"""Terminal voltage assembly for the single-particle-with-electrolyte model.

    V = [U_p(theta_p) + eta_p] - [U_n(theta_n) + eta_n]
        + (2 R T (1 - t_plus) nu / F) ln(c_e(L) / c_e(0))
        - I R_e - I R_lump - I dR_film

Conventions: positive current discharges the cell; x = 0 is the anode
current collector and x = L the cathode collector; eta_n > 0 > eta_p on
discharge, so every current-dependent term pulls the voltage down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .ocp import OcpTable
from .params import CellParameters
from .transport import activity_factor_nu


def exchange_current(cell: CellParameters, electrode: str, c_surf: float,
                     c_e: float, temperature: float) -> float:
    """Exchange current density i_0, A/m^2 of active surface.

    i_0 = F k(T) sqrt(c_e) sqrt(c_surf) sqrt(c_max - c_surf)
    """
    if electrode == "anode":
        k = cell.k_n(temperature)
        c_max = cell.c_s_max_n
    elif electrode == "cathode":
        k = cell.k_p(temperature)
        c_max = cell.c_s_max_p
    else:
        raise ValueError(f"electrode must be 'anode' or 'cathode', got {electrode!r}")
    if not 0.0 < c_surf < c_max:
        raise DomainError(
            f"{electrode} surface concentration {c_surf:.6g} outside (0, {c_max:.6g})")
    if c_e <= 0.0:
        raise DomainError(f"non-positive electrolyte concentration {c_e:.6g}")
    return cell.faraday * k * np.sqrt(c_e * c_surf * (c_max - c_surf))


def overpotential(cell: CellParameters, electrode: str, current: float,
                  c_surf: float, c_e: float, temperature: float) -> float:
    """Butler-Volmer kinetic overpotential (alpha = 0.5 inverse form), V."""
    i0 = exchange_current(cell, electrode, c_surf, c_e, temperature)
    if electrode == "anode":
        sign = 1.0
        surface = cell.a_s_n * cell.area * cell.thickness_n  # m^2 active area
    else:
        sign = -1.0
        surface = cell.a_s_p * cell.area * cell.thickness_p
    thermal = 2.0 * cell.gas_constant * temperature / cell.faraday
    return sign * thermal * np.arcsinh(current / (2.0 * surface * i0))


def electrolyte_log_term(cell: CellParameters, c_at_0: float, c_at_L: float,
                         temperature: float) -> float:
    """Concentration-polarization voltage across the electrolyte, V.

    (2 R T (1 - t_plus) nu / F) * ln(c_e(L) / c_e(0)), with the
    thermodynamic activity factor nu evaluated at the mean of the two
    collector-face concentrations.
    """
    if c_at_0 <= 0.0 or c_at_L <= 0.0:
        raise DomainError(
            f"non-positive boundary electrolyte concentration ({c_at_0:.6g}, {c_at_L:.6g})")
    nu = activity_factor_nu(0.5 * (c_at_0 + c_at_L), temperature)
    return (2.0 * cell.gas_constant * temperature * (1.0 - cell.t_plus) * nu
            / cell.faraday) * np.log(c_at_L / c_at_0)


@dataclass(frozen=True)
class VoltageBreakdown:
    """Additive decomposition of the terminal voltage, all entries in volts."""

    ocp_cathode: float
    ocp_anode: float
    eta_cathode: float
    eta_anode: float
    electrolyte_log: float
    electrolyte_ohmic: float   # -I * R_e
    lump_ohmic: float          # -I * R_lump
    film_ohmic: float          # -I * dR_film

    @property
    def total(self) -> float:
        return (self.ocp_cathode + self.eta_cathode
                - self.ocp_anode - self.eta_anode
                + self.electrolyte_log + self.electrolyte_ohmic
                + self.lump_ohmic + self.film_ohmic)


def terminal_voltage(cell: CellParameters, ocp_anode: OcpTable, ocp_cathode: OcpTable,
                     current: float, c_surf_n: float, c_surf_p: float,
                     c_e_bounds: tuple[float, float],
                     c_e_means: tuple[float, float, float],
                     temperature: float,
                     resistance_electrolyte: float,
                     film_resistance: float = 0.0) -> VoltageBreakdown:
    """Assemble the full terminal voltage from precomputed electrolyte summaries.

    `c_e_bounds` is (c_e at x=0, c_e at x=L); `c_e_means` carries the
    (anode, separator, cathode) region means only for provenance in the
    caller, the lumped electrolyte resistance is passed in precomputed so
    fresh and film-aged cells can share this routine.
    """
    del c_e_means  # summarized upstream into resistance_electrolyte
    theta_n = c_surf_n / cell.c_s_max_n
    theta_p = c_surf_p / cell.c_s_max_p
    return VoltageBreakdown(
        ocp_cathode=ocp_cathode.potential_at(theta_p, temperature, cell.t_ref),
        ocp_anode=ocp_anode.potential_at(theta_n, temperature, cell.t_ref),
        eta_cathode=overpotential(cell, "cathode", current, c_surf_p,
                                  c_e_bounds[1], temperature),
        eta_anode=overpotential(cell, "anode", current, c_surf_n,
                                c_e_bounds[0], temperature),
        electrolyte_log=electrolyte_log_term(cell, c_e_bounds[0], c_e_bounds[1],
                                             temperature),
        electrolyte_ohmic=-current * resistance_electrolyte,
        lump_ohmic=-current * cell.r_lump,
        film_ohmic=-current * film_resistance,
    )

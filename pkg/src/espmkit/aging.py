"""Anode surface-film growth and the capacity-fade / power-fade coupling.

A reduction side reaction with (non-positive) current density ``i_s``
deposits an ion-conducting film on the anode particles.  The same reaction
consumes cyclable lithium, so film thickness and capacity are two views of
one state:

    dL/dt = -i_s * M / (2 F rho)                      [m/s]
    dQ/dt =  i_s * a_s_n * A * L_n / 3600             [Ah/s]

which integrate to the linear map

    L(Q) = L_0 + 3600 * M * (Q_0 - Q) / (2 F rho a_s_n A L_n).

Power fade has two additive components, both functions of capacity alone:
the ohmic resistance of the film itself,

    dR_film = theta_2 * (Q_0 - Q),
    theta_2 = 3600 M / (2 F A^2 rho a_s_n^2 L_n^2 kappa_film),

and the extra electrolyte resistance caused by the film narrowing the
anode pores,

    porosity(L) = 1 - eps_n (1 + 3 L / R_n) - eps_n_f.

The electrolyte conductivities are refreshed at the supplied (c_e, T);
only the anode porosity ages, so the separator and cathode contributions
cancel out of the resistance increase.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .electrolyte import electrolyte_resistance
from .errors import DataFormatError, DomainError, PoreClogError
from .params import FARADAY, CellParameters, SeiParameters


def sei_growth_rate(i_s: float, sei: SeiParameters, faraday: float = FARADAY) -> float:
    """Film thickness growth rate, m/s. Requires i_s <= 0 (reduction reaction)."""
    if i_s > 0.0:
        raise DomainError(f"side-reaction current density must be <= 0, got {i_s}")
    return -i_s * sei.m_sei / (2.0 * faraday * sei.rho_sei)


def capacity_fade_rate(i_s: float, cell: CellParameters, sei: SeiParameters) -> float:
    """Capacity loss rate, Ah/s (non-positive). Requires i_s <= 0."""
    del sei  # rate depends only on geometry; kept for signature symmetry
    if i_s > 0.0:
        raise DomainError(f"side-reaction current density must be <= 0, got {i_s}")
    return i_s * cell.a_s_n * cell.area * cell.thickness_n / 3600.0


def film_thickness_for_capacity(q: float, cell: CellParameters,
                                sei: SeiParameters) -> float:
    """Film thickness implied by capacity q through the shared-lithium budget, m."""
    if q > sei.q_0:
        raise DomainError(f"capacity {q} Ah exceeds nominal {sei.q_0} Ah")
    return sei.l_sei_0 + (3600.0 * sei.m_sei * (sei.q_0 - q)
                          / (2.0 * cell.faraday * sei.rho_sei
                             * cell.a_s_n * cell.area * cell.thickness_n))


def modified_porosity(l_sei: float, cell: CellParameters) -> float:
    """Anode porosity left after the film occupies pore volume.

    porosity = 1 - eps_n * (1 + 3 l_sei / R_n) - eps_n_f
    """
    if l_sei < 0.0:
        raise DomainError(f"film thickness must be >= 0, got {l_sei}")
    eps = 1.0 - cell.eps_n * (1.0 + 3.0 * l_sei / cell.particle_radius_n) - cell.eps_n_f
    if eps <= 0.0:
        raise PoreClogError(
            f"anode pores fully clogged at film thickness {l_sei:.3e} m "
            f"(porosity {eps:.3e})")
    return eps


def sei_resistance_delta(q: float, cell: CellParameters, sei: SeiParameters) -> float:
    """Film resistance increase over beginning of life, ohm."""
    if q > sei.q_0:
        raise DomainError(f"capacity {q} Ah exceeds nominal {sei.q_0} Ah")
    return sei.theta_2_nominal(cell) * (sei.q_0 - q)


def power_fade_resistance(q: float, cell: CellParameters, sei: SeiParameters,
                          c_e, temperature: float) -> float:
    """Total resistance increase at capacity q, ohm.

    Sum of the film's own ohmic resistance and the electrolyte-resistance
    increase from the reduced anode porosity.  ``c_e`` is either a scalar
    or an (anode, separator, cathode) triple of salt concentrations at
    which the conductivities are evaluated.
    """
    c_n, c_s, c_p = (c_e, c_e, c_e) if np.isscalar(c_e) else c_e
    l_sei = film_thickness_for_capacity(q, cell, sei)
    eps_aged = modified_porosity(l_sei, cell)
    r_e_fresh = electrolyte_resistance(cell, c_n, c_s, c_p, temperature)
    r_e_aged = electrolyte_resistance(cell, c_n, c_s, c_p, temperature,
                                      eps_e_n_current=eps_aged)
    return sei_resistance_delta(q, cell, sei) + (r_e_aged - r_e_fresh)


def unpack_kappa_sei(theta_2: float, cell: CellParameters, sei: SeiParameters) -> float:
    """Invert the lumped film-resistance slope back to a film conductivity, S/m."""
    if theta_2 <= 0.0:
        raise DomainError(f"theta_2 must be > 0, got {theta_2}")
    return (3600.0 * sei.m_sei
            / (2.0 * cell.faraday * cell.area ** 2 * sei.rho_sei
               * cell.a_s_n ** 2 * cell.thickness_n ** 2 * theta_2))


@dataclass(frozen=True)
class AgingState:
    """Joint film/capacity state with its derived resistance bookkeeping."""

    l_sei: float            # m
    q: float                # Ah
    r_sei_delta: float      # ohm, film resistance over beginning of life
    eps_e_n_current: float  # aged anode porosity
    r_pf: float             # ohm, total resistance increase


def evaluate_aging(q: float, cell: CellParameters, sei: SeiParameters,
                   c_e, temperature: float) -> AgingState:
    """Derive the full AgingState for a given capacity."""
    return AgingState(
        l_sei=film_thickness_for_capacity(q, cell, sei),
        q=q,
        r_sei_delta=sei_resistance_delta(q, cell, sei),
        eps_e_n_current=modified_porosity(
            film_thickness_for_capacity(q, cell, sei), cell),
        r_pf=power_fade_resistance(q, cell, sei, c_e, temperature),
    )


# --------------------------------------------------------------------------
# exogenous side-reaction current profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SideCurrentProfile:
    """Piecewise-constant side-reaction current density over time."""

    times: np.ndarray   # s, strictly increasing, starting at the profile origin
    values: np.ndarray  # A/m^2, all <= 0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise DataFormatError("profile needs matching 1-D time and value arrays")
        if np.any(np.diff(t) <= 0.0):
            raise DataFormatError("profile times must be strictly increasing")
        if np.any(v > 0.0):
            raise DomainError("side-reaction current density must be <= 0 everywhere")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float) -> "SideCurrentProfile":
        return cls(np.array([0.0]), np.array([float(value)]))

    def at(self, t: float) -> float:
        """Piecewise-constant (previous-value) interpolation."""
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(idx, 0)])


def load_side_current_profile(path: str | Path) -> SideCurrentProfile:
    """Read a two-column (time s, current density A/m^2) text profile."""
    path = Path(path)
    try:
        raw = np.loadtxt(path, ndmin=2)
    except OSError as exc:
        raise DataFormatError(f"cannot read side-current profile {path}: {exc}") from exc
    except ValueError as exc:
        raise DataFormatError(f"{path}: malformed numeric data: {exc}") from exc
    if raw.shape[1] != 2:
        raise DataFormatError(
            f"{path}: expected 2 columns (time, current density), got {raw.shape[1]}")
    return SideCurrentProfile(raw[:, 0], raw[:, 1])


def age_film(l_sei: float, q: float, profile: SideCurrentProfile, duration: float,
             cell: CellParameters, sei: SeiParameters, dt: float = 60.0,
             ) -> tuple[float, float]:
    """Integrate film growth and capacity fade forward by `duration` seconds.

    Both states respond to the same side current, so their rates keep the
    shared-lithium proportionality at every step by construction.
    """
    if duration < 0.0:
        raise DomainError(f"duration must be >= 0, got {duration}")
    t = 0.0
    while t < duration:
        h = min(dt, duration - t)
        i_s = profile.at(t)
        l_sei += h * sei_growth_rate(i_s, sei, cell.faraday)
        q += h * capacity_fade_rate(i_s, cell, sei)
        t += h
    if q <= 0.0:
        raise DomainError(f"aging drove capacity non-positive ({q:.4f} Ah)")
    modified_porosity(l_sei, cell)  # raises PoreClogError at end of life
    return l_sei, q

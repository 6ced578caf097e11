"""Electrolyte salt transport across anode / separator / cathode.

Finite-volume discretization of

    eps_j * dc_e/dt = d/dx ( D_e^eff(c_e, T) dc_e/dx ) + source_j

on a region-aligned grid (cell widths sum to each layer thickness exactly),
with zero flux at the current collectors.  Face fluxes use the
series/harmonic combination of the effective diffusivities of the two
adjacent cells, which enforces flux continuity at the anode/separator and
separator/cathode interfaces by construction.  Source terms:

    anode:     +(1 - t_plus) * I / (F A L_n)
    separator:  0
    cathode:   -(1 - t_plus) * I / (F A L_p)

(positive current = discharge releases ions at the anode).  Because each
electrode's cell widths sum to its thickness exactly, the two sources
cancel and total salt  sum(eps_i * c_i * dx_i)  is conserved to roundoff.

The flux form also makes total-salt conservation independent of how the
nonlinear diffusivity is lagged; the implicit step lags D_e^eff one step
(semi-implicit Picard linearization).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import IntegrationError
from .params import CellParameters, DiscretizationConfig
from .transport import bruggeman, electrolyte_conductivity, electrolyte_diffusivity


def _allocate_cells(m_total: int, widths: list[float], minimum: int = 2) -> list[int]:
    """Split m_total cells across regions proportionally to width, min per region."""
    total = sum(widths)
    raw = [m_total * w / total for w in widths]
    counts = [max(minimum, int(np.floor(r))) for r in raw]
    while sum(counts) > m_total:
        # shrink the region whose count most exceeds its fair share
        over = [(counts[i] - raw[i], i) for i in range(len(counts)) if counts[i] > minimum]
        counts[max(over)[1]] -= 1
    frac = [(raw[i] - np.floor(raw[i]), i) for i in range(len(counts))]
    for _, i in sorted(frac, reverse=True):
        if sum(counts) == m_total:
            break
        counts[i] += 1
    return counts


class ElectrolyteGrid:
    """Stepper for the through-thickness salt concentration profile."""

    def __init__(self, cell: CellParameters, cfg: DiscretizationConfig):
        self.cell = cell
        self.cfg = cfg
        widths = [cell.thickness_n, cell.thickness_s, cell.thickness_p]
        self.counts = _allocate_cells(cfg.m_electrolyte, widths)
        self.m = sum(self.counts)
        dx = []
        region = []
        for count, width, label in zip(self.counts, widths, ("n", "s", "p")):
            dx.extend([width / count] * count)
            region.extend([label] * count)
        self.dx = np.array(dx)
        self.region = np.array(region)
        self.centers = np.cumsum(self.dx) - 0.5 * self.dx
        self.is_n = self.region == "n"
        self.is_s = self.region == "s"
        self.is_p = self.region == "p"
        # per-cell source coefficients for unit (1 - t_plus) I / (F A): +1/L_n, 0, -1/L_p
        self.source_shape = np.where(
            self.is_n, 1.0 / cell.thickness_n,
            np.where(self.is_p, -1.0 / cell.thickness_p, 0.0),
        )

    # -- porosity ----------------------------------------------------------
    def porosity(self, eps_e_n_current: float | None = None) -> np.ndarray:
        eps_n = self.cell.eps_e_n if eps_e_n_current is None else eps_e_n_current
        return np.where(self.is_n, eps_n,
                        np.where(self.is_s, self.cell.eps_e_s, self.cell.eps_e_p))

    # -- state helpers -----------------------------------------------------
    def uniform_profile(self, concentration: float | None = None) -> np.ndarray:
        c0 = self.cell.c_e_init if concentration is None else concentration
        return np.full(self.m, float(c0))

    def boundary_concentrations(self, c: np.ndarray) -> tuple[float, float]:
        """(c_e at the anode collector x=0, c_e at the cathode collector x=L)."""
        return float(c[0]), float(c[-1])

    def region_means(self, c: np.ndarray) -> tuple[float, float, float]:
        return (float(c[self.is_n].mean()), float(c[self.is_s].mean()),
                float(c[self.is_p].mean()))

    def total_salt(self, c: np.ndarray, eps_e_n_current: float | None = None) -> float:
        """Total electrolyte lithium per unit plate area, mol/m^2."""
        return float(np.sum(self.porosity(eps_e_n_current) * c * self.dx))

    # -- stepping ----------------------------------------------------------
    def _face_conductances(self, c: np.ndarray, temperature: float,
                           eps: np.ndarray) -> np.ndarray:
        """g_{i+1/2} such that face flux = g * (c_{i+1} - c_i), length m-1."""
        d_eff = electrolyte_diffusivity(c, temperature) * bruggeman(eps)
        half = 0.5 * self.dx
        return 1.0 / (half[:-1] / d_eff[:-1] + half[1:] / d_eff[1:])

    def step(self, c: np.ndarray, current: float, temperature: float,
             dt: float | None = None, eps_e_n_current: float | None = None,
             integrator: str | None = None) -> np.ndarray:
        dt = self.cfg.dt if dt is None else dt
        integrator = self.cfg.integrator if integrator is None else integrator
        eps = self.porosity(eps_e_n_current)
        g = self._face_conductances(c, temperature, eps)
        source = ((1.0 - self.cell.t_plus) * current
                  / (self.cell.faraday * self.cell.area)) * self.source_shape
        vol = eps * self.dx  # storage coefficient per cell

        if integrator == "explicit":
            flux_div = np.zeros_like(c)
            f = g * (c[1:] - c[:-1])          # face fluxes, positive toward x+
            flux_div[:-1] += f
            flux_div[1:] -= f
            c_next = c + dt * (flux_div + source * self.dx) / vol
        else:
            # (diag(vol) - dt*L) c_next = vol*c + dt*dx*source, L tridiagonal
            n = self.m
            lower = np.zeros(n)
            upper = np.zeros(n)
            diag = vol.copy()
            diag[:-1] += dt * g
            diag[1:] += dt * g
            upper[1:] = -dt * g
            lower[:-1] = -dt * g
            ab = np.vstack([upper, diag, lower])
            rhs = vol * c + dt * self.dx * source
            c_next = solve_banded((1, 1), ab, rhs)

        if not np.all(np.isfinite(c_next)):
            raise IntegrationError(f"non-finite electrolyte concentration (dt={dt})")
        return c_next


def electrolyte_resistance(cell: CellParameters, c_n: float, c_s: float, c_p: float,
                           temperature: float,
                           eps_e_n_current: float | None = None) -> float:
    """Lumped electrolyte ohmic resistance, ohm.

    R_e = (1/2A) [ L_n/kappa_n^eff + 2 L_s/kappa_s^eff + L_p/kappa_p^eff ]

    with kappa^eff = kappa(c_e, T) * eps^1.5 evaluated at each region's mean
    concentration.  Passing `eps_e_n_current` substitutes the film-aged anode
    porosity (the only porosity that ages).
    """
    eps_n = cell.eps_e_n if eps_e_n_current is None else eps_e_n_current
    if eps_n <= 0.0:
        raise IntegrationError(f"non-positive anode porosity {eps_n}")
    k_n = electrolyte_conductivity(c_n, temperature) * bruggeman(eps_n)
    k_s = electrolyte_conductivity(c_s, temperature) * bruggeman(cell.eps_e_s)
    k_p = electrolyte_conductivity(c_p, temperature) * bruggeman(cell.eps_e_p)
    return (cell.thickness_n / k_n + 2.0 * cell.thickness_s / k_s
            + cell.thickness_p / k_p) / (2.0 * cell.area)

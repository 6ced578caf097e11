"""Radial finite-difference diffusion in a spherical active-material particle.

The particle is discretized at N equispaced interior-to-surface nodes
r_i = i*dr, i = 1..N, dr = R/N.  The diffusion operator (per unit
diffusivity) is the tridiagonal stencil

    row 1:        [-2, 2, 0, ...] / dr^2          (symmetry at the center)
    row i:        [1 - 1/i, -2, 1 + 1/i] / dr^2   (interior)
    row N:        [..., 2, -2] / dr^2             (surface, flux eliminated)

and the surface boundary flux enters through an input vector whose only
nonzero entry is at the surface node, scaled by (N+1)/N.  The applied
current divides by the electrode's total interfacial area, so the input
coefficient is  sign * 2 (N+1) / (dr N F a_s A L)  and the diffusivity
cancels out of the input path entirely.

Sign convention: positive current = discharge.  Discharge inserts lithium
into the cathode (positive input sign) and extracts it from the anode
(negative input sign).

The stencil is not in flux form, but it admits an exact discrete mole
balance: the weight vector

    w = [1^2, 2^2, ..., (N-1)^2, N(N-1)/2]

is a left null vector of the stencil, so sum(w * c) changes only through
the boundary input.  With these weights the volume-averaged concentration
obeys  d c_avg / dt = ±I / (F eps A L)  to machine precision, and is
exactly conserved at zero current.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import IntegrationError
from .params import CellParameters, DiscretizationConfig


def solid_stencil(n: int) -> np.ndarray:
    """Bare diffusion stencil (multiply by D/dr^2 for the rate matrix)."""
    if n < 2:
        raise ValueError(f"need at least 2 radial nodes, got {n}")
    a = np.zeros((n, n))
    a[0, 0], a[0, 1] = -2.0, 2.0
    for i in range(2, n):          # node index i, row i-1
        a[i - 1, i - 2] = 1.0 - 1.0 / i
        a[i - 1, i - 1] = -2.0
        a[i - 1, i] = 1.0 + 1.0 / i
    a[n - 1, n - 2], a[n - 1, n - 1] = 2.0, -2.0
    return a


def radial_weights(n: int) -> np.ndarray:
    """Volume quadrature weights (normalized) conserved by the stencil.

    Left null vector of `solid_stencil(n)`: interior nodes carry their
    shell volume ~ r_i^2, the surface node a trapezoid-like half share.
    """
    w = np.arange(1, n + 1, dtype=float) ** 2
    w[-1] = n * (n - 1) / 2.0
    return w / w.sum()


def build_solid_system(cell: CellParameters, cfg: DiscretizationConfig,
                       electrode: str) -> tuple[np.ndarray, np.ndarray, float]:
    """Return (stencil/dr^2 without diffusivity, input vector, dr).

    The rate matrix at temperature T is D_s(T) * stencil; the input vector
    already carries its electrode sign and does not depend on diffusivity.
    """
    n = cfg.n_solid
    if electrode == "cathode":
        radius, a_s, thick, sign = (cell.particle_radius_p, cell.a_s_p,
                                    cell.thickness_p, +1.0)
    elif electrode == "anode":
        radius, a_s, thick, sign = (cell.particle_radius_n, cell.a_s_n,
                                    cell.thickness_n, -1.0)
    else:
        raise ValueError(f"electrode must be 'anode' or 'cathode', got {electrode!r}")
    dr = radius / n
    a_bar = solid_stencil(n) / dr ** 2
    b = np.zeros(n)
    b[-1] = sign * 2.0 * (n + 1) / (n * dr * cell.faraday * a_s * cell.area * thick)
    return a_bar, b, dr


class SolidParticle:
    """Time stepper for one electrode's representative particle."""

    def __init__(self, cell: CellParameters, cfg: DiscretizationConfig, electrode: str):
        self.electrode = electrode
        self.cfg = cfg
        self.a_bar, self.b, self.dr = build_solid_system(cell, cfg, electrode)
        self.weights = radial_weights(cfg.n_solid)
        self.c_max = cell.c_s_max_p if electrode == "cathode" else cell.c_s_max_n
        self._banded_cache: tuple[float, float, np.ndarray] | None = None

    def _banded_lhs(self, dt: float, diffusivity: float) -> np.ndarray:
        """(I - dt*D*A) in solve_banded's (1,1) layout, cached per (dt, D)."""
        cached = self._banded_cache
        if cached is not None and cached[0] == dt and cached[1] == diffusivity:
            return cached[2]
        n = self.a_bar.shape[0]
        m = np.eye(n) - dt * diffusivity * self.a_bar
        ab = np.zeros((3, n))
        ab[0, 1:] = np.diag(m, 1)
        ab[1, :] = np.diag(m)
        ab[2, :-1] = np.diag(m, -1)
        self._banded_cache = (dt, diffusivity, ab)
        return ab

    def step(self, c: np.ndarray, current: float, diffusivity: float,
             dt: float | None = None, integrator: str | None = None,
             source: np.ndarray | None = None) -> np.ndarray:
        """Advance the radial profile one step under applied current (A).

        `source` is an optional extra rate term (mol/m^3/s per node), held
        constant over the step; estimation-layer correction injections
        enter through it.
        """
        dt = self.cfg.dt if dt is None else dt
        integrator = self.cfg.integrator if integrator is None else integrator
        forcing = self.b * current if source is None else self.b * current + source
        if integrator == "explicit":
            c_next = c + dt * (diffusivity * (self.a_bar @ c) + forcing)
        else:
            rhs = c + dt * forcing
            c_next = solve_banded((1, 1), self._banded_lhs(dt, diffusivity), rhs)
        if not np.all(np.isfinite(c_next)):
            raise IntegrationError(
                f"non-finite {self.electrode} concentration after step (dt={dt})"
            )
        return c_next

    def bulk_concentration(self, c: np.ndarray) -> float:
        """Volume-averaged concentration under the conserved quadrature."""
        return float(self.weights @ c)

    def surface_concentration(self, c: np.ndarray) -> float:
        return float(c[-1])

    def uniform_profile(self, concentration: float) -> np.ndarray:
        return np.full(self.a_bar.shape[0], float(concentration))

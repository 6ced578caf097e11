"""Open-circuit potential tables with entropic temperature correction.

Each electrode ships as a three-column text table (stoichiometry, potential
at the reference temperature, entropic coefficient dU/dT).  Interpolation is
shape-preserving (monotone cubic), so a monotone table cannot acquire
spurious wiggles between grid points:

    U(theta, T) = U(theta, T_ref) + dU/dT(theta) * (T - T_ref)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DataFormatError, DomainError


@dataclass
class OcpTable:
    """One electrode's open-circuit potential data and interpolants."""

    theta: np.ndarray      # stoichiometry grid, strictly increasing, within [0, 1]
    potential: np.ndarray  # V at t_ref
    dudt: np.ndarray       # V/K entropic coefficient
    name: str = ""

    _u_interp: PchipInterpolator = field(init=False, repr=False)
    _dudt_interp: PchipInterpolator = field(init=False, repr=False)
    _du_dtheta: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.potential = np.asarray(self.potential, dtype=float)
        self.dudt = np.asarray(self.dudt, dtype=float)
        problems = []
        if self.theta.ndim != 1 or len(self.theta) < 4:
            problems.append("need at least 4 stoichiometry points")
        if self.potential.shape != self.theta.shape or self.dudt.shape != self.theta.shape:
            problems.append("column length mismatch")
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.potential))
                and np.all(np.isfinite(self.dudt))):
            problems.append("non-finite entries")
        if problems:
            raise DataFormatError(f"OCP table {self.name!r}: " + "; ".join(problems))
        if np.any(np.diff(self.theta) <= 0.0):
            bad = int(np.argmax(np.diff(self.theta) <= 0.0))
            raise DataFormatError(
                f"OCP table {self.name!r}: stoichiometry not strictly increasing "
                f"between rows {bad + 1} and {bad + 2}"
            )
        if self.theta[0] < 0.0 or self.theta[-1] > 1.0:
            raise DataFormatError(
                f"OCP table {self.name!r}: stoichiometry outside [0, 1]"
            )
        self._u_interp = PchipInterpolator(self.theta, self.potential, extrapolate=False)
        self._dudt_interp = PchipInterpolator(self.theta, self.dudt, extrapolate=False)
        self._du_dtheta = self._u_interp.derivative()

    def _clip(self, theta):
        return np.clip(theta, self.theta[0], self.theta[-1])

    def potential_at(self, theta, temperature: float, t_ref: float):
        """U(theta, T); stoichiometry clamped to the table range.

        Clamping (rather than extrapolating) keeps observer transients that
        momentarily leave the tabulated window numerically sane; persistent
        saturation is reported by the caller, not here.
        """
        th = np.asarray(theta, dtype=float)
        if np.any(~np.isfinite(th)):
            raise DomainError(f"OCP table {self.name!r}: non-finite stoichiometry query")
        th = self._clip(th)
        u = self._u_interp(th) + self._dudt_interp(th) * (temperature - t_ref)
        return u if u.shape else float(u)

    def slope_at(self, theta):
        """dU/dtheta of the reference-temperature curve (V per unit stoichiometry)."""
        th = self._clip(np.asarray(theta, dtype=float))
        s = self._du_dtheta(th)
        return s if s.shape else float(s)

    def slope_band(self, theta_lo: float, theta_hi: float, samples: int = 2001):
        """(min |dU/dtheta|, max |dU/dtheta|) over a window; checks strict decrease.

        Raises DomainError if the curve is not strictly decreasing anywhere in
        the window, since the observer output maps assume a sign-definite slope.
        """
        grid = np.linspace(theta_lo, theta_hi, samples)
        slopes = self._du_dtheta(self._clip(grid))
        if np.any(slopes >= 0.0):
            worst = grid[int(np.argmax(slopes))]
            raise DomainError(
                f"OCP table {self.name!r}: potential not strictly decreasing at "
                f"theta = {worst:.4f} (slope {float(np.max(slopes)):.3e} V)"
            )
        mags = np.abs(slopes)
        return float(mags.min()), float(mags.max())


def load_ocp_table(path: str | Path, name: str = "") -> OcpTable:
    """Load a three-column (theta, U, dU/dT) whitespace-delimited table."""
    path = Path(path)
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except OSError as exc:
        raise DataFormatError(f"cannot read OCP table {path}: {exc}") from exc
    except ValueError as exc:
        raise DataFormatError(f"malformed OCP table {path}: {exc}") from exc
    if data.shape[1] != 3:
        raise DataFormatError(
            f"OCP table {path}: expected 3 columns (theta, U, dUdT), got {data.shape[1]}"
        )
    return OcpTable(theta=data[:, 0], potential=data[:, 1], dudt=data[:, 2],
                    name=name or path.stem)


def reference_ocp_paths() -> tuple[Path, Path]:
    data_dir = Path(__file__).parent / "data"
    return data_dir / "ocp_anode_graphite.dat", data_dir / "ocp_cathode_nmc.dat"


def load_reference_ocps() -> tuple[OcpTable, OcpTable]:
    """(anode, cathode) tables shipped with the package."""
    anode_path, cathode_path = reference_ocp_paths()
    return load_ocp_table(anode_path, "anode"), load_ocp_table(cathode_path, "cathode")

"""Cell, SEI-film and discretization parameter structures plus file loaders.

The canonical parameter file format is plain ``key = value`` text with
``#`` comments carrying units.  The loader validates every structural
invariant and reports *all* violations at once so a file can be repaired
in a single pass.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataFormatError, ParameterValidationError
from .transport import arrhenius_scale

FARADAY = 96485.33212       # C/mol
GAS_CONSTANT = 8.314462618  # J/(mol K)


@dataclass
class CellParameters:
    """Fresh-cell electrochemical and geometric parameters (SI units)."""

    area: float                 # m^2, current-collector plate area
    thickness_n: float          # m, anode coating thickness
    thickness_s: float          # m, separator thickness
    thickness_p: float          # m, cathode coating thickness
    particle_radius_n: float    # m
    particle_radius_p: float    # m
    eps_n: float                # anode active-material volume fraction
    eps_p: float                # cathode active-material volume fraction
    eps_e_n: float              # anode porosity at beginning of life
    eps_e_s: float              # separator porosity
    eps_e_p: float              # cathode porosity
    eps_n_f: float              # anode filler volume fraction
    eps_p_f: float              # cathode filler volume fraction
    c_s_max_n: float            # mol/m^3, anode saturation concentration
    c_s_max_p: float            # mol/m^3, cathode saturation concentration
    d_s_ref_n: float            # m^2/s, anode solid diffusivity at t_ref
    d_s_ref_p: float            # m^2/s, cathode solid diffusivity at t_ref
    ea_d_n: float               # J/mol, activation energy of d_s_n
    ea_d_p: float               # J/mol
    k_ref_n: float              # m^2.5/(mol^0.5 s), anode rate constant at t_ref
    k_ref_p: float              # m^2.5/(mol^0.5 s)
    ea_k_n: float               # J/mol
    ea_k_p: float               # J/mol
    c_e_init: float             # mol/m^3, initial/average salt concentration
    t_plus: float               # cation transference number
    r_lump: float               # ohm, lumped ohmic resistance (collectors, tabs)
    t_ref: float                # K, reference temperature of the Arrhenius laws
    theta_n_0: float            # anode stoichiometry at 0 % SOC
    theta_n_100: float          # anode stoichiometry at 100 % SOC
    theta_p_0: float            # cathode stoichiometry at 0 % SOC
    theta_p_100: float          # cathode stoichiometry at 100 % SOC
    v_min: float = 3.0          # V, lower operating cutoff
    v_max: float = 3.95         # V, upper operating cutoff
    faraday: float = FARADAY
    gas_constant: float = GAS_CONSTANT

    def __post_init__(self):
        violations = self.validate()
        if violations:
            raise ParameterValidationError(violations)

    def validate(self) -> list[str]:
        """Return all invariant violations (empty list when valid)."""
        v: list[str] = []
        positive = [
            "area", "thickness_n", "thickness_s", "thickness_p",
            "particle_radius_n", "particle_radius_p",
            "c_s_max_n", "c_s_max_p", "d_s_ref_n", "d_s_ref_p",
            "k_ref_n", "k_ref_p", "c_e_init", "t_ref",
            "faraday", "gas_constant",
        ]
        for name in positive:
            if not getattr(self, name) > 0.0:
                v.append(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("ea_d_n", "ea_d_p", "ea_k_n", "ea_k_p", "r_lump"):
            if getattr(self, name) < 0.0:
                v.append(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("eps_n", "eps_p", "eps_e_n", "eps_e_s", "eps_e_p"):
            if not 0.0 < getattr(self, name) < 1.0:
                v.append(f"{name} must lie in (0, 1), got {getattr(self, name)!r}")
        for name in ("eps_n_f", "eps_p_f"):
            if not 0.0 <= getattr(self, name) < 1.0:
                v.append(f"{name} must lie in [0, 1), got {getattr(self, name)!r}")
        if not 0.0 < self.t_plus < 1.0:
            v.append(f"t_plus must lie in (0, 1), got {self.t_plus!r}")
        # volume budgets: solid + pore + filler cannot exceed unity
        if self.eps_n + self.eps_e_n + self.eps_n_f > 1.0 + 1e-9:
            v.append(
                "anode volume fractions exceed 1: "
                f"eps_n + eps_e_n + eps_n_f = {self.eps_n + self.eps_e_n + self.eps_n_f:.6f}"
            )
        if self.eps_p + self.eps_e_p + self.eps_p_f > 1.0 + 1e-9:
            v.append(
                "cathode volume fractions exceed 1: "
                f"eps_p + eps_e_p + eps_p_f = {self.eps_p + self.eps_e_p + self.eps_p_f:.6f}"
            )
        for name in ("theta_n_0", "theta_n_100", "theta_p_0", "theta_p_100"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                v.append(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if not self.theta_n_100 > self.theta_n_0:
            v.append("anode stoichiometry window must satisfy theta_n_100 > theta_n_0 "
                     f"(got {self.theta_n_100!r} <= {self.theta_n_0!r})")
        if not self.theta_p_100 < self.theta_p_0:
            v.append("cathode stoichiometry window must satisfy theta_p_100 < theta_p_0 "
                     f"(got {self.theta_p_100!r} >= {self.theta_p_0!r})")
        if not self.v_min < self.v_max:
            v.append(f"v_min must be < v_max, got {self.v_min!r} >= {self.v_max!r}")
        return v

    # --- derived geometry -------------------------------------------------
    @property
    def a_s_n(self) -> float:
        """Anode specific interfacial area 3*eps_n/R_n, 1/m."""
        return 3.0 * self.eps_n / self.particle_radius_n

    @property
    def a_s_p(self) -> float:
        """Cathode specific interfacial area 3*eps_p/R_p, 1/m."""
        return 3.0 * self.eps_p / self.particle_radius_p

    # --- temperature-dependent properties ----------------------------------
    def d_s_n(self, temperature: float) -> float:
        return arrhenius_scale(self.d_s_ref_n, self.ea_d_n, temperature,
                               self.t_ref, self.gas_constant)

    def d_s_p(self, temperature: float) -> float:
        return arrhenius_scale(self.d_s_ref_p, self.ea_d_p, temperature,
                               self.t_ref, self.gas_constant)

    def k_n(self, temperature: float) -> float:
        return arrhenius_scale(self.k_ref_n, self.ea_k_n, temperature,
                               self.t_ref, self.gas_constant)

    def k_p(self, temperature: float) -> float:
        return arrhenius_scale(self.k_ref_p, self.ea_k_p, temperature,
                               self.t_ref, self.gas_constant)

    # --- capacity bookkeeping ----------------------------------------------
    def capacity_nominal(self, area: float | None = None) -> float:
        """Cyclable charge of the cathode stoichiometry window, Ah.

        Q0 = F * L_p * eps_p * c_s_max_p * (theta_p_0 - theta_p_100) * A / 3600
        """
        a = self.area if area is None else area
        return (self.faraday * self.thickness_p * self.eps_p * self.c_s_max_p
                * (self.theta_p_0 - self.theta_p_100) * a / 3600.0)

    def capacity_anode_window(self) -> float:
        """Cyclable charge of the anode stoichiometry window, Ah (balance check)."""
        return (self.faraday * self.thickness_n * self.eps_n * self.c_s_max_n
                * (self.theta_n_100 - self.theta_n_0) * self.area / 3600.0)

    def soc_to_theta(self, soc: float, electrode: str) -> float:
        """Map bulk SOC in [0, 1] onto the electrode stoichiometry window."""
        if electrode == "anode":
            return self.theta_n_0 + soc * (self.theta_n_100 - self.theta_n_0)
        if electrode == "cathode":
            return self.theta_p_0 + soc * (self.theta_p_100 - self.theta_p_0)
        raise ValueError(f"electrode must be 'anode' or 'cathode', got {electrode!r}")

    def theta_to_soc(self, theta: float, electrode: str) -> float:
        if electrode == "anode":
            return (theta - self.theta_n_0) / (self.theta_n_100 - self.theta_n_0)
        if electrode == "cathode":
            return (self.theta_p_0 - theta) / (self.theta_p_0 - self.theta_p_100)
        raise ValueError(f"electrode must be 'anode' or 'cathode', got {electrode!r}")


@dataclass
class SeiParameters:
    """Anode-side film growth constants and nominal cell capacity."""

    m_sei: float      # kg/mol, molar mass of the film compound
    rho_sei: float    # kg/m^3, film density
    kappa_sei: float  # S/m, film ionic conductivity
    l_sei_0: float    # m, film thickness at beginning of life
    q_0: float        # Ah, nominal (beginning-of-life) capacity

    def __post_init__(self):
        violations = self.validate()
        if violations:
            raise ParameterValidationError(violations)

    def validate(self) -> list[str]:
        v: list[str] = []
        for name in ("m_sei", "rho_sei", "kappa_sei", "q_0"):
            if not getattr(self, name) > 0.0:
                v.append(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.l_sei_0 < 0.0:
            v.append(f"l_sei_0 must be >= 0, got {self.l_sei_0!r}")
        return v

    def theta_2_nominal(self, cell: CellParameters) -> float:
        """Film resistance growth slope per Ah of capacity lost, ohm/Ah.

        theta_2 = 3600 * M_sei / (2 F A^2 rho_sei a_s_n^2 L_n^2 kappa_sei)
        """
        return (3600.0 * self.m_sei
                / (2.0 * cell.faraday * cell.area ** 2 * self.rho_sei
                   * cell.a_s_n ** 2 * cell.thickness_n ** 2 * self.kappa_sei))


@dataclass
class DiscretizationConfig:
    """Grid and integrator choices for the coupled solid/electrolyte solver."""

    n_solid: int = 10             # radial shells per particle
    m_electrolyte: int = 30       # through-thickness cells across n/s/p
    dt: float = 1.0               # s, integration step
    integrator: str = "implicit"  # "implicit" (default) or "explicit"

    def __post_init__(self):
        violations = self.validate()
        if violations:
            raise ParameterValidationError(violations)

    def validate(self) -> list[str]:
        v: list[str] = []
        if self.n_solid < 4:
            v.append(f"n_solid must be >= 4, got {self.n_solid!r}")
        if self.m_electrolyte < 6:
            v.append(f"m_electrolyte must be >= 6, got {self.m_electrolyte!r}")
        if not self.dt > 0.0:
            v.append(f"dt must be > 0, got {self.dt!r}")
        if self.integrator not in ("implicit", "explicit"):
            v.append(f"integrator must be 'implicit' or 'explicit', got {self.integrator!r}")
        return v

    def check_explicit_stability(self, cell: CellParameters, temperature: float) -> None:
        """Reject explicit stepping when dt exceeds the diffusive stability bound.

        Bound: dt <= 0.4 * dr^2 / D_s for each electrode at the given T.
        """
        if self.integrator != "explicit":
            return
        problems = []
        for label, radius, d in (
            ("anode", cell.particle_radius_n, cell.d_s_n(temperature)),
            ("cathode", cell.particle_radius_p, cell.d_s_p(temperature)),
        ):
            dr = radius / self.n_solid
            dt_max = 0.4 * dr * dr / d
            if self.dt > dt_max:
                problems.append(
                    f"{label}: dt = {self.dt} s exceeds 0.4*dr^2/D_s = {dt_max:.3e} s "
                    f"(dr = {dr:.3e} m, D_s = {d:.3e} m^2/s)"
                )
        if problems:
            raise ParameterValidationError(
                [f"explicit integrator unstable; reduce dt or use implicit: {p}"
                 for p in problems]
            )


# --------------------------------------------------------------------------
# key = value file handling
# --------------------------------------------------------------------------

def _parse_kv_file(path: str | Path) -> dict[str, float]:
    """Parse ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read parameter file {path}: {exc}") from exc
    values: dict[str, float] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key:
            errors.append(f"{path}:{lineno}: empty key")
            continue
        if key in values:
            errors.append(f"{path}:{lineno}: duplicate key {key!r}")
            continue
        try:
            values[key] = float(val)
        except ValueError:
            errors.append(f"{path}:{lineno}: value for {key!r} is not a number: {val!r}")
    if errors:
        raise DataFormatError("\n".join(errors))
    return values


_SEI_KEYS = {"m_sei", "rho_sei", "kappa_sei", "l_sei_0", "q_0"}
_CELL_OPTIONAL = {"v_min", "v_max", "faraday", "gas_constant"}


def load_parameters(path: str | Path) -> tuple[CellParameters, SeiParameters]:
    """Load the combined cell + film parameter file.

    Collects every violation (unknown keys, missing keys, invariant
    failures, capacity/stoichiometry inconsistency) into a single
    ParameterValidationError.
    """
    values = _parse_kv_file(path)
    cell_fields = {f.name for f in dataclasses.fields(CellParameters)}
    required_cell = cell_fields - _CELL_OPTIONAL

    violations: list[str] = []
    unknown = set(values) - cell_fields - _SEI_KEYS
    for key in sorted(unknown):
        violations.append(f"unknown key {key!r}")
    for key in sorted(required_cell - set(values)):
        violations.append(f"missing required key {key!r}")
    for key in sorted(_SEI_KEYS - set(values)):
        violations.append(f"missing required key {key!r}")
    if violations:
        raise ParameterValidationError(violations)

    cell_kwargs = {k: v for k, v in values.items() if k in cell_fields}
    sei_kwargs = {k: v for k, v in values.items() if k in _SEI_KEYS}

    try:
        cell = CellParameters(**cell_kwargs)
    except ParameterValidationError as exc:
        violations.extend(exc.violations)
        cell = None
    try:
        sei = SeiParameters(**sei_kwargs)
    except ParameterValidationError as exc:
        violations.extend(exc.violations)
        sei = None

    if cell is not None and sei is not None:
        q_window = cell.capacity_nominal()
        if not math.isclose(sei.q_0, q_window, rel_tol=1e-3):
            violations.append(
                f"q_0 = {sei.q_0} Ah disagrees with the cathode stoichiometry window "
                f"capacity {q_window:.6f} Ah (rel tol 1e-3)"
            )
        # stored anode porosity must be the volume-budget remainder at the
        # initial film thickness so that a cell aged back to beginning of
        # life is indistinguishable from a fresh cell
        eps_bol = (1.0 - cell.eps_n * (1.0 + 3.0 * sei.l_sei_0 / cell.particle_radius_n)
                   - cell.eps_n_f)
        if abs(cell.eps_e_n - eps_bol) > 1e-6:
            violations.append(
                f"eps_e_n = {cell.eps_e_n} is inconsistent with the anode volume "
                f"budget at l_sei_0 (expected {eps_bol:.6f})"
            )
    if violations:
        raise ParameterValidationError(violations)
    return cell, sei


def reference_parameter_path() -> Path:
    """Path of the canonical reference-cell parameter file shipped with the package."""
    return Path(__file__).parent / "data" / "cell_nmc_2ah.params"


def load_reference_parameters() -> tuple[CellParameters, SeiParameters]:
    return load_parameters(reference_parameter_path())

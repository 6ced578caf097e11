"""Output-sensitivity analysis and parameter subset selection.

Given a drive cycle and the full-order cell model, this module measures how
strongly each physical parameter moves the observable outputs (terminal
voltage and the two electrode bulk SOC traces), how collinear those effects
are, and which subset of parameters is therefore worth fitting:

1. `sensitivity_matrix` — finite-difference partials of every output sample
   with respect to each free parameter, normalized to parameter-relative /
   output-scaled units so columns are comparable across units.
2. `multi_vs_single_output_norms` — column-norm rankings under the voltage
   rows alone versus all output rows.
3. `correlation_matrix` — cosine similarity between columns (collinear
   columns cannot be told apart by a fit).
4. `subset_select` — greedy descent through the ranking keeping only
   parameters that are sensitive enough and sufficiently uncorrelated with
   everything already kept.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..cycles import DriveCycle
from ..errors import DomainError, EspmkitError, ParameterValidationError
from ..ocp import OcpTable
from ..params import CellParameters, DiscretizationConfig, SeiParameters
from ..plant import initial_state, simulate

# The full set of geometric/transport/kinetic quantities treated as
# candidates for identification from cycling data.  Names are
# CellParameters field names; everything not listed here (activation
# energies, transference number, stoichiometry windows, voltage limits)
# stays at its nominal value during identification.
IDENT_PARAMETER_NAMES: tuple[str, ...] = (
    "c_s_max_n", "c_s_max_p",
    "d_s_ref_n", "d_s_ref_p",
    "particle_radius_n", "particle_radius_p",
    "area",
    "thickness_n", "thickness_p",
    "eps_n", "eps_p",
    "k_ref_n", "k_ref_p",
    "r_lump",
    "thickness_s",
    "eps_e_s",
    "eps_n_f", "eps_p_f",
)

# Output channels, in row-block order, with the scale dividing each partial
# so voltage (volts) and SOC (dimensionless) rows are commensurate.
OUTPUT_NAMES: tuple[str, ...] = ("voltage", "soc_p", "soc_n")
OUTPUT_SCALES: dict[str, float] = {"voltage": 1.0, "soc_p": 1.0, "soc_n": 1.0}

_FRACTION_PARAMS = ("eps_n", "eps_p", "eps_n_f", "eps_p_f", "eps_e_s")


@dataclass(eq=False)
class ParameterVector:
    """Named parameter values with per-entry bounds and a free/fixed mask.

    Fixed entries hold their nominal values through any fit; free entries
    are the optimizer's decision variables.  Every name must be a
    CellParameters field so a vector can always be turned into a candidate
    cell.
    """

    names: tuple[str, ...]
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    free: np.ndarray          # bool mask, True = optimizer may move it

    def __post_init__(self):
        self.names = tuple(self.names)
        self.values = np.asarray(self.values, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.free = np.asarray(self.free, dtype=bool)
        problems: list[str] = []
        n = len(self.names)
        if len(set(self.names)) != n:
            problems.append("parameter names must be unique")
        cell_fields = {f.name for f in dataclasses.fields(CellParameters)}
        for name in self.names:
            if name not in cell_fields:
                problems.append(f"unknown parameter name {name!r}")
        for label, arr in (("values", self.values), ("lower", self.lower),
                           ("upper", self.upper), ("free", self.free)):
            if arr.shape != (n,):
                problems.append(f"{label} must have shape ({n},), got {arr.shape}")
        if not problems:
            if not np.all(np.isfinite(self.lower) & np.isfinite(self.upper)):
                problems.append("bounds must be finite")
            bad = [self.names[i] for i in range(n) if not self.lower[i] < self.upper[i]]
            if bad:
                problems.append(f"lower must be < upper for {bad}")
            out = [self.names[i] for i in range(n)
                   if not self.lower[i] <= self.values[i] <= self.upper[i]]
            if out:
                problems.append(f"values outside bounds for {out}")
        if problems:
            raise ParameterValidationError(problems)

    # -- construction -----------------------------------------------------
    @classmethod
    def reference(cls, cell: CellParameters,
                  names: tuple[str, ...] = IDENT_PARAMETER_NAMES, *,
                  rel_bound: float = 0.5,
                  free_names: tuple[str, ...] | None = None
                  ) -> "ParameterVector":
        """Nominal vector from a cell with symmetric relative bounds.

        Volume-fraction entries get their upper bound clipped below 0.95 so
        a bound-constrained optimizer cannot leave the physical range; the
        electrode volume budget itself is enforced later, at candidate-cell
        construction.
        """
        if not 0.0 < rel_bound < 1.0:
            raise DomainError(f"rel_bound must lie in (0, 1), got {rel_bound}")
        values = np.array([getattr(cell, name) for name in names], dtype=float)
        lower = values * (1.0 - rel_bound)
        upper = values * (1.0 + rel_bound)
        for i, name in enumerate(names):
            if name in _FRACTION_PARAMS:
                upper[i] = min(upper[i], 0.95)
        free = np.ones(len(names), dtype=bool)
        if free_names is not None:
            unknown = set(free_names) - set(names)
            if unknown:
                raise DomainError(f"free_names not in vector: {sorted(unknown)}")
            free = np.array([n in free_names for n in names], dtype=bool)
        return cls(names=tuple(names), values=values, lower=lower,
                   upper=upper, free=free)

    # -- views --------------------------------------------------------------
    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n, f in zip(self.names, self.free) if f)

    @property
    def free_values(self) -> np.ndarray:
        return self.values[self.free].copy()

    @property
    def free_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower[self.free].copy(), self.upper[self.free].copy()

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    # -- derivation ----------------------------------------------------------
    def with_values(self, updates: dict[str, float]) -> "ParameterVector":
        """Copy with the named entries replaced (bounds and mask kept)."""
        unknown = set(updates) - set(self.names)
        if unknown:
            raise DomainError(f"unknown parameter names: {sorted(unknown)}")
        values = self.values.copy()
        for name, val in updates.items():
            values[self.names.index(name)] = float(val)
        return ParameterVector(names=self.names, values=values,
                               lower=self.lower.copy(), upper=self.upper.copy(),
                               free=self.free.copy())

    def replace_free(self, x: np.ndarray) -> "ParameterVector":
        """Copy with the free entries set from a flat optimizer point."""
        x = np.asarray(x, dtype=float)
        if x.shape != (int(self.free.sum()),):
            raise DomainError(
                f"expected {int(self.free.sum())} free values, got shape {x.shape}")
        values = self.values.copy()
        values[self.free] = x
        return ParameterVector(names=self.names, values=values,
                               lower=self.lower.copy(), upper=self.upper.copy(),
                               free=self.free.copy())


def candidate_cell(candidate: ParameterVector, base: CellParameters,
                   sei: SeiParameters) -> CellParameters:
    """Build the cell a candidate vector describes.

    Electrode porosities are not identification parameters: each is the
    volume-budget remainder once active material and filler are set, so
    they are recomputed here (anode: consistent with the surface film at
    its beginning-of-life thickness; cathode: preserving the nominal
    cell's unassigned slack).  Raises ParameterValidationError when the
    candidate violates a structural invariant (e.g. the budget leaves no
    pore space).
    """
    overrides = candidate.as_dict()
    eps_n = overrides.get("eps_n", base.eps_n)
    eps_n_f = overrides.get("eps_n_f", base.eps_n_f)
    r_n = overrides.get("particle_radius_n", base.particle_radius_n)
    overrides["eps_e_n"] = (
        1.0 - eps_n * (1.0 + 3.0 * sei.l_sei_0 / r_n) - eps_n_f)
    slack_p = 1.0 - base.eps_p - base.eps_e_p - base.eps_p_f
    eps_p = overrides.get("eps_p", base.eps_p)
    eps_p_f = overrides.get("eps_p_f", base.eps_p_f)
    overrides["eps_e_p"] = 1.0 - eps_p - eps_p_f - slack_p
    return dataclasses.replace(base, **overrides)


# ---------------------------------------------------------------------------
# sensitivity matrix
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SensitivityMatrix:
    """Stacked normalized output partials, one column per free parameter.

    Rows are grouped in output blocks (`outputs` order), each block holding
    `n_samples` time samples; entry (i, j) is the partial of output sample
    i with respect to parameter j, scaled by the nominal parameter value
    and divided by the output scale.  Columns whose perturbed simulation
    failed are zeroed and listed in `flagged` with the failure reason.
    """

    outputs: tuple[str, ...]
    n_samples: int
    parameter_names: tuple[str, ...]
    values: np.ndarray                      # (len(outputs)*n_samples, n_params)
    scheme: str
    rel_step: float
    flagged: dict[str, str] = field(default_factory=dict)
    column_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        expected = (len(self.outputs) * self.n_samples, len(self.parameter_names))
        if self.values.shape != expected:
            raise DomainError(
                f"sensitivity matrix shape {self.values.shape} does not match "
                f"{len(self.outputs)} outputs x {self.n_samples} samples x "
                f"{len(self.parameter_names)} parameters")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("sensitivity matrix contains non-finite entries")
        self.column_norms = np.linalg.norm(self.values, axis=0)

    def rows_for(self, output: str) -> np.ndarray:
        """The row block of one output channel."""
        if output not in self.outputs:
            raise DomainError(f"unknown output {output!r}; have {self.outputs}")
        k = self.outputs.index(output)
        return self.values[k * self.n_samples:(k + 1) * self.n_samples, :]

    def column(self, name: str) -> np.ndarray:
        if name not in self.parameter_names:
            raise DomainError(f"unknown parameter {name!r}")
        return self.values[:, self.parameter_names.index(name)]


def _stack_outputs(traj, outputs: tuple[str, ...],
                   decimate: int) -> np.ndarray:
    channels = {"voltage": traj.voltages, "soc_p": traj.soc_p,
                "soc_n": traj.soc_n}
    cols = [np.asarray(channels[name][::decimate], dtype=float)
            / OUTPUT_SCALES[name] for name in outputs]
    return np.concatenate(cols)


def sensitivity_matrix(cycle: DriveCycle, candidate: ParameterVector,
                       base_cell: CellParameters, sei: SeiParameters,
                       ocp_anode: OcpTable, ocp_cathode: OcpTable,
                       cfg: DiscretizationConfig, *,
                       scheme: str = "central", rel_step: float = 1e-3,
                       initial_soc: float = 1.0,
                       outputs: tuple[str, ...] = OUTPUT_NAMES,
                       decimate: int = 1) -> SensitivityMatrix:
    """Finite-difference output sensitivities over one drive cycle.

    Only the candidate's free parameters contribute columns.  Each
    perturbed point rebuilds the candidate cell (including the porosity
    budget remainders) and re-simulates the full cycle; voltage limits do
    not stop the run so every column sees the same samples.  A perturbed
    simulation that fails flags its column (zeros, reason recorded) and
    the analysis continues.
    """
    if scheme not in ("central", "forward"):
        raise DomainError(f"scheme must be 'central' or 'forward', got {scheme!r}")
    if not 0.0 < rel_step < 0.1:
        raise DomainError(f"rel_step must lie in (0, 0.1), got {rel_step}")
    if decimate < 1:
        raise DomainError(f"decimate must be >= 1, got {decimate}")
    unknown = set(outputs) - set(OUTPUT_NAMES)
    if unknown:
        raise DomainError(f"unknown outputs {sorted(unknown)}; choose from {OUTPUT_NAMES}")

    def run(vec: ParameterVector) -> np.ndarray:
        cell = candidate_cell(vec, base_cell, sei)
        traj = simulate(cycle, cell, sei, ocp_anode, ocp_cathode, cfg,
                        init=initial_state(cell, sei, cfg, soc=initial_soc),
                        stop_at_voltage_limits=False)
        return _stack_outputs(traj, outputs, decimate)

    y_nominal = run(candidate)   # nominal simulation must succeed
    n_samples = y_nominal.size // len(outputs)

    names = candidate.free_names
    columns = np.zeros((y_nominal.size, len(names)))
    flagged: dict[str, str] = {}
    for j, name in enumerate(names):
        nominal = candidate[name]
        step = rel_step * nominal
        try:
            y_hi = run(candidate.with_values({name: nominal + step}))
            if scheme == "central":
                y_lo = run(candidate.with_values({name: nominal - step}))
                partial = (y_hi - y_lo) / (2.0 * step)
            else:
                partial = (y_hi - y_nominal) / step
        except EspmkitError as exc:
            flagged[name] = str(exc)
            continue
        columns[:, j] = partial * nominal   # parameter-relative normalization

    return SensitivityMatrix(outputs=tuple(outputs), n_samples=n_samples,
                             parameter_names=names, values=columns,
                             scheme=scheme, rel_step=rel_step, flagged=flagged)


# ---------------------------------------------------------------------------
# rankings, correlation, subset selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityRanking:
    """Column norms under all output rows and under voltage rows alone."""

    names: tuple[str, ...]
    multi_norms: np.ndarray
    voltage_norms: np.ndarray

    def norm(self, name: str) -> float:
        return float(self.multi_norms[self.names.index(name)])

    @property
    def ranked_multi(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.multi_norms, kind="stable")
        return [(self.names[i], float(self.multi_norms[i])) for i in order]

    @property
    def ranked_voltage_only(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.voltage_norms, kind="stable")
        return [(self.names[i], float(self.voltage_norms[i])) for i in order]

    def table(self) -> str:
        lines = [f"{'parameter':<20} {'all-output norm':>18} {'voltage-only norm':>18}"]
        for name, norm in self.ranked_multi:
            v = self.voltage_norms[self.names.index(name)]
            lines.append(f"{name:<20} {norm:>18.12g} {v:>18.12g}")
        return "\n".join(lines)


def multi_vs_single_output_norms(s: SensitivityMatrix) -> SensitivityRanking:
    """Column norms with and without the SOC rows.

    Appending rows can only grow a Euclidean norm, so the all-output norm
    dominates the voltage-only norm for every column; the ranking shows
    how much the extra channels help each parameter.
    """
    if "voltage" not in s.outputs:
        raise DomainError("sensitivity matrix has no voltage block")
    voltage_norms = np.linalg.norm(s.rows_for("voltage"), axis=0)
    return SensitivityRanking(names=s.parameter_names,
                              multi_norms=s.column_norms.copy(),
                              voltage_norms=voltage_norms)


@dataclass(frozen=True)
class CorrelationResult:
    """Pairwise cosine similarity between sensitivity columns."""

    names: tuple[str, ...]          # columns actually correlated
    matrix: np.ndarray              # len(names) x len(names)
    excluded: tuple[str, ...]       # zero-norm columns left out
    notes: tuple[str, ...]

    def value(self, a: str, b: str) -> float:
        return float(self.matrix[self.names.index(a), self.names.index(b)])

    def dump(self) -> str:
        width = max((len(n) for n in self.names), default=4)
        head = " " * (width + 1) + " ".join(f"{n:>{width}}" for n in self.names)
        lines = [head]
        for i, row_name in enumerate(self.names):
            row = " ".join(f"{self.matrix[i, j]:>{width}.12g}"
                           for j in range(len(self.names)))
            lines.append(f"{row_name:>{width}} {row}")
        lines += [f"excluded (zero-norm): {name}" for name in self.excluded]
        return "\n".join(lines)


def correlation_matrix(s: SensitivityMatrix,
                       zero_tol: float = 0.0) -> CorrelationResult:
    """Normalized inner products between all pairs of nonzero columns.

    Columns whose norm is at (or below) `zero_tol` carry no directional
    information and are excluded with a note instead of poisoning the
    matrix with 0/0.
    """
    norms = s.column_norms
    keep = norms > zero_tol
    names = tuple(n for n, k in zip(s.parameter_names, keep) if k)
    excluded = tuple(n for n, k in zip(s.parameter_names, keep) if not k)
    unit = s.values[:, keep] / norms[keep]
    gram = unit.T @ unit
    gram = 0.5 * (gram + gram.T)          # exact symmetry
    gram = np.clip(gram, -1.0, 1.0)       # cosine range despite rounding
    notes = tuple(f"column {n!r} excluded: norm {norms[list(s.parameter_names).index(n)]:.3g} "
                  f"<= {zero_tol:.3g}" for n in excluded)
    return CorrelationResult(names=names, matrix=gram, excluded=excluded,
                             notes=notes)


@dataclass(frozen=True)
class SubsetSelection:
    """Ordered fit-worthy subset plus the reason each candidate fell out."""

    selected: tuple[str, ...]
    exclusions: tuple[tuple[str, str], ...]   # (name, reason)
    sens_threshold: float
    corr_threshold: float

    def log(self) -> str:
        lines = [f"selected ({len(self.selected)}): " + ", ".join(self.selected)]
        lines += [f"excluded {name}: {reason}" for name, reason in self.exclusions]
        return "\n".join(lines)


def subset_select(ranking: SensitivityRanking, corr: CorrelationResult,
                  sens_threshold: float = 0.2,
                  corr_threshold: float = 0.8) -> SubsetSelection:
    """Greedy selection down the all-output ranking.

    A candidate enters the subset iff its column norm exceeds
    `sens_threshold` and the magnitude of its correlation with every
    already-selected member stays below `corr_threshold`; everything else
    is logged with the blocking reason.
    """
    if sens_threshold < 0.0:
        raise DomainError(f"sens_threshold must be >= 0, got {sens_threshold}")
    if not 0.0 < corr_threshold <= 1.0:
        raise DomainError(f"corr_threshold must lie in (0, 1], got {corr_threshold}")
    selected: list[str] = []
    exclusions: list[tuple[str, str]] = []
    for name, norm in ranking.ranked_multi:
        if norm <= sens_threshold:
            exclusions.append(
                (name, f"norm {norm:.6g} <= threshold {sens_threshold:g}"))
            continue
        if name not in corr.names:
            exclusions.append((name, "zero-norm column excluded from correlation"))
            continue
        blocker = None
        for kept in selected:
            c = corr.value(name, kept)
            if abs(c) >= corr_threshold:
                blocker = (kept, c)
                break
        if blocker is not None:
            exclusions.append(
                (name, f"|corr| = {abs(blocker[1]):.6g} >= {corr_threshold:g} "
                       f"with selected {blocker[0]!r}"))
            continue
        selected.append(name)
    return SubsetSelection(selected=tuple(selected), exclusions=tuple(exclusions),
                           sens_threshold=sens_threshold,
                           corr_threshold=corr_threshold)

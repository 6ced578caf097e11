"""Multi-objective parameter fitting against cycling records.

The cost of a candidate parameter set combines three RMS residuals over
one cycle: terminal voltage (J1), cathode bulk SOC (J2), and anode bulk
SOC (J3), the SOC references coming from coulomb counting on the measured
current.  The candidate's nominal capacity is recomputed from its own
geometry (cathode stoichiometry window), so capacity stays consistent
with the parameters being fitted rather than frozen at the data cell's
label value.  Optimization is delegated to a pluggable derivative-free
strategy; the shipped default is seeded differential evolution.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy.optimize import differential_evolution

from ..cycles import DriveCycle
from ..errors import DomainError, EspmkitError, UsageError
from ..ocp import OcpTable
from ..params import CellParameters, DiscretizationConfig, SeiParameters
from ..plant import initial_state, simulate
from .sensitivity import (CorrelationResult, ParameterVector,
                          SensitivityRanking, candidate_cell)

# RMS value assigned to every objective when a candidate cannot be
# simulated; large against any physical residual yet finite, so
# derivative-free optimizers rank infeasible points instead of crashing.
PENALTY_RMS = 1.0e3


def coulomb_count_soc(cycle: DriveCycle, q0: float, soc0: float,
                      method: str = "rectangular") -> np.ndarray:
    """SOC trace by integrating current over capacity (discharge positive).

    soc(t) = soc0 - integral(I)/(3600 q0).  `rectangular` integrates the
    zero-order-hold reconstruction (each sample's current holds until the
    next timestamp), which is exact for stepwise records; `trapezoid`
    integrates the linear interpolation instead.
    """
    if q0 <= 0.0:
        raise DomainError(f"capacity must be > 0 Ah, got {q0}")
    if method not in ("rectangular", "trapezoid"):
        raise DomainError(f"method must be 'rectangular' or 'trapezoid', got {method!r}")
    t, i = cycle.times, cycle.currents
    dt = np.diff(t)
    if method == "rectangular":
        increments = i[:-1] * dt
    else:
        increments = 0.5 * (i[:-1] + i[1:]) * dt
    soc = np.empty_like(t)
    soc[0] = soc0
    soc[1:] = soc0 - np.cumsum(increments) / (3600.0 * q0)
    return soc


@dataclass(frozen=True)
class FitData:
    """One measured cycle plus the SOC reference the J2/J3 terms target."""

    cycle: DriveCycle
    soc_reference: np.ndarray
    initial_soc: float
    q_reference: float        # Ah, capacity used for coulomb counting

    def __post_init__(self):
        if self.cycle.voltages is None:
            raise UsageError("fit data needs a measured voltage column")
        if len(self.soc_reference) != len(self.cycle.times):
            raise UsageError(
                f"soc_reference has {len(self.soc_reference)} samples but the "
                f"cycle has {len(self.cycle.times)}")
        if not 0.0 <= self.initial_soc <= 1.0:
            raise DomainError(f"initial_soc must lie in [0, 1], got {self.initial_soc}")

    @classmethod
    def from_cycle(cls, cycle: DriveCycle, q0: float, soc0: float) -> "FitData":
        """Build the SOC reference by coulomb counting the cycle's current."""
        return cls(cycle=cycle, soc_reference=coulomb_count_soc(cycle, q0, soc0),
                   initial_soc=soc0, q_reference=q0)


@dataclass(frozen=True)
class FitCost:
    """Per-objective RMS residuals of one candidate over one cycle."""

    j1_voltage: float
    j2_soc_cathode: float
    j3_soc_anode: float
    total: float
    feasible: bool
    detail: str = ""

    def __str__(self) -> str:
        tag = "" if self.feasible else "  [infeasible]"
        return (f"J1 = {self.j1_voltage:.12g} V, J2 = {self.j2_soc_cathode:.12g}, "
                f"J3 = {self.j3_soc_anode:.12g}, total = {self.total:.12g}{tag}")


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def fit_cost(candidate: ParameterVector, data: FitData,
             base_cell: CellParameters, sei: SeiParameters,
             ocp_anode: OcpTable, ocp_cathode: OcpTable,
             cfg: DiscretizationConfig,
             weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> FitCost:
    """Evaluate the three residual objectives for one candidate.

    The candidate cell's nominal capacity is recomputed from its own
    cathode stoichiometry window (so the film/capacity channel stays
    self-consistent), and the cell is simulated fresh — the aging state
    holds at nominal, contributing nothing to the outputs.  Any
    construction or simulation failure returns the finite penalty cost
    with `feasible = False` instead of raising.
    """
    w1, w2, w3 = (float(w) for w in weights)
    if min(w1, w2, w3) < 0.0:
        raise DomainError(f"weights must be >= 0, got {weights}")
    try:
        cell = candidate_cell(candidate, base_cell, sei)
        sei_c = dataclasses.replace(sei, q_0=cell.capacity_nominal())
        traj = simulate(data.cycle, cell, sei_c, ocp_anode, ocp_cathode, cfg,
                        init=initial_state(cell, sei_c, cfg, soc=data.initial_soc),
                        stop_at_voltage_limits=False)
        j1 = _rms(traj.voltages - data.cycle.voltages)
        j2 = _rms(traj.soc_p - data.soc_reference)
        j3 = _rms(traj.soc_n - data.soc_reference)
        if not all(np.isfinite((j1, j2, j3))):
            raise DomainError("non-finite residuals")
    except EspmkitError as exc:
        penalty = w1 * PENALTY_RMS + w2 * PENALTY_RMS + w3 * PENALTY_RMS
        return FitCost(j1_voltage=PENALTY_RMS, j2_soc_cathode=PENALTY_RMS,
                       j3_soc_anode=PENALTY_RMS, total=penalty,
                       feasible=False, detail=str(exc))
    return FitCost(j1_voltage=j1, j2_soc_cathode=j2, j3_soc_anode=j3,
                   total=w1 * j1 + w2 * j2 + w3 * j3, feasible=True)


# ---------------------------------------------------------------------------
# pluggable optimizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerResult:
    """What a derivative-free strategy found within its budget."""

    x: np.ndarray
    cost: float
    evaluations: int
    converged: bool
    history: tuple[float, ...]    # best cost after each iteration
    message: str = ""


class Optimizer(Protocol):
    """Bounded derivative-free minimization strategy.

    Implementations must be deterministic given `seed` and must not
    evaluate the objective once `budget` evaluations are spent.
    """

    def __call__(self, objective: Callable[[np.ndarray], float],
                 lower: np.ndarray, upper: np.ndarray, x0: np.ndarray,
                 budget: int, seed: int) -> OptimizerResult: ...


class _BudgetedObjective:
    """Counts evaluations, tracks the best point, enforces the budget."""

    def __init__(self, objective, budget: int):
        self.objective = objective
        self.budget = budget
        self.count = 0
        self.best_x: np.ndarray | None = None
        self.best_cost = np.inf

    def __call__(self, x: np.ndarray) -> float:
        if self.count >= self.budget:
            # budget exhausted: report the worst of what we know so the
            # strategy loses interest without seeing new information
            return self.best_cost if np.isfinite(self.best_cost) else 0.0
        self.count += 1
        cost = float(self.objective(np.asarray(x, dtype=float)))
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_x = np.array(x, dtype=float)
        return cost


@dataclass(frozen=True)
class DifferentialEvolutionOptimizer:
    """Seeded population-based global search (the shipped default)."""

    popsize: int = 12
    tol: float = 1e-10
    mutation: tuple[float, float] = (0.4, 1.0)
    recombination: float = 0.8
    polish: bool = True

    def __call__(self, objective, lower, upper, x0, budget, seed) -> OptimizerResult:
        dim = len(x0)
        wrapped = _BudgetedObjective(objective, budget)
        wrapped(x0)                       # the initial point always competes
        history: list[float] = []
        generations = max(1, budget // (self.popsize * dim))
        result = differential_evolution(
            wrapped, bounds=list(zip(lower, upper)), x0=x0,
            maxiter=generations, popsize=self.popsize, tol=self.tol,
            mutation=self.mutation, recombination=self.recombination,
            seed=seed, polish=self.polish, init="sobol",
            callback=lambda xk, convergence=0.0: history.append(wrapped.best_cost))
        best_x = wrapped.best_x if wrapped.best_x is not None else np.array(x0)
        return OptimizerResult(x=best_x, cost=wrapped.best_cost,
                               evaluations=wrapped.count,
                               converged=bool(result.success),
                               history=tuple(history), message=str(result.message))


@dataclass(frozen=True)
class RandomSearchOptimizer:
    """Uniform seeded sampling inside the bounds; a minimal baseline.

    Exists mainly to demonstrate the strategy interface and to give tests
    a dependency-light deterministic optimizer.
    """

    def __call__(self, objective, lower, upper, x0, budget, seed) -> OptimizerResult:
        rng = np.random.default_rng(seed)
        wrapped = _BudgetedObjective(objective, budget)
        history: list[float] = []
        wrapped(x0)
        history.append(wrapped.best_cost)
        while wrapped.count < budget:
            wrapped(rng.uniform(lower, upper))
            history.append(wrapped.best_cost)
        best_x = wrapped.best_x if wrapped.best_x is not None else np.array(x0)
        return OptimizerResult(x=best_x, cost=wrapped.best_cost,
                               evaluations=wrapped.count, converged=False,
                               history=tuple(history),
                               message="random search never certifies convergence")


# ---------------------------------------------------------------------------
# the fit itself
# ---------------------------------------------------------------------------

@dataclass
class FitReport:
    """Outcome of one fit: best point, residuals, and the search trace."""

    fitted: ParameterVector
    best_cost: FitCost
    evaluations: int
    converged: bool
    history: tuple[float, ...]
    optimizer_name: str
    seed: int
    message: str = ""
    ranking: SensitivityRanking | None = None
    correlation: CorrelationResult | None = None

    def render(self) -> str:
        lines = [
            f"optimizer = {self.optimizer_name} (seed {self.seed})",
            f"evaluations = {self.evaluations}",
            f"converged = {self.converged}",
            f"best cost: {self.best_cost}",
            "fitted parameters:",
        ]
        for name in self.fitted.free_names:
            lines.append(f"  {name} = {self.fitted[name]:.12g}")
        if self.history:
            lines.append("best cost by iteration:")
            lines += [f"  {k}: {c:.12g}" for k, c in enumerate(self.history, start=1)]
        if self.message:
            lines.append(f"note: {self.message}")
        if self.ranking is not None:
            lines += ["", "sensitivity ranking:", self.ranking.table()]
        if self.correlation is not None:
            lines += ["", "column correlations:", self.correlation.dump()]
        return "\n".join(lines)


def fit(data: FitData, initial: ParameterVector,
        base_cell: CellParameters, sei: SeiParameters,
        ocp_anode: OcpTable, ocp_cathode: OcpTable,
        cfg: DiscretizationConfig, *,
        optimizer: Optimizer | None = None, budget: int = 4000,
        seed: int = 20260815,
        weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
        ) -> FitReport:
    """Estimate the free entries of `initial` from one measured cycle.

    Runs the strategy over the free-parameter box and returns the
    best-found vector with the full search trace.  A zero budget performs
    no evaluations and returns the initial vector unconverged, so callers
    can stage pipelines without burning simulations.
    """
    if budget < 0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    if int(initial.free.sum()) == 0:
        raise DomainError("no free parameters to fit")

    def cost_of(vector: ParameterVector) -> FitCost:
        return fit_cost(vector, data, base_cell, sei, ocp_anode, ocp_cathode,
                        cfg, weights)

    if budget == 0:
        return FitReport(fitted=initial, best_cost=cost_of(initial),
                         evaluations=0, converged=False, history=(),
                         optimizer_name="none", seed=seed,
                         message="zero budget: returning the initial vector")

    strategy = DifferentialEvolutionOptimizer() if optimizer is None else optimizer
    lower, upper = initial.free_bounds

    def objective(x: np.ndarray) -> float:
        return cost_of(initial.replace_free(x)).total

    result = strategy(objective, lower, upper, initial.free_values,
                      budget, seed)
    fitted = initial.replace_free(result.x)
    return FitReport(fitted=fitted, best_cost=cost_of(fitted),
                     evaluations=result.evaluations, converged=result.converged,
                     history=result.history,
                     optimizer_name=type(strategy).__name__, seed=seed,
                     message=result.message)

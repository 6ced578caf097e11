"""Coupled solid/electrolyte truth simulator and its reduced companion model.

The full plant advances two radial particle profiles, the through-thickness
salt profile, and (optionally) the film-aged voltage channel, producing the
terminal voltage

    V = [U_p + eta_p] - [U_n + eta_n] + log-polarization
        - I R_e0 - I R_lump - I R_pf(Q)

with R_pf = 0 for a fresh cell.  The reduced companion model keeps only the
two particle states and a constant capacity, freezes the electrolyte at the
fill concentration, and drops the log-polarization term; it is the model
the estimation layer is built on, and the full-vs-reduced voltage gap is
the model uncertainty budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import aging
from .electrolyte import ElectrolyteGrid, electrolyte_resistance
from .errors import DomainError, IntegrationError, PoreClogError
from .ocp import OcpTable
from .params import CellParameters, DiscretizationConfig, SeiParameters
from .solid import SolidParticle, radial_weights
from .voltage import (VoltageBreakdown, overpotential,
                      terminal_voltage as _assemble_voltage)


@dataclass
class EspmState:
    """Full discretized plant state."""

    c_s_n: np.ndarray   # (N,) anode radial concentrations, mol/m^3
    c_s_p: np.ndarray   # (N,) cathode radial concentrations, mol/m^3
    c_e: np.ndarray     # (M,) electrolyte concentrations, mol/m^3
    q: float            # Ah, cell capacity
    l_sei: float        # m, anode film thickness

    def __post_init__(self):
        self.c_s_n = np.asarray(self.c_s_n, dtype=float)
        self.c_s_p = np.asarray(self.c_s_p, dtype=float)
        self.c_e = np.asarray(self.c_e, dtype=float)

    def copy(self) -> "EspmState":
        return EspmState(self.c_s_n.copy(), self.c_s_p.copy(), self.c_e.copy(),
                         self.q, self.l_sei)


def saturation_events(state: EspmState, cell: CellParameters) -> list[str]:
    """Physical-range violations (empty list when the state is admissible)."""
    events = []
    if np.any(state.c_s_n < 0.0) or np.any(state.c_s_n > cell.c_s_max_n):
        events.append(
            f"anode solid concentration outside [0, {cell.c_s_max_n:g}] "
            f"(range [{state.c_s_n.min():.6g}, {state.c_s_n.max():.6g}])")
    if np.any(state.c_s_p < 0.0) or np.any(state.c_s_p > cell.c_s_max_p):
        events.append(
            f"cathode solid concentration outside [0, {cell.c_s_max_p:g}] "
            f"(range [{state.c_s_p.min():.6g}, {state.c_s_p.max():.6g}])")
    if np.any(state.c_e <= 0.0):
        events.append(f"electrolyte concentration non-positive (min {state.c_e.min():.6g})")
    return events


def initial_state(cell: CellParameters, sei: SeiParameters, cfg: DiscretizationConfig,
                  soc: float = 1.0, capacity: float | None = None) -> EspmState:
    """Rested state at the given bulk SOC; `capacity` < nominal builds an aged cell."""
    if not 0.0 <= soc <= 1.0:
        raise DomainError(f"initial SOC must lie in [0, 1], got {soc}")
    q = sei.q_0 if capacity is None else float(capacity)
    l_sei = aging.film_thickness_for_capacity(q, cell, sei)
    grid = ElectrolyteGrid(cell, cfg)
    return EspmState(
        c_s_n=np.full(cfg.n_solid, cell.soc_to_theta(soc, "anode") * cell.c_s_max_n),
        c_s_p=np.full(cfg.n_solid, cell.soc_to_theta(soc, "cathode") * cell.c_s_max_p),
        c_e=grid.uniform_profile(),
        q=q,
        l_sei=l_sei,
    )


def bulk_soc(state: EspmState, cell: CellParameters) -> tuple[float, float]:
    """(anode, cathode) state of charge from volume-averaged stoichiometry.

    Values are NOT clamped; excursions outside [0, 1] are returned as-is so
    callers can flag out-of-window operation.
    """
    w_n = radial_weights(state.c_s_n.size)
    w_p = radial_weights(state.c_s_p.size)
    theta_n = float(w_n @ state.c_s_n) / cell.c_s_max_n
    theta_p = float(w_p @ state.c_s_p) / cell.c_s_max_p
    return (cell.theta_to_soc(theta_n, "anode"), cell.theta_to_soc(theta_p, "cathode"))


def reduced_electrolyte_resistance(cell: CellParameters, sei: SeiParameters,
                                   q: float, temperature: float,
                                   c_e: float | None = None) -> float:
    """Electrolyte resistance as a function of capacity alone, ohm.

    Maps capacity to film thickness to anode porosity and evaluates the
    lumped resistance at a uniform salt concentration (default: the fill
    value).  Capacity above nominal extrapolates the linear film law to a
    thinner film; estimation transients need this headroom, so no
    upper-capacity guard is applied here.
    """
    c = cell.c_e_init if c_e is None else c_e
    slope = (3600.0 * sei.m_sei
             / (2.0 * cell.faraday * sei.rho_sei * cell.a_s_n
                * cell.area * cell.thickness_n))
    l_sei = sei.l_sei_0 + slope * (sei.q_0 - q)
    eps = (1.0 - cell.eps_n * (1.0 + 3.0 * l_sei / cell.particle_radius_n)
           - cell.eps_n_f)
    if eps <= 0.0:
        raise PoreClogError(
            f"anode pores fully clogged at capacity {q:.4f} Ah (porosity {eps:.3e})")
    if eps >= 1.0:
        raise DomainError(
            f"capacity {q:.4f} Ah extrapolates to unphysical porosity {eps:.3f}")
    return electrolyte_resistance(cell, c, c, c, temperature, eps_e_n_current=eps)


class EspmSimulator:
    """Stepper bundling the particle and electrolyte solvers for one cell."""

    def __init__(self, cell: CellParameters, sei: SeiParameters,
                 ocp_anode: OcpTable, ocp_cathode: OcpTable,
                 cfg: DiscretizationConfig, aged: bool = False):
        self.cell = cell
        self.sei = sei
        self.ocp_anode = ocp_anode
        self.ocp_cathode = ocp_cathode
        self.cfg = cfg
        self.aged = aged
        self.particle_n = SolidParticle(cell, cfg, "anode")
        self.particle_p = SolidParticle(cell, cfg, "cathode")
        self.grid = ElectrolyteGrid(cell, cfg)

    def _aged_porosity(self, state: EspmState) -> float | None:
        if not self.aged:
            return None
        return aging.modified_porosity(state.l_sei, self.cell)

    def step(self, state: EspmState, current: float, temperature: float,
             dt: float | None = None) -> EspmState:
        """Advance all transport states one step under constant current."""
        dt = self.cfg.dt if dt is None else dt
        c_s_n = self.particle_n.step(state.c_s_n, current,
                                     self.cell.d_s_n(temperature), dt)
        c_s_p = self.particle_p.step(state.c_s_p, current,
                                     self.cell.d_s_p(temperature), dt)
        c_e = self.grid.step(state.c_e, current, temperature, dt,
                             eps_e_n_current=self._aged_porosity(state))
        return EspmState(c_s_n, c_s_p, c_e, state.q, state.l_sei)

    def voltage(self, state: EspmState, current: float,
                temperature: float) -> VoltageBreakdown:
        bounds = self.grid.boundary_concentrations(state.c_e)
        means = self.grid.region_means(state.c_e)
        r_e = electrolyte_resistance(self.cell, *means, temperature)
        r_pf = 0.0
        if self.aged:
            r_pf = aging.power_fade_resistance(state.q, self.cell, self.sei,
                                               means, temperature)
        return _assemble_voltage(self.cell, self.ocp_anode, self.ocp_cathode,
                                 current, float(state.c_s_n[-1]), float(state.c_s_p[-1]),
                                 bounds, means, temperature, r_e,
                                 film_resistance=r_pf)

    def bulk_soc(self, state: EspmState) -> tuple[float, float]:
        return bulk_soc(state, self.cell)


# --------------------------------------------------------------------------
# spec-shaped functional wrappers
# --------------------------------------------------------------------------

def step_solid(state: EspmState, current: float, temperature: float, dt: float,
               cell: CellParameters, cfg: DiscretizationConfig) -> EspmState:
    """Advance only the two radial particle profiles."""
    out = state.copy()
    out.c_s_n = SolidParticle(cell, cfg, "anode").step(
        state.c_s_n, current, cell.d_s_n(temperature), dt)
    out.c_s_p = SolidParticle(cell, cfg, "cathode").step(
        state.c_s_p, current, cell.d_s_p(temperature), dt)
    return out


def step_electrolyte(state: EspmState, current: float, temperature: float, dt: float,
                     cell: CellParameters, cfg: DiscretizationConfig,
                     aged: bool = False) -> EspmState:
    """Advance only the salt profile."""
    out = state.copy()
    eps = aging.modified_porosity(state.l_sei, cell) if aged else None
    out.c_e = ElectrolyteGrid(cell, cfg).step(state.c_e, current, temperature, dt,
                                              eps_e_n_current=eps)
    return out


def terminal_voltage(state: EspmState, current: float, temperature: float,
                     cell: CellParameters, sei: SeiParameters,
                     ocp_anode: OcpTable, ocp_cathode: OcpTable,
                     cfg: DiscretizationConfig, aged: bool = False) -> VoltageBreakdown:
    sim = EspmSimulator(cell, sei, ocp_anode, ocp_cathode, cfg, aged=aged)
    return sim.voltage(state, current, temperature)


def age_cell(state: EspmState, profile: aging.SideCurrentProfile, duration: float,
             cell: CellParameters, sei: SeiParameters,
             dt: float = 60.0) -> EspmState:
    """Advance only the slow film/capacity channel of a plant state."""
    out = state.copy()
    out.l_sei, out.q = aging.age_film(state.l_sei, state.q, profile, duration,
                                      cell, sei, dt=dt)
    return out


# --------------------------------------------------------------------------
# drive-cycle simulation
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Per-sample record of a simulation run."""

    times: np.ndarray         # s
    currents: np.ndarray      # A
    temperatures: np.ndarray  # K
    voltages: np.ndarray      # V
    soc_n: np.ndarray         # anode bulk SOC
    soc_p: np.ndarray         # cathode bulk SOC
    states: list[EspmState] = field(repr=False)
    stop_reason: str = "completed"
    events: list[tuple[float, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return self.times.size

    def export(self, path) -> None:
        """Write the per-sample scalar columns as delimited text."""
        cols = np.column_stack([
            self.times, self.currents, self.temperatures, self.voltages,
            self.soc_n, self.soc_p,
            np.array([s.q for s in self.states]),
            np.array([s.l_sei for s in self.states]),
        ])
        header = ("# espmkit plant trajectory v1\n"
                  "t_s,current_A,temperature_K,voltage_V,soc_n,soc_p,"
                  "q_Ah,l_sei_m")
        np.savetxt(path, cols, fmt="%.12g", delimiter=",", header=header,
                   comments="")


def simulate(cycle, cell: CellParameters, sei: SeiParameters,
             ocp_anode: OcpTable, ocp_cathode: OcpTable,
             cfg: DiscretizationConfig, init: EspmState | None = None,
             aged: bool = False, stop_at_voltage_limits: bool = True,
             initial_soc: float = 1.0) -> Trajectory:
    """Run the plant over a drive cycle (zero-order-hold current between samples).

    `cycle` provides monotone `times` (s) plus `currents` (A) and
    `temperatures` (K) arrays of equal length.  Voltage is recorded at each
    sample before stepping to the next; sample gaps wider than cfg.dt are
    substepped.  The run stops early at a voltage cutoff or a saturation
    event, with the reason recorded on the trajectory.
    """
    times = np.asarray(cycle.times, dtype=float)
    currents = np.asarray(cycle.currents, dtype=float)
    temperatures = np.asarray(cycle.temperatures, dtype=float)
    if times.size == 0:
        raise DomainError("drive cycle is empty")
    if np.any(np.diff(times) <= 0.0):
        raise DomainError("drive cycle timestamps must be strictly increasing")

    sim = EspmSimulator(cell, sei, ocp_anode, ocp_cathode, cfg, aged=aged)
    state = initial_state(cell, sei, cfg, soc=initial_soc) if init is None else init.copy()

    rows_t, rows_i, rows_T, rows_v, rows_sn, rows_sp = [], [], [], [], [], []
    states: list[EspmState] = []
    events: list[tuple[float, str]] = []
    stop_reason = "completed"

    for k in range(times.size):
        t, i_k, temp_k = float(times[k]), float(currents[k]), float(temperatures[k])
        sat = saturation_events(state, cell)
        if sat:
            events.extend((t, msg) for msg in sat)
            stop_reason = "saturation"
            break
        try:
            v = sim.voltage(state, i_k, temp_k).total
        except (DomainError, IntegrationError) as exc:
            raise IntegrationError(f"voltage evaluation failed at t = {t:g} s: {exc}") from exc
        sn, sp = sim.bulk_soc(state)
        rows_t.append(t)
        rows_i.append(i_k)
        rows_T.append(temp_k)
        rows_v.append(v)
        rows_sn.append(sn)
        rows_sp.append(sp)
        states.append(state.copy())
        if stop_at_voltage_limits and i_k > 0.0 and v <= cell.v_min:
            stop_reason = "v_min"
            events.append((t, f"lower voltage cutoff {cell.v_min} V reached"))
            break
        if stop_at_voltage_limits and i_k < 0.0 and v >= cell.v_max:
            stop_reason = "v_max"
            events.append((t, f"upper voltage cutoff {cell.v_max} V reached"))
            break
        if k == times.size - 1:
            break
        span = float(times[k + 1] - times[k])
        n_sub = max(1, int(np.ceil(span / cfg.dt - 1e-12)))
        h = span / n_sub
        try:
            for _ in range(n_sub):
                state = sim.step(state, i_k, temp_k, h)
        except IntegrationError as exc:
            raise IntegrationError(f"step failed at t = {t:g} s: {exc}") from exc

    return Trajectory(
        times=np.array(rows_t), currents=np.array(rows_i),
        temperatures=np.array(rows_T), voltages=np.array(rows_v),
        soc_n=np.array(rows_sn), soc_p=np.array(rows_sp),
        states=states, stop_reason=stop_reason, events=events,
    )


# --------------------------------------------------------------------------
# reduced companion model (uniform electrolyte, constant capacity)
# --------------------------------------------------------------------------

class ReducedSpm:
    """Two-particle model with frozen electrolyte, the estimation-layer plant.

    Output voltage:

        y = [U_p + eta_p] - [U_n + eta_n] - R_lump u - R_e(Q) u - (Q0 - Q) theta_2 u

    evaluated at the uniform fill concentration; the log-polarization term
    of the full model is absent, which is part of the bounded model
    uncertainty this model's consumers must tolerate.
    """

    def __init__(self, cell: CellParameters, sei: SeiParameters,
                 ocp_anode: OcpTable, ocp_cathode: OcpTable,
                 cfg: DiscretizationConfig):
        self.cell = cell
        self.sei = sei
        self.ocp_anode = ocp_anode
        self.ocp_cathode = ocp_cathode
        self.cfg = cfg
        self.particle_n = SolidParticle(cell, cfg, "anode")
        self.particle_p = SolidParticle(cell, cfg, "cathode")

    def step(self, c_s_n: np.ndarray, c_s_p: np.ndarray, current: float,
             temperature: float, dt: float | None = None,
             d_s_n: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """One transport step; `d_s_n` overrides the anode diffusivity law."""
        dt = self.cfg.dt if dt is None else dt
        d_n = self.cell.d_s_n(temperature) if d_s_n is None else d_s_n
        return (self.particle_n.step(c_s_n, current, d_n, dt),
                self.particle_p.step(c_s_p, current, self.cell.d_s_p(temperature), dt))

    def output_voltage(self, c_surf_n: float, c_surf_p: float, q: float,
                       current: float, temperature: float,
                       theta_2: float | None = None) -> float:
        """Terminal voltage from surface concentrations and capacity."""
        cell = self.cell
        theta_2 = self.sei.theta_2_nominal(cell) if theta_2 is None else theta_2
        c_e = cell.c_e_init
        u_p = self.ocp_cathode.potential_at(c_surf_p / cell.c_s_max_p,
                                            temperature, cell.t_ref)
        u_n = self.ocp_anode.potential_at(c_surf_n / cell.c_s_max_n,
                                          temperature, cell.t_ref)
        eta_p = overpotential(cell, "cathode", current, c_surf_p, c_e, temperature)
        eta_n = overpotential(cell, "anode", current, c_surf_n, c_e, temperature)
        r_e = reduced_electrolyte_resistance(cell, self.sei, q, temperature)
        film = (self.sei.q_0 - q) * theta_2
        return (u_p + eta_p - u_n - eta_n
                - current * cell.r_lump - current * r_e - current * film)

    def run(self, cycle, q: float, soc: float = 1.0,
            init: tuple[np.ndarray, np.ndarray] | None = None) -> Trajectory:
        """Simulate the reduced model over a drive cycle."""
        times = np.asarray(cycle.times, dtype=float)
        currents = np.asarray(cycle.currents, dtype=float)
        temperatures = np.asarray(cycle.temperatures, dtype=float)
        cell = self.cell
        if init is None:
            c_s_n = self.particle_n.uniform_profile(
                cell.soc_to_theta(soc, "anode") * cell.c_s_max_n)
            c_s_p = self.particle_p.uniform_profile(
                cell.soc_to_theta(soc, "cathode") * cell.c_s_max_p)
        else:
            c_s_n, c_s_p = init[0].copy(), init[1].copy()
        l_sei = aging.film_thickness_for_capacity(q, cell, self.sei)
        rows_v, rows_sn, rows_sp = [], [], []
        states = []
        for k in range(times.size):
            i_k, temp_k = float(currents[k]), float(temperatures[k])
            rows_v.append(self.output_voltage(float(c_s_n[-1]), float(c_s_p[-1]),
                                              q, i_k, temp_k))
            sn, sp = bulk_soc(EspmState(c_s_n, c_s_p, np.array([cell.c_e_init]),
                                        q, l_sei), cell)
            rows_sn.append(sn)
            rows_sp.append(sp)
            states.append(EspmState(c_s_n.copy(), c_s_p.copy(),
                                    np.array([cell.c_e_init]), q, l_sei))
            if k == times.size - 1:
                break
            span = float(times[k + 1] - times[k])
            n_sub = max(1, int(np.ceil(span / self.cfg.dt - 1e-12)))
            h = span / n_sub
            for _ in range(n_sub):
                c_s_n, c_s_p = self.step(c_s_n, c_s_p, i_k, temp_k, h)
        return Trajectory(
            times=times[:len(rows_v)].copy(), currents=currents[:len(rows_v)].copy(),
            temperatures=temperatures[:len(rows_v)].copy(),
            voltages=np.array(rows_v), soc_n=np.array(rows_sn),
            soc_p=np.array(rows_sp), states=states,
        )

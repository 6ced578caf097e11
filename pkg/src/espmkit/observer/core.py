"""Interconnected dual-electrode estimator with capacity and parameter adaptation.

Two coupled loops run side by side on the reduced two-particle model:

  * the cathode loop corrects its own radial concentration profile from the
    voltage residual and integrates the capacity estimate;
  * the anode loop corrects the anode profile from its own residual and
    carries the diffusivity estimate.

Each loop closes its output equation with the partner electrode replaced by
an open-loop copy: a one-step model propagation of the partner's current
closed-loop estimate.  Corrections combine a linear term and a switching
term tied to it by a scalar (G_v = -beta*G); the switching function is
either the exact sign or a boundary-layer saturation.

Two scalar adaptation laws run once the residual gate is open: the anode
reference diffusivity adapts from the surface-gradient channel, and the
film-resistance lump from the capacity channel.  Both substitute configured
tolerable magnitudes for their unmeasurable output-error factors and are
projected onto physical intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, GainValidationError, ParameterValidationError
from ..ocp import OcpTable
from ..params import CellParameters, DiscretizationConfig, SeiParameters
from ..plant import ReducedSpm
from .gains import RATIO_RTOL, GatingConfig, ObserverGains

# projection intervals for the adapted parameters, relative to nominal
THETA1_PROJECTION = (0.01, 100.0)      # x reference anode diffusivity
THETA2_FLOOR_FRACTION = 1e-3           # lower stand-in for the open interval
THETA2_CEIL_FRACTION = 100.0           # x nominal film lump
# capacity projection, relative to nominal: the floor stays above the
# capacity at which the film-to-porosity map predicts fully clogged pores
# (about half nominal for the reference cell), so the voltage map remains
# evaluable for every reachable estimate
Q_PROJECTION = (0.55, 1.30)


@dataclass
class ObserverState:
    """Estimator state: two closed-loop profiles, their open-loop partners,
    capacity, and the two adapted parameters.

    Concentration estimates are never clamped; `range_flags` reports
    excursions outside the physical interval.  `q_filtered` carries the
    smoothed capacity readout and is maintained by the runner.
    """

    x1_hat: np.ndarray      # (N,) cathode radial concentrations, mol/m^3
    x2_hat: np.ndarray      # (N,) anode radial concentrations, mol/m^3
    x1_ol: np.ndarray       # (N,) open-loop cathode copy (anode loop's view)
    x2_ol: np.ndarray       # (N,) open-loop anode copy (cathode loop's view)
    x3_hat: float           # Ah, capacity estimate
    theta1_hat: float       # m^2/s, anode reference diffusivity estimate
    theta2_hat: float       # ohm/Ah, film-resistance lump estimate
    gate_open: bool = False
    q_filtered: float | None = None

    def __post_init__(self):
        self.x1_hat = np.asarray(self.x1_hat, dtype=float)
        self.x2_hat = np.asarray(self.x2_hat, dtype=float)
        self.x1_ol = np.asarray(self.x1_ol, dtype=float)
        self.x2_ol = np.asarray(self.x2_ol, dtype=float)
        if self.q_filtered is None:
            self.q_filtered = float(self.x3_hat)
        problems = []
        shapes = {a.shape for a in (self.x1_hat, self.x2_hat, self.x1_ol, self.x2_ol)}
        if len(shapes) != 1:
            problems.append(f"profile shapes differ: {sorted(shapes)}")
        if not self.theta1_hat > 0.0:
            problems.append(f"theta1_hat must be > 0, got {self.theta1_hat!r}")
        if not self.theta2_hat > 0.0:
            problems.append(f"theta2_hat must be > 0, got {self.theta2_hat!r}")
        if not np.isfinite(self.x3_hat):
            problems.append(f"x3_hat must be finite, got {self.x3_hat!r}")
        if problems:
            raise ParameterValidationError(problems)

    def copy(self) -> "ObserverState":
        return ObserverState(self.x1_hat.copy(), self.x2_hat.copy(),
                             self.x1_ol.copy(), self.x2_ol.copy(),
                             self.x3_hat, self.theta1_hat, self.theta2_hat,
                             self.gate_open, self.q_filtered)

    def range_flags(self, cell: CellParameters) -> list[str]:
        """Concentration estimates outside [0, c_max] (flagged, not clamped)."""
        flags = []
        for name, arr, c_max in (("cathode estimate", self.x1_hat, cell.c_s_max_p),
                                 ("anode estimate", self.x2_hat, cell.c_s_max_n),
                                 ("cathode open-loop", self.x1_ol, cell.c_s_max_p),
                                 ("anode open-loop", self.x2_ol, cell.c_s_max_n)):
            if np.any(arr < 0.0) or np.any(arr > c_max):
                flags.append(f"{name} outside [0, {c_max:g}] "
                             f"(range [{arr.min():.6g}, {arr.max():.6g}])")
        return flags


@dataclass(frozen=True)
class Measurement:
    """One synchronized sample of the cell's terminal quantities."""

    time: float         # s
    current: float      # A, positive = discharge
    voltage: float      # V
    temperature: float  # K

    def __post_init__(self):
        for name in ("time", "current", "voltage", "temperature"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"measurement {name} must be finite, "
                                  f"got {getattr(self, name)!r}")


def initial_observer_state(cell: CellParameters, sei: SeiParameters,
                           cfg: DiscretizationConfig, *, soc_guess: float,
                           q_guess: float, theta1_guess: float | None = None,
                           theta2_guess: float | None = None) -> ObserverState:
    """Uniform-profile initialization at a guessed state of charge.

    Open-loop copies start equal to the closed-loop profiles.  Parameter
    guesses default to the nominal reference diffusivity and film lump.
    """
    th_n = cell.soc_to_theta(soc_guess, "anode") * cell.c_s_max_n
    th_p = cell.soc_to_theta(soc_guess, "cathode") * cell.c_s_max_p
    n = cfg.n_solid
    return ObserverState(
        x1_hat=np.full(n, th_p), x2_hat=np.full(n, th_n),
        x1_ol=np.full(n, th_p), x2_ol=np.full(n, th_n),
        x3_hat=float(q_guess),
        theta1_hat=cell.d_s_ref_n if theta1_guess is None else float(theta1_guess),
        theta2_hat=(sei.theta_2_nominal(cell) if theta2_guess is None
                    else float(theta2_guess)),
    )


class InterconnectedObserver:
    """Bundles the model tables, gain schedule, and stepping machinery."""

    def __init__(self, cell: CellParameters, sei: SeiParameters,
                 ocp_anode: OcpTable, ocp_cathode: OcpTable,
                 cfg: DiscretizationConfig, gains: ObserverGains,
                 gating: GatingConfig | None = None):
        if gains.n_nodes != cfg.n_solid:
            raise ParameterValidationError(
                [f"gain vectors sized {gains.n_nodes} but grid has {cfg.n_solid} nodes"])
        self.cell = cell
        self.sei = sei
        self.cfg = cfg
        self.gains = gains
        self.gating = GatingConfig() if gating is None else gating
        self.model = ReducedSpm(cell, sei, ocp_anode, ocp_cathode, cfg)
        self.particle_n = self.model.particle_n
        self.particle_p = self.model.particle_p
        self._ratio_deviation = gains.ratio_deviation()
        # surface-gradient row of the unit-diffusivity operator: the output
        # node of the anode profile, used by the diffusivity adaptation law
        self._dr_n_sq = self.particle_n.dr ** 2
        self._theta1_lo = THETA1_PROJECTION[0] * cell.d_s_ref_n
        self._theta1_hi = THETA1_PROJECTION[1] * cell.d_s_ref_n
        theta2_nom = sei.theta_2_nominal(cell)
        self._theta2_lo = THETA2_FLOOR_FRACTION * theta2_nom
        self._theta2_hi = THETA2_CEIL_FRACTION * theta2_nom
        self._q_lo = Q_PROJECTION[0] * sei.q_0
        self._q_hi = Q_PROJECTION[1] * sei.q_0
        # strictly interior surface-concentration band for output evaluation
        self._c_surf_eps = 1e-6

    # -- switching -----------------------------------------------------

    def switch(self, residual: float) -> float:
        """Discontinuous or boundary-layer switching of a voltage residual."""
        if self.gating.use_boundary_layer:
            phi = self.gating.boundary_layer_phi
            return float(np.clip(residual / phi, -1.0, 1.0))
        return float(np.sign(residual))

    # -- outputs ---------------------------------------------------------

    def output(self, obs: ObserverState, current: float, temperature: float,
               which: str) -> float:
        """Predicted terminal voltage of one loop.

        Each loop pairs its own closed-loop surface concentration with the
        partner's open-loop one; capacity and film corrections use the
        shared x3/theta2 estimates.  The electrolyte polarization term of
        the full model is absent by construction of the reduced model.

        Correction transients routinely overshoot the physical ranges, so
        the evaluation clamps surface concentrations to the open interval
        (0, c_max) and capacity to its projection interval instead of
        propagating the plant model's domain exceptions; the state itself
        is never altered and excursions surface through `range_flags`.
        """
        if which == "cathode":
            c_surf_p, c_surf_n = float(obs.x1_hat[-1]), float(obs.x2_ol[-1])
        elif which == "anode":
            c_surf_p, c_surf_n = float(obs.x1_ol[-1]), float(obs.x2_hat[-1])
        else:
            raise ValueError(f"which must be 'cathode' or 'anode', got {which!r}")
        eps = self._c_surf_eps
        c_surf_p = float(np.clip(c_surf_p, eps * self.cell.c_s_max_p,
                                 (1.0 - eps) * self.cell.c_s_max_p))
        c_surf_n = float(np.clip(c_surf_n, eps * self.cell.c_s_max_n,
                                 (1.0 - eps) * self.cell.c_s_max_n))
        q_eval = float(np.clip(obs.x3_hat, self._q_lo, self._q_hi))
        return self.model.output_voltage(c_surf_n, c_surf_p, q_eval,
                                         current, temperature,
                                         theta_2=obs.theta2_hat)

    def output_pair(self, obs: ObserverState, current: float,
                    temperature: float) -> tuple[float, float]:
        return (self.output(obs, current, temperature, "cathode"),
                self.output(obs, current, temperature, "anode"))

    # -- transport helpers ---------------------------------------------

    def _anode_diffusivity(self, theta1_hat: float, temperature: float) -> float:
        """Estimated anode diffusivity at temperature (known Arrhenius shape)."""
        return theta1_hat * self.cell.d_s_n(temperature) / self.cell.d_s_ref_n

    # -- loop steps ------------------------------------------------------

    def cathode_step(self, obs: ObserverState, m: Measurement, y_hat_1: float,
                     dt: float, faults: list[tuple[float, str]] | None = None
                     ) -> ObserverState:
        """Advance the cathode loop's fields: x1_hat, x2_ol, and (gated) x3_hat.

        The closed-loop profile takes the linear plus switching correction
        inside the implicit transport solve; the open-loop anode copy is the
        partner's current closed-loop profile propagated one model step.  A
        non-finite residual rejects the step (state returned unchanged) and
        reports a fault.
        """
        e_y1 = m.voltage - y_hat_1
        if not np.isfinite(e_y1):
            if faults is not None:
                faults.append((m.time, f"cathode residual non-finite "
                                       f"(y_hat = {y_hat_1!r}); step rejected"))
            return obs.copy()
        g = self.gains
        injection = g.g1 * (e_y1 - g.beta1 * self.switch(e_y1))
        x1 = self.particle_p.step(obs.x1_hat, m.current,
                                  self.cell.d_s_p(m.temperature), dt,
                                  source=injection)
        x2_ol = self.particle_n.step(obs.x2_hat, m.current,
                                     self._anode_diffusivity(obs.theta1_hat,
                                                             m.temperature), dt)
        x3 = obs.x3_hat
        if obs.gate_open:
            raw = x3 + dt * g.g3 * e_y1 * m.current
            x3 = float(np.clip(raw, self._q_lo, self._q_hi))
            if x3 != raw and faults is not None:
                faults.append((m.time, f"capacity projected from {raw:.4f} to "
                                       f"{x3:.4f} Ah"))
        out = obs.copy()
        out.x1_hat, out.x2_ol, out.x3_hat = x1, x2_ol, x3
        return out

    def anode_step(self, obs: ObserverState, m: Measurement, y_hat_2: float,
                   dt: float, faults: list[tuple[float, str]] | None = None
                   ) -> ObserverState:
        """Advance the anode loop's fields: x2_hat and x1_ol (mirror step)."""
        e_y2 = m.voltage - y_hat_2
        if not np.isfinite(e_y2):
            if faults is not None:
                faults.append((m.time, f"anode residual non-finite "
                                       f"(y_hat = {y_hat_2!r}); step rejected"))
            return obs.copy()
        g = self.gains
        injection = g.g2 * (e_y2 - g.beta2 * self.switch(e_y2))
        x2 = self.particle_n.step(obs.x2_hat, m.current,
                                  self._anode_diffusivity(obs.theta1_hat,
                                                          m.temperature), dt,
                                  source=injection)
        x1_ol = self.particle_p.step(obs.x1_hat, m.current,
                                     self.cell.d_s_p(m.temperature), dt)
        out = obs.copy()
        out.x2_hat, out.x1_ol = x2, x1_ol
        return out

    # -- adaptation ------------------------------------------------------

    def theta1_rate(self, obs: ObserverState, e_y2: float) -> float:
        """Diffusivity adaptation rate (m^2/s per s) from the anode residual.

        Surface-gradient channel of the unit-diffusivity operator times the
        switched residual, scaled by the tolerable anode-channel output
        error and the slope lower bound.
        """
        g = self.gains
        gradient = 2.0 * (obs.x2_hat[-2] - obs.x2_hat[-1]) / self._dr_n_sq
        return gradient * self.switch(e_y2) * g.h_tol_2 / (g.gamma_n2 * g.k1)

    def theta2_rate(self, obs: ObserverState, e_y1: float, current: float) -> float:
        """Film-lump adaptation rate (ohm/Ah per s) from the cathode residual."""
        g = self.gains
        return (g.g1[-1] * (obs.x3_hat - self.sei.q_0) * current
                * self.switch(e_y1) * g.h_tol_1 / (g.k2 * g.gamma_p2))

    def adapt_theta1(self, obs: ObserverState, m: Measurement, e_y2: float,
                     dt: float,
                     events: list[tuple[float, str]] | None = None
                     ) -> ObserverState:
        """Apply one gated diffusivity update with interval projection."""
        if not obs.gate_open:
            return obs
        raw = obs.theta1_hat + dt * self.theta1_rate(obs, e_y2)
        projected = float(np.clip(raw, self._theta1_lo, self._theta1_hi))
        if projected != raw and events is not None:
            events.append((m.time, f"theta1 projected from {raw:.4e} to "
                                   f"{projected:.4e} m^2/s"))
        return replace_theta(obs, theta1_hat=projected)

    def adapt_theta2(self, obs: ObserverState, m: Measurement, e_y1: float,
                     dt: float,
                     events: list[tuple[float, str]] | None = None
                     ) -> ObserverState:
        """Apply one gated film-lump update; requires the cross-loop ratio.

        The law is only consistent between the two loops when
        g1/gamma_p2 = -g2/gamma_n2; a violating schedule is refused.
        """
        if self._ratio_deviation > RATIO_RTOL:
            raise GainValidationError(
                [f"film-lump adaptation refused: cross-loop gain ratio deviates "
                 f"by {self._ratio_deviation:.3e} relative (tolerance {RATIO_RTOL:.0e})"])
        if not obs.gate_open:
            return obs
        raw = obs.theta2_hat + dt * self.theta2_rate(obs, e_y1, m.current)
        projected = float(np.clip(raw, self._theta2_lo, self._theta2_hi))
        if projected != raw and events is not None:
            events.append((m.time, f"theta2 projected from {raw:.4e} to "
                                   f"{projected:.4e} ohm/Ah"))
        return replace_theta(obs, theta2_hat=projected)

    # -- one full interconnected update ----------------------------------

    def step(self, obs: ObserverState, m: Measurement, dt: float,
             faults: list[tuple[float, str]] | None = None,
             events: list[tuple[float, str]] | None = None
             ) -> tuple[ObserverState, float, float]:
        """Advance both loops and the gated adaptations by one sample.

        Both loop steps read the same pre-step state, so each open-loop copy
        is the partner's estimate at the same instant propagated forward;
        the field updates are then merged.  Returns the new state and the
        two predicted outputs at the pre-step instant.
        """
        y1, y2 = self.output_pair(obs, m.current, m.temperature)
        e_y1, e_y2 = m.voltage - y1, m.voltage - y2
        cath = self.cathode_step(obs, m, y1, dt, faults)
        ano = self.anode_step(obs, m, y2, dt, faults)
        merged = obs.copy()
        merged.x1_hat, merged.x2_ol, merged.x3_hat = cath.x1_hat, cath.x2_ol, cath.x3_hat
        merged.x2_hat, merged.x1_ol = ano.x2_hat, ano.x1_ol
        if obs.gate_open and np.isfinite(e_y2):
            merged = self.adapt_theta1(merged, m, e_y2, dt, events)
        if obs.gate_open and np.isfinite(e_y1):
            merged = self.adapt_theta2(merged, m, e_y1, dt, events)
        return merged, y1, y2


def replace_theta(obs: ObserverState, theta1_hat: float | None = None,
                  theta2_hat: float | None = None) -> ObserverState:
    """Copy of the state with one or both adapted parameters replaced."""
    out = obs.copy()
    if theta1_hat is not None:
        out.theta1_hat = theta1_hat
    if theta2_hat is not None:
        out.theta2_hat = theta2_hat
    return out


# ---------------------------------------------------------------------------
# functional wrappers mirroring the operation-style API
# ---------------------------------------------------------------------------

def observer_output(obs: ObserverState, m: Measurement,
                    model: InterconnectedObserver, which: str) -> float:
    return model.output(obs, m.current, m.temperature, which)


def cathode_observer_step(obs: ObserverState, m: Measurement, y_hat_1: float,
                          model: InterconnectedObserver, dt: float,
                          faults: list | None = None) -> ObserverState:
    return model.cathode_step(obs, m, y_hat_1, dt, faults)


def anode_observer_step(obs: ObserverState, m: Measurement, y_hat_2: float,
                        model: InterconnectedObserver, dt: float,
                        faults: list | None = None) -> ObserverState:
    return model.anode_step(obs, m, y_hat_2, dt, faults)


def adapt_theta1(obs: ObserverState, m: Measurement, e_y2: float,
                 model: InterconnectedObserver, dt: float,
                 events: list | None = None) -> ObserverState:
    return model.adapt_theta1(obs, m, e_y2, dt, events)


def adapt_theta2(obs: ObserverState, m: Measurement, e_y1: float,
                 model: InterconnectedObserver, dt: float,
                 events: list | None = None) -> ObserverState:
    return model.adapt_theta2(obs, m, e_y1, dt, events)

"""Pydantic request/response models for the HTTP service.

Every response embeds the fully resolved request under `config`, so an
output bundle is reproducible without knowledge of server defaults.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# shared specs
# ---------------------------------------------------------------------------

class CycleSamples(StrictModel):
    """Inline drive-cycle samples (same columns as the CSV format)."""

    t_s: list[float]
    current_A: list[float]
    temperature_K: list[float]
    voltage_V: list[float] | None = None


class CycleSpec(StrictModel):
    """One source for a drive cycle: packaged reference, file, or inline."""

    reference: Literal["charge_sustaining", "charge_depleting"] | None = None
    path: str | None = None
    samples: CycleSamples | None = None
    repeat: int = Field(default=1, ge=1)
    name: str | None = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        sources = [s is not None for s in (self.reference, self.path, self.samples)]
        if sum(sources) != 1:
            raise ValueError(
                "exactly one of reference/path/samples must be given")
        return self


class DiscretizationSpec(StrictModel):
    n_solid: int = 10
    m_electrolyte: int = 30
    dt: float = 1.0
    integrator: Literal["implicit", "explicit"] = "implicit"


class CorruptionSpecModel(StrictModel):
    """Measurement corruption applied between the plant and the estimator."""

    noise_std_current_A: float = Field(default=0.0, ge=0.0)
    noise_std_voltage_V: float = Field(default=0.0, ge=0.0)
    bias_current_A: float = 0.0
    bias_voltage_V: float = 0.0
    seed: int = 20260815


class GainDesign(StrictModel):
    g1_scale: float
    g3: float
    beta1: float = 0.003
    beta2: float = 0.003
    k1: float
    k2: float
    psi: float = 0.01
    error_fraction: float = 0.45
    stoichiometric_cross_ratio: bool = True


class GainSpec(StrictModel):
    """One source for an observer gain schedule.

    Priority: explicit file `path`, then `design` knobs, then `preset`
    (default: the packaged capacity-tracking schedule).
    """

    preset: Literal["capacity-tracking", "diffusivity-identification"] = \
        "capacity-tracking"
    path: str | None = None
    design: GainDesign | None = None


class GatingSpec(StrictModel):
    rms_window: float = 60.0
    threshold: float = 0.02
    dwell: float = 120.0
    prefilter_tau: float = 20.0
    q_filter_tau: float = 200.0
    boundary_layer_phi: float = 0.005
    use_boundary_layer: bool = True


# ---------------------------------------------------------------------------
# /simulate
# ---------------------------------------------------------------------------

class SimulateRequest(StrictModel):
    cycle: CycleSpec
    params_path: str | None = None       # None = packaged reference cell
    initial_soc: float = 1.0
    capacity_Ah: float | None = None     # below nominal = aged plant
    discretization: DiscretizationSpec = DiscretizationSpec()
    stop_at_voltage_limits: bool = True
    include_series: bool = False


class SimulateSeries(StrictModel):
    t_s: list[float]
    current_A: list[float]
    temperature_K: list[float]
    voltage_V: list[float]
    soc_n: list[float]
    soc_p: list[float]
    q_Ah: list[float]


class SimulateResponse(StrictModel):
    samples: int
    final_voltage_V: float
    final_soc_n: float
    final_soc_p: float
    final_q_Ah: float
    stop_reason: str
    series: SimulateSeries | None = None
    config: SimulateRequest


# ---------------------------------------------------------------------------
# /observe
# ---------------------------------------------------------------------------

class ObserverInit(StrictModel):
    soc_guess: float = 0.30
    q_guess_Ah: float = 2.1
    theta1_fraction: float = 1.0        # x reference anode diffusivity
    theta2_guess_ohm_per_Ah: float | None = None


class ObserveRequest(StrictModel):
    measurements: CycleSpec              # must carry a voltage trace
    params_path: str | None = None
    gains: GainSpec = GainSpec()
    gating: GatingSpec = GatingSpec()
    init: ObserverInit = ObserverInit()
    discretization: DiscretizationSpec = DiscretizationSpec()
    include_series: bool = False


class EstimateSeries(StrictModel):
    t_s: list[float]
    q_raw_Ah: list[float]
    q_filtered_Ah: list[float]
    diffusivity_anode_m2s: list[float]
    film_lump_ohmAh: list[float]
    residual_cathode_V: list[float]
    residual_anode_V: list[float]
    gate_open: list[bool]


class ObserveResponse(StrictModel):
    samples: int
    q_final_Ah: float
    q_final_raw_Ah: float
    theta1_final_m2s: float
    theta2_final_ohmAh: float
    gate_time_s: float | None
    residual_rms_post_gate_mV: float
    warnings: list[str]
    fault_count: int
    series: EstimateSeries | None = None
    config: ObserveRequest


# ---------------------------------------------------------------------------
# /twin
# ---------------------------------------------------------------------------

class TwinRequest(StrictModel):
    cycle: CycleSpec
    params_path: str | None = None
    capacity_Ah: float | None = None     # aged plant truth; None = fresh
    initial_soc: float = 0.75
    soc_error: float = 0.45
    q_guess_Ah: float = 2.1
    theta1_fraction: float = 0.1
    theta2_guess_ohm_per_Ah: float | None = None
    corruption: CorruptionSpecModel | None = None
    gains: GainSpec = GainSpec()
    gating: GatingSpec = GatingSpec()
    discretization: DiscretizationSpec = DiscretizationSpec()
    include_series: bool = False


class TwinResponse(StrictModel):
    samples: int
    q_truth_Ah: float
    q_estimate_Ah: float
    q_estimate_raw_Ah: float
    q_error_pct: float
    theta1_truth_m2s: float
    theta1_estimate_m2s: float
    theta1_error_pct: float
    theta2_truth_ohmAh: float
    theta2_estimate_ohmAh: float
    gate_time_s: float | None
    settle_time_2pct_s: float | None
    residual_rms_post_gate_mV: float
    plant_stop_reason: str
    warnings: list[str]
    series: EstimateSeries | None = None
    plant_series: SimulateSeries | None = None
    config: TwinRequest


# ---------------------------------------------------------------------------
# /sensitivity
# ---------------------------------------------------------------------------

class SensitivityRequest(StrictModel):
    cycle: CycleSpec
    params_path: str | None = None
    initial_soc: float = 1.0
    free_names: list[str] | None = None          # None = all 18
    scheme: Literal["central", "forward"] = "central"
    rel_step: float = 1e-3
    decimate: int = Field(default=1, ge=1)
    sens_threshold: float = 0.2
    corr_threshold: float = 0.8
    discretization: DiscretizationSpec = DiscretizationSpec()
    include_correlation: bool = False


class RankingEntry(StrictModel):
    name: str
    multi_output_norm: float
    voltage_only_norm: float


class SensitivityResponse(StrictModel):
    ranking: list[RankingEntry]                  # sorted by multi-output norm
    selected: list[str]
    exclusions: list[tuple[str, str]]
    flagged: dict[str, str]
    correlation_names: list[str] | None = None
    correlation: list[list[float]] | None = None
    config: SensitivityRequest


# ---------------------------------------------------------------------------
# /identify
# ---------------------------------------------------------------------------

class IdentifyRequest(StrictModel):
    measurements: CycleSpec              # must carry a voltage trace
    params_path: str | None = None
    q_reference_Ah: float
    initial_soc: float
    free_names: list[str]
    initial_values: dict[str, float] | None = None
    rel_bound: float = 0.5
    budget: int = Field(default=4000, ge=0)
    seed: int = 20260815
    optimizer: Literal["differential-evolution", "random-search"] = \
        "differential-evolution"
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    discretization: DiscretizationSpec = DiscretizationSpec()


class IdentifyResponse(StrictModel):
    fitted: dict[str, float]
    j1_voltage_rms_V: float
    j2_soc_cathode_rms: float
    j3_soc_anode_rms: float
    total_cost: float
    feasible: bool
    evaluations: int
    converged: bool
    history: list[float]
    config: IdentifyRequest


# ---------------------------------------------------------------------------
# /validate-gains
# ---------------------------------------------------------------------------

class ValidateGainsRequest(StrictModel):
    gains: GainSpec = GainSpec()
    params_path: str | None = None
    error_fraction: float = 0.45
    soc: float = 0.5
    delta_x1: float = 0.0
    delta_x2: float = 0.0
    discretization: DiscretizationSpec = DiscretizationSpec()


class GainConditionModel(StrictModel):
    name: str
    passed: bool
    margin: float
    detail: str


class ValidateGainsResponse(StrictModel):
    passed: bool
    conditions: list[GainConditionModel]
    config: ValidateGainsRequest


class HealthResponse(StrictModel):
    status: str
    package: str
    version: str

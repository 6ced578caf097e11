"""FastAPI application and the in-process handler functions it wraps.

Each endpoint body is a plain function from request model to response
model; the command-line client calls the same functions directly when no
server address is configured, so HTTP and local runs share one code path.

Error mapping: `UsageError` (bad files, bad arguments) → HTTP 400;
`DomainError` (physically/numerically infeasible computation) → HTTP 409;
request-shape violations are FastAPI's own 422.  Bodies carry
``{"family": "usage"|"domain", "error": <message>}`` so clients can map
failures onto exit codes without parsing prose.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..cycles import DriveCycle, load_drive_cycle, reference_cycle_path
from ..errors import DomainError, UsageError
from ..ident import (FitData, ParameterVector, RandomSearchOptimizer,
                     correlation_matrix, fit, multi_vs_single_output_norms,
                     sensitivity_matrix, subset_select)
from ..observer import (GatingConfig, InterconnectedObserver,
                        capacity_tracking_gains, design_gains,
                        diffusivity_identification_gains,
                        initial_observer_state, load_gains,
                        load_measurement_stream, run_observer,
                        stoichiometric_cross_ratio, validate_gains)
from ..ocp import load_reference_ocps
from ..params import (DiscretizationConfig, load_parameters,
                      load_reference_parameters)
from ..plant import initial_state, simulate
from ..twin import CorruptionSpec, TwinConfig, run_twin
from . import schemas as s

# ---------------------------------------------------------------------------
# spec resolution
# ---------------------------------------------------------------------------


def _resolve_params(path: str | None):
    if path is None:
        return load_reference_parameters()
    return load_parameters(path)


def _resolve_cfg(spec: s.DiscretizationSpec) -> DiscretizationConfig:
    return DiscretizationConfig(n_solid=spec.n_solid,
                                m_electrolyte=spec.m_electrolyte,
                                dt=spec.dt, integrator=spec.integrator)


def _load_cycle_file(path: str) -> DriveCycle:
    """Accept either cycle-CSV or measurement-stream column order."""
    first = ""
    try:
        with open(path) as fh:
            for line in fh:
                if line.strip() and not line.lstrip().startswith("#"):
                    first = line.strip().lower()
                    break
    except OSError as exc:
        raise UsageError(f"cannot read cycle file {path}: {exc}") from exc
    if first.startswith("t_s,current_a,voltage_v"):
        return load_measurement_stream(path)
    return load_drive_cycle(path)


def _resolve_cycle(spec: s.CycleSpec, require_voltage: bool = False) -> DriveCycle:
    if spec.reference is not None:
        cycle = load_drive_cycle(reference_cycle_path(spec.reference))
    elif spec.path is not None:
        cycle = _load_cycle_file(spec.path)
    else:
        samples = spec.samples
        cycle = DriveCycle(
            times=np.asarray(samples.t_s, dtype=float),
            currents=np.asarray(samples.current_A, dtype=float),
            temperatures=np.asarray(samples.temperature_K, dtype=float),
            voltages=(None if samples.voltage_V is None
                      else np.asarray(samples.voltage_V, dtype=float)),
            name=spec.name or "inline", source="request")
    if spec.repeat > 1:
        cycle = cycle.repeat(spec.repeat)
    if spec.name is not None:
        cycle = dataclasses.replace(cycle, name=spec.name)
    if require_voltage and cycle.voltages is None:
        raise UsageError(
            "these measurements carry no voltage trace; estimation needs "
            "t_s, current_A, temperature_K and voltage_V")
    return cycle


def _resolve_gating(spec: s.GatingSpec) -> GatingConfig:
    return GatingConfig(rms_window=spec.rms_window, threshold=spec.threshold,
                        dwell=spec.dwell, prefilter_tau=spec.prefilter_tau,
                        q_filter_tau=spec.q_filter_tau,
                        boundary_layer_phi=spec.boundary_layer_phi,
                        use_boundary_layer=spec.use_boundary_layer)


def _resolve_gains(spec: s.GainSpec, cell, sei, ocp_anode, ocp_cathode, cfg):
    if spec.path is not None:
        gains, _ = load_gains(spec.path)   # gating comes from the request
        return gains
    if spec.design is not None:
        d = spec.design
        ratio = stoichiometric_cross_ratio(cell) if d.stoichiometric_cross_ratio else None
        return design_gains(cell, sei, ocp_anode, ocp_cathode, cfg,
                            g1_scale=d.g1_scale, g3=d.g3, beta1=d.beta1,
                            beta2=d.beta2, k1=d.k1, k2=d.k2, psi=d.psi,
                            error_fraction=d.error_fraction, cross_ratio=ratio)
    if spec.preset == "diffusivity-identification":
        return diffusivity_identification_gains(cell, sei, ocp_anode,
                                                ocp_cathode, cfg)
    return capacity_tracking_gains(cell, sei, ocp_anode, ocp_cathode, cfg)


def _simulate_series(traj) -> s.SimulateSeries:
    return s.SimulateSeries(
        t_s=traj.times.tolist(), current_A=traj.currents.tolist(),
        temperature_K=traj.temperatures.tolist(),
        voltage_V=traj.voltages.tolist(), soc_n=traj.soc_n.tolist(),
        soc_p=traj.soc_p.tolist(), q_Ah=[st.q for st in traj.states])


def _estimate_series(est) -> s.EstimateSeries:
    return s.EstimateSeries(
        t_s=est.times.tolist(), q_raw_Ah=est.q_raw.tolist(),
        q_filtered_Ah=est.q_filtered.tolist(),
        diffusivity_anode_m2s=est.theta1.tolist(),
        film_lump_ohmAh=est.theta2.tolist(),
        residual_cathode_V=est.residual_cathode.tolist(),
        residual_anode_V=est.residual_anode.tolist(),
        gate_open=[bool(g) for g in est.gate_open])


# ---------------------------------------------------------------------------
# handlers (also the in-process API used by the CLI)
# ---------------------------------------------------------------------------


def simulate_response(req: s.SimulateRequest, traj) -> s.SimulateResponse:
    return s.SimulateResponse(
        samples=len(traj), final_voltage_V=float(traj.voltages[-1]),
        final_soc_n=float(traj.soc_n[-1]), final_soc_p=float(traj.soc_p[-1]),
        final_q_Ah=float(traj.states[-1].q), stop_reason=traj.stop_reason,
        series=_simulate_series(traj) if req.include_series else None,
        config=req)


def run_simulate(req: s.SimulateRequest):
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    cycle = _resolve_cycle(req.cycle)
    aged = req.capacity_Ah is not None and req.capacity_Ah < sei.q_0
    init = initial_state(cell, sei, cfg, soc=req.initial_soc,
                         capacity=req.capacity_Ah)
    return simulate(cycle, cell, sei, ocp_anode, ocp_cathode, cfg, init=init,
                    aged=aged,
                    stop_at_voltage_limits=req.stop_at_voltage_limits)


def handle_simulate(req: s.SimulateRequest) -> s.SimulateResponse:
    return simulate_response(req, run_simulate(req))


def observe_response(req: s.ObserveRequest, est) -> s.ObserveResponse:
    post = est.residual_cathode[est.gate_open] if np.any(est.gate_open) \
        else est.residual_cathode
    return s.ObserveResponse(
        samples=len(est), q_final_Ah=est.final_capacity,
        q_final_raw_Ah=est.final_capacity_raw,
        theta1_final_m2s=float(est.theta1[-1]),
        theta2_final_ohmAh=float(est.theta2[-1]),
        gate_time_s=est.gate_time,
        residual_rms_post_gate_mV=1e3 * float(np.sqrt(np.mean(post ** 2))),
        warnings=list(est.warnings), fault_count=len(est.faults),
        series=_estimate_series(est) if req.include_series else None,
        config=req)


def run_observe(req: s.ObserveRequest):
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    measurements = _resolve_cycle(req.measurements, require_voltage=True)
    gains = _resolve_gains(req.gains, cell, sei, ocp_anode, ocp_cathode, cfg)
    gating = _resolve_gating(req.gating)
    model = InterconnectedObserver(cell, sei, ocp_anode, ocp_cathode, cfg,
                                   gains, gating)
    init = initial_observer_state(
        cell, sei, cfg, soc_guess=req.init.soc_guess,
        q_guess=req.init.q_guess_Ah,
        theta1_guess=req.init.theta1_fraction * cell.d_s_ref_n,
        theta2_guess=req.init.theta2_guess_ohm_per_Ah)
    return run_observer(measurements, model, init)


def handle_observe(req: s.ObserveRequest) -> s.ObserveResponse:
    return observe_response(req, run_observe(req))


def twin_response(req: s.TwinRequest, result) -> s.TwinResponse:
    m = result.metrics
    return s.TwinResponse(
        samples=len(result.estimate), q_truth_Ah=result.q_truth,
        q_estimate_Ah=m["q_final_filtered"], q_estimate_raw_Ah=m["q_final_raw"],
        q_error_pct=m["q_error_percent"],
        theta1_truth_m2s=result.theta1_truth,
        theta1_estimate_m2s=m["theta1_final"],
        theta1_error_pct=m["theta1_error_percent"],
        theta2_truth_ohmAh=result.theta2_truth,
        theta2_estimate_ohmAh=float(result.estimate.theta2[-1]),
        gate_time_s=m["gate_time"], settle_time_2pct_s=m["settle_time_2pct"],
        residual_rms_post_gate_mV=m["residual_rms_post_gate_mV"],
        plant_stop_reason=result.plant.stop_reason,
        warnings=list(result.estimate.warnings),
        series=_estimate_series(result.estimate) if req.include_series else None,
        plant_series=_simulate_series(result.plant) if req.include_series else None,
        config=req)


def run_twin_request(req: s.TwinRequest, on_stage=None):
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    cycle = _resolve_cycle(req.cycle)
    gains = _resolve_gains(req.gains, cell, sei, ocp_anode, ocp_cathode, cfg)
    gating = _resolve_gating(req.gating)
    corruption = None
    if req.corruption is not None:
        c = req.corruption
        corruption = CorruptionSpec(noise_std_current=c.noise_std_current_A,
                                    noise_std_voltage=c.noise_std_voltage_V,
                                    bias_current=c.bias_current_A,
                                    bias_voltage=c.bias_voltage_V, seed=c.seed)
    twin = TwinConfig(soc0=req.initial_soc, soc_error=req.soc_error,
                      q_guess=req.q_guess_Ah,
                      theta1_fraction=req.theta1_fraction,
                      theta2_guess=req.theta2_guess_ohm_per_Ah,
                      capacity=req.capacity_Ah, corruption=corruption)
    return run_twin(twin, cycle, cell, sei, ocp_anode, ocp_cathode, cfg,
                    gains, gating, on_stage=on_stage)


def handle_twin(req: s.TwinRequest) -> s.TwinResponse:
    return twin_response(req, run_twin_request(req))


def handle_sensitivity(req: s.SensitivityRequest) -> s.SensitivityResponse:
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    cycle = _resolve_cycle(req.cycle)
    vector = ParameterVector.reference(
        cell, free_names=None if req.free_names is None
        else tuple(req.free_names))
    matrix = sensitivity_matrix(cycle, vector, cell, sei, ocp_anode,
                                ocp_cathode, cfg, scheme=req.scheme,
                                rel_step=req.rel_step,
                                initial_soc=req.initial_soc,
                                decimate=req.decimate)
    ranking = multi_vs_single_output_norms(matrix)
    corr = correlation_matrix(matrix)
    subset = subset_select(ranking, corr, sens_threshold=req.sens_threshold,
                           corr_threshold=req.corr_threshold)
    entries = [s.RankingEntry(
        name=name, multi_output_norm=norm,
        voltage_only_norm=float(ranking.voltage_norms[ranking.names.index(name)]))
        for name, norm in ranking.ranked_multi]
    return s.SensitivityResponse(
        ranking=entries, selected=list(subset.selected),
        exclusions=[(n, r) for n, r in subset.exclusions],
        flagged=dict(matrix.flagged),
        correlation_names=list(corr.names) if req.include_correlation else None,
        correlation=corr.matrix.tolist() if req.include_correlation else None,
        config=req)


def handle_identify(req: s.IdentifyRequest) -> s.IdentifyResponse:
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    measurements = _resolve_cycle(req.measurements, require_voltage=True)
    data = FitData.from_cycle(measurements, req.q_reference_Ah, req.initial_soc)
    initial = ParameterVector.reference(cell, rel_bound=req.rel_bound,
                                        free_names=tuple(req.free_names))
    if req.initial_values:
        initial = initial.with_values(req.initial_values)
    optimizer = RandomSearchOptimizer() if req.optimizer == "random-search" \
        else None
    report = fit(data, initial, cell, sei, ocp_anode, ocp_cathode, cfg,
                 optimizer=optimizer, budget=req.budget, seed=req.seed,
                 weights=req.weights)
    cost = report.best_cost
    return s.IdentifyResponse(
        fitted={name: report.fitted[name] for name in report.fitted.free_names},
        j1_voltage_rms_V=cost.j1_voltage,
        j2_soc_cathode_rms=cost.j2_soc_cathode,
        j3_soc_anode_rms=cost.j3_soc_anode, total_cost=cost.total,
        feasible=cost.feasible, evaluations=report.evaluations,
        converged=report.converged, history=list(report.history),
        config=req)


def handle_validate_gains(req: s.ValidateGainsRequest) -> s.ValidateGainsResponse:
    cell, sei = _resolve_params(req.params_path)
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = _resolve_cfg(req.discretization)
    gains = _resolve_gains(req.gains, cell, sei, ocp_anode, ocp_cathode, cfg)
    report = validate_gains(gains, cell, sei, cfg,
                            error_fraction=req.error_fraction, soc=req.soc,
                            delta_x1=req.delta_x1, delta_x2=req.delta_x2)
    return s.ValidateGainsResponse(
        passed=report.passed,
        conditions=[s.GainConditionModel(name=c.name, passed=c.passed,
                                         margin=c.margin, detail=c.detail)
                    for c in report.conditions],
        config=req)


# ---------------------------------------------------------------------------
# FastAPI wiring
# ---------------------------------------------------------------------------


def create_app() -> FastAPI:
    app = FastAPI(title="espmkit", version=__version__,
                  description="Battery simulation, estimation, and "
                              "identification service")

    @app.exception_handler(UsageError)
    async def _usage(_: Request, exc: UsageError):
        return JSONResponse(status_code=400,
                            content={"family": "usage", "error": str(exc)})

    @app.exception_handler(DomainError)
    async def _domain(_: Request, exc: DomainError):
        return JSONResponse(status_code=409,
                            content={"family": "domain", "error": str(exc)})

    @app.get("/health", response_model=s.HealthResponse)
    def health() -> s.HealthResponse:
        return s.HealthResponse(status="ok", package="espmkit",
                                version=__version__)

    @app.post("/simulate", response_model=s.SimulateResponse)
    def post_simulate(req: s.SimulateRequest) -> s.SimulateResponse:
        return handle_simulate(req)

    @app.post("/observe", response_model=s.ObserveResponse)
    def post_observe(req: s.ObserveRequest) -> s.ObserveResponse:
        return handle_observe(req)

    @app.post("/twin", response_model=s.TwinResponse)
    def post_twin(req: s.TwinRequest) -> s.TwinResponse:
        return handle_twin(req)

    @app.post("/sensitivity", response_model=s.SensitivityResponse)
    def post_sensitivity(req: s.SensitivityRequest) -> s.SensitivityResponse:
        return handle_sensitivity(req)

    @app.post("/identify", response_model=s.IdentifyResponse)
    def post_identify(req: s.IdentifyRequest) -> s.IdentifyResponse:
        return handle_identify(req)

    @app.post("/validate-gains", response_model=s.ValidateGainsResponse)
    def post_validate_gains(req: s.ValidateGainsRequest) -> s.ValidateGainsResponse:
        return handle_validate_gains(req)

    return app

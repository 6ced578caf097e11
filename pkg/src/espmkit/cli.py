"""Command-line front end.

Each run subcommand builds the same request model the HTTP service
accepts, executes it (in-process by default, or against a running server
via ``--server URL``), and writes a self-contained output bundle:

* ``config.txt`` — the full resolved request, no hidden defaults;
* ``summary.txt`` — flat ``key = value`` numeric summary, 12 significant
  digits;
* per-sample tables (``plant.csv``, ``measurements.csv``,
  ``estimate.csv``, ``ranking.csv``, ...) depending on the subcommand;
* ``error.txt`` with a stage tag when a stage fails; artifacts written by
  earlier stages are preserved.

Exit codes: 0 success, 1 domain error (physically or numerically
infeasible computation, or a failed server call), 2 usage error (bad
arguments or unreadable files; argparse errors included).  The only
environment variable honored is ``ESPMKIT_OUTDIR``, which overrides the
default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import httpx
import numpy as np

from .errors import DomainError, EspmkitError, UsageError
from .observer import save_measurement_stream
from .service import schemas as s
from .service.app import (_load_cycle_file, handle_identify,
                          handle_sensitivity, handle_validate_gains,
                          observe_response, run_observe, run_simulate,
                          run_twin_request, simulate_response, twin_response)

_REFERENCE_ALIASES = {
    "charge_sustaining": "charge_sustaining",
    "charge-sustaining": "charge_sustaining",
    "charge_depleting": "charge_depleting",
    "charge-depleting": "charge_depleting",
}

_GAIN_PRESETS = ("capacity-tracking", "diffusivity-identification")


# ---------------------------------------------------------------------------
# argv -> request-spec helpers
# ---------------------------------------------------------------------------


def _cycle_spec(arg: str, repeat: int = 1, remote: bool = False) -> s.CycleSpec:
    key = arg.strip().lower()
    if key in _REFERENCE_ALIASES:
        return s.CycleSpec(reference=_REFERENCE_ALIASES[key], repeat=repeat)
    path = Path(arg)
    if not path.is_file():
        names = ", ".join(sorted(set(_REFERENCE_ALIASES.values())))
        raise UsageError(f"cycle file not found: {arg} "
                         f"(pass a CSV path or one of: {names})")
    if remote:
        # inline the samples so the server never needs our filesystem
        cycle = _load_cycle_file(str(path))
        return s.CycleSpec(samples=s.CycleSamples(
            t_s=cycle.times.tolist(), current_A=cycle.currents.tolist(),
            temperature_K=cycle.temperatures.tolist(),
            voltage_V=(None if cycle.voltages is None
                       else cycle.voltages.tolist())),
            repeat=repeat, name=path.stem)
    return s.CycleSpec(path=str(path), repeat=repeat)


def _gain_spec(arg: str | None) -> s.GainSpec:
    if arg is None:
        return s.GainSpec()
    key = arg.strip().lower()
    if key in _GAIN_PRESETS:
        return s.GainSpec(preset=key)
    path = Path(arg)
    if not path.is_file():
        raise UsageError(f"gain file not found: {arg} (pass a gain file "
                         f"path or one of: {', '.join(_GAIN_PRESETS)})")
    return s.GainSpec(path=str(path))


def _parse_plant(text: str) -> float | None:
    key = text.strip().lower()
    if key == "fresh":
        return None
    if key.startswith("aged:"):
        value = key.split(":", 1)[1]
        try:
            return float(value)
        except ValueError:
            raise UsageError(f"cannot parse plant capacity {value!r} in "
                             f"{text!r}; expected aged:<capacity in Ah>")
    raise UsageError(f"cannot parse plant spec {text!r}; expected 'fresh' "
                     f"or 'aged:<capacity in Ah>'")


def _corruption(args) -> s.CorruptionSpecModel | None:
    values = (args.noise_current, args.noise_voltage,
              args.bias_current, args.bias_voltage)
    if all(v == 0.0 for v in values):
        return None
    return s.CorruptionSpecModel(
        noise_std_current_A=args.noise_current,
        noise_std_voltage_V=args.noise_voltage,
        bias_current_A=args.bias_current, bias_voltage_V=args.bias_voltage,
        seed=args.seed)


def _discretization(args) -> s.DiscretizationSpec:
    return s.DiscretizationSpec(n_solid=args.n_solid,
                                m_electrolyte=args.m_electrolyte, dt=args.dt)


def _outdir(args, command: str) -> Path:
    chosen = args.outdir or os.environ.get("ESPMKIT_OUTDIR")
    path = Path(chosen) if chosen else Path("espmkit-out") / command
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# output bundle writers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_config(outdir: Path, req) -> None:
    (outdir / "config.txt").write_text(req.model_dump_json(indent=2) + "\n")


def _write_summary(outdir: Path, items) -> None:
    text = "\n".join(f"{key} = {_fmt(val)}" for key, val in items) + "\n"
    (outdir / "summary.txt").write_text(text)


def _write_plant_series(path: Path, series: s.SimulateSeries | None) -> None:
    if series is None:
        return
    cols = np.column_stack([series.t_s, series.current_A,
                            series.temperature_K, series.voltage_V,
                            series.soc_n, series.soc_p, series.q_Ah])
    np.savetxt(path, cols, fmt="%.12g", delimiter=",", comments="",
               header=("# espmkit plant series v1\n"
                       "t_s,current_A,temperature_K,voltage_V,soc_n,soc_p,"
                       "q_Ah"))


def _write_estimate_series(path: Path, series: s.EstimateSeries | None) -> None:
    if series is None:
        return
    cols = np.column_stack([series.t_s, series.q_raw_Ah,
                            series.q_filtered_Ah,
                            series.diffusivity_anode_m2s,
                            series.film_lump_ohmAh,
                            series.residual_cathode_V,
                            series.residual_anode_V,
                            np.asarray(series.gate_open, dtype=float)])
    np.savetxt(path, cols, fmt="%.12g", delimiter=",", comments="",
               header=("# espmkit estimate series v1\n"
                       "t_s,q_raw_Ah,q_filtered_Ah,diffusivity_anode_m2s,"
                       "film_lump_ohmAh,residual_cathode_V,residual_anode_V,"
                       "gate_open"))


def _announce(outdir: Path) -> None:
    files = ", ".join(sorted(p.name for p in outdir.iterdir() if p.is_file()))
    print(f"wrote {outdir}{os.sep} ({files})")


def _fail(outdir: Path, command: str, stage: str, exc: EspmkitError) -> int:
    family = "usage" if isinstance(exc, UsageError) else "domain"
    (outdir / "error.txt").write_text(
        f"command = {command}\nstage = {stage}\nfamily = {family}\n\n{exc}\n")
    print(f"{command} failed at stage '{stage}' ({family} error): {exc}",
          file=sys.stderr)
    return 2 if family == "usage" else 1


# ---------------------------------------------------------------------------
# remote execution
# ---------------------------------------------------------------------------


def _remote_message(response: httpx.Response) -> str:
    try:
        body = response.json()
    except ValueError:
        return response.text[:500]
    if isinstance(body, dict):
        if "error" in body:
            return str(body["error"])
        if "detail" in body:
            return str(body["detail"])
    return str(body)[:500]


def _remote(server: str, endpoint: str, req, response_model):
    try:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            response = client.post(endpoint, json=req.model_dump(mode="json"))
    except httpx.HTTPError as exc:
        raise DomainError(f"server call to {server}{endpoint} failed: {exc}") \
            from exc
    if response.status_code in (400, 422):
        raise UsageError(_remote_message(response))
    if response.status_code == 409:
        raise DomainError(_remote_message(response))
    if response.status_code != 200:
        raise DomainError(f"server returned HTTP {response.status_code}: "
                          f"{_remote_message(response)}")
    return response_model.model_validate(response.json())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    outdir = _outdir(args, "simulate")
    stage = "configuration"
    try:
        remote = args.server is not None
        req = s.SimulateRequest(
            cycle=_cycle_spec(args.cycle, args.repeat, remote),
            params_path=args.params, initial_soc=args.soc,
            capacity_Ah=_parse_plant(args.plant),
            discretization=_discretization(args),
            stop_at_voltage_limits=not args.no_voltage_stop,
            include_series=remote)
        _write_config(outdir, req)
        stage = "simulation"
        if remote:
            resp = _remote(args.server, "/simulate", req, s.SimulateResponse)
            _write_plant_series(outdir / "plant.csv", resp.series)
        else:
            traj = run_simulate(req)
            traj.export(outdir / "plant.csv")
            resp = simulate_response(req, traj)
        _write_summary(outdir, [
            ("command", "simulate"), ("samples", resp.samples),
            ("stop_reason", resp.stop_reason),
            ("final_voltage_V", resp.final_voltage_V),
            ("final_soc_n", resp.final_soc_n),
            ("final_soc_p", resp.final_soc_p),
            ("final_q_Ah", resp.final_q_Ah)])
        print(f"simulate: {resp.samples} samples, stop_reason = "
              f"{resp.stop_reason}, final voltage {resp.final_voltage_V:.6g} V")
        _announce(outdir)
        return 0
    except EspmkitError as exc:
        return _fail(outdir, "simulate", stage, exc)


def cmd_observe(args) -> int:
    outdir = _outdir(args, "observe")
    stage = "configuration"
    try:
        remote = args.server is not None
        req = s.ObserveRequest(
            measurements=_cycle_spec(args.measurements, args.repeat, remote),
            params_path=args.params, gains=_gain_spec(args.gains),
            init=s.ObserverInit(soc_guess=args.soc_guess,
                                q_guess_Ah=args.q_guess,
                                theta1_fraction=args.theta1_fraction),
            discretization=_discretization(args), include_series=remote)
        _write_config(outdir, req)
        stage = "estimation"
        if remote:
            resp = _remote(args.server, "/observe", req, s.ObserveResponse)
            _write_estimate_series(outdir / "estimate.csv", resp.series)
        else:
            est = run_observe(req)
            est.export(outdir / "estimate.csv")
            resp = observe_response(req, est)
        items = [
            ("command", "observe"), ("samples", resp.samples),
            ("q_final_Ah", resp.q_final_Ah),
            ("q_final_raw_Ah", resp.q_final_raw_Ah),
            ("theta1_final_m2s", resp.theta1_final_m2s),
            ("theta2_final_ohmAh", resp.theta2_final_ohmAh),
            ("gate_time_s", resp.gate_time_s),
            ("residual_rms_post_gate_mV", resp.residual_rms_post_gate_mV),
            ("fault_count", resp.fault_count),
            ("warning_count", len(resp.warnings))]
        items += [(f"warning_{i + 1}", w) for i, w in enumerate(resp.warnings)]
        _write_summary(outdir, items)
        print(f"observe: q_final = {resp.q_final_Ah:.12g} Ah, gate opened at "
              f"{_fmt(resp.gate_time_s)} s")
        _announce(outdir)
        return 0
    except EspmkitError as exc:
        return _fail(outdir, "observe", stage, exc)


def cmd_twin(args) -> int:
    outdir = _outdir(args, "twin")
    stage = "configuration"
    try:
        remote = args.server is not None
        req = s.TwinRequest(
            cycle=_cycle_spec(args.cycle, args.repeat, remote),
            params_path=args.params, capacity_Ah=_parse_plant(args.plant),
            initial_soc=args.soc0, soc_error=args.soc_error,
            q_guess_Ah=args.q_guess, theta1_fraction=args.theta1_fraction,
            corruption=_corruption(args), gains=_gain_spec(args.gains),
            discretization=_discretization(args), include_series=remote)
        _write_config(outdir, req)
        if remote:
            stage = "estimation"
            resp = _remote(args.server, "/twin", req, s.TwinResponse)
            _write_plant_series(outdir / "plant.csv", resp.plant_series)
            _write_estimate_series(outdir / "estimate.csv", resp.series)
        else:
            completed: set[str] = set()

            def on_stage(name: str, artifact) -> None:
                completed.add(name)
                if name == "plant":
                    artifact.export(outdir / "plant.csv")
                elif name == "measurements":
                    save_measurement_stream(artifact,
                                            outdir / "measurements.csv")
                elif name == "estimate":
                    artifact.export(outdir / "estimate.csv")

            stage = "plant"
            try:
                result = run_twin_request(req, on_stage=on_stage)
            except EspmkitError:
                if "plant" in completed:
                    stage = "corruption"
                if "measurements" in completed:
                    stage = "estimation"
                raise
            stage = "scoring"
            resp = twin_response(req, result)
        items = [
            ("command", "twin"), ("samples", resp.samples),
            ("q_truth_Ah", resp.q_truth_Ah),
            ("q_estimate_Ah", resp.q_estimate_Ah),
            ("q_estimate_raw_Ah", resp.q_estimate_raw_Ah),
            ("q_error_pct", resp.q_error_pct),
            ("theta1_truth_m2s", resp.theta1_truth_m2s),
            ("theta1_estimate_m2s", resp.theta1_estimate_m2s),
            ("theta1_error_pct", resp.theta1_error_pct),
            ("theta2_truth_ohmAh", resp.theta2_truth_ohmAh),
            ("theta2_estimate_ohmAh", resp.theta2_estimate_ohmAh),
            ("gate_time_s", resp.gate_time_s),
            ("settle_time_2pct_s", resp.settle_time_2pct_s),
            ("residual_rms_post_gate_mV", resp.residual_rms_post_gate_mV),
            ("plant_stop_reason", resp.plant_stop_reason)]
        if req.corruption is not None:
            items.append(("corruption_seed", req.corruption.seed))
        items.append(("warning_count", len(resp.warnings)))
        items += [(f"warning_{i + 1}", w) for i, w in enumerate(resp.warnings)]
        _write_summary(outdir, items)
        print(f"twin: q_error_pct = {resp.q_error_pct:.12g} "
              f"(estimate {resp.q_estimate_Ah:.12g} Ah, "
              f"truth {resp.q_truth_Ah:.12g} Ah)")
        _announce(outdir)
        return 0
    except EspmkitError as exc:
        return _fail(outdir, "twin", stage, exc)


def cmd_sensitivity(args) -> int:
    outdir = _outdir(args, "sensitivity")
    stage = "configuration"
    try:
        remote = args.server is not None
        free = None if args.free is None else \
            [n.strip() for n in args.free.split(",") if n.strip()]
        req = s.SensitivityRequest(
            cycle=_cycle_spec(args.cycle, args.repeat, remote),
            params_path=args.params, initial_soc=args.soc, free_names=free,
            scheme=args.scheme, rel_step=args.rel_step,
            decimate=args.decimate, sens_threshold=args.sens_threshold,
            corr_threshold=args.corr_threshold,
            discretization=_discretization(args), include_correlation=True)
        _write_config(outdir, req)
        stage = "sensitivity"
        if remote:
            resp = _remote(args.server, "/sensitivity", req,
                           s.SensitivityResponse)
        else:
            resp = handle_sensitivity(req)
        with open(outdir / "ranking.csv", "w") as fh:
            fh.write("rank,name,multi_output_norm,voltage_only_norm\n")
            for rank, entry in enumerate(resp.ranking, start=1):
                fh.write(f"{rank},{entry.name},{entry.multi_output_norm:.12g},"
                         f"{entry.voltage_only_norm:.12g}\n")
        if resp.correlation is not None and resp.correlation_names is not None:
            with open(outdir / "correlation.csv", "w") as fh:
                fh.write("name," + ",".join(resp.correlation_names) + "\n")
                for name, row in zip(resp.correlation_names, resp.correlation):
                    fh.write(name + "," +
                             ",".join(f"{v:.12g}" for v in row) + "\n")
        items = [("command", "sensitivity"),
                 ("selected_count", len(resp.selected)),
                 ("selected", ", ".join(resp.selected))]
        items += [(f"rank_{i + 1}", f"{e.name} {e.multi_output_norm:.12g}")
                  for i, e in enumerate(resp.ranking)]
        items += [(f"excluded.{name}", reason)
                  for name, reason in resp.exclusions]
        items += [(f"flagged.{name}", reason)
                  for name, reason in resp.flagged.items()]
        _write_summary(outdir, items)
        print(f"sensitivity: selected {len(resp.selected)} parameters: "
              f"{', '.join(resp.selected)}")
        _announce(outdir)
        return 0
    except EspmkitError as exc:
        return _fail(outdir, "sensitivity", stage, exc)


def cmd_identify(args) -> int:
    outdir = _outdir(args, "identify")
    stage = "configuration"
    try:
        remote = args.server is not None
        free = [n.strip() for n in args.free.split(",") if n.strip()]
        if not free:
            raise UsageError("--free must name at least one parameter")
        initial_values = {}
        for pair in args.init or []:
            name, _, value = pair.partition("=")
            if not _:
                raise UsageError(f"cannot parse --init {pair!r}; expected "
                                 f"name=value")
            try:
                initial_values[name.strip()] = float(value)
            except ValueError:
                raise UsageError(f"cannot parse --init value in {pair!r}")
        weights = tuple(float(w) for w in args.weights.split(","))
        if len(weights) != 3:
            raise UsageError("--weights needs three comma-separated numbers")
        req = s.IdentifyRequest(
            measurements=_cycle_spec(args.measurements, args.repeat, remote),
            params_path=args.params, q_reference_Ah=args.q_reference,
            initial_soc=args.soc0, free_names=free,
            initial_values=initial_values or None, rel_bound=args.rel_bound,
            budget=args.budget, seed=args.seed, optimizer=args.optimizer,
            weights=weights, discretization=_discretization(args))
        _write_config(outdir, req)
        stage = "fit"
        if remote:
            resp = _remote(args.server, "/identify", req, s.IdentifyResponse)
        else:
            resp = handle_identify(req)
        with open(outdir / "history.csv", "w") as fh:
            fh.write("iteration,best_total_cost\n")
            for i, cost in enumerate(resp.history, start=1):
                fh.write(f"{i},{cost:.12g}\n")
        items = [("command", "identify")]
        items += [(f"fitted.{name}", value)
                  for name, value in resp.fitted.items()]
        items += [
            ("j1_voltage_rms_V", resp.j1_voltage_rms_V),
            ("j2_soc_cathode_rms", resp.j2_soc_cathode_rms),
            ("j3_soc_anode_rms", resp.j3_soc_anode_rms),
            ("total_cost", resp.total_cost), ("feasible", resp.feasible),
            ("evaluations", resp.evaluations), ("converged", resp.converged),
            ("seed", req.seed)]
        _write_summary(outdir, items)
        print(f"identify: total_cost = {resp.total_cost:.12g} after "
              f"{resp.evaluations} evaluations "
              f"({'converged' if resp.converged else 'budget reached'})")
        _announce(outdir)
        return 0
    except EspmkitError as exc:
        return _fail(outdir, "identify", stage, exc)


def cmd_validate_gains(args) -> int:
    outdir = _outdir(args, "validate-gains")
    stage = "configuration"
    try:
        req = s.ValidateGainsRequest(
            gains=_gain_spec(args.gains), params_path=args.params,
            error_fraction=args.error_fraction, soc=args.soc,
            discretization=_discretization(args))
        _write_config(outdir, req)
        stage = "validation"
        if args.server is not None:
            resp = _remote(args.server, "/validate-gains", req,
                           s.ValidateGainsResponse)
        else:
            resp = handle_validate_gains(req)
        items = [("command", "validate-gains"), ("passed", resp.passed)]
        for cond in resp.conditions:
            items.append((f"condition.{cond.name}", cond.passed))
            items.append((f"condition.{cond.name}.margin", cond.margin))
        _write_summary(outdir, items)
        print(f"validate-gains: {'PASS' if resp.passed else 'FAIL'} "
              f"({sum(c.passed for c in resp.conditions)}/"
              f"{len(resp.conditions)} conditions)")
        for cond in resp.conditions:
            print(f"  {'pass' if cond.passed else 'FAIL'}  {cond.name}: "
                  f"{cond.detail}")
        _announce(outdir)
        return 0 if resp.passed else 1
    except EspmkitError as exc:
        return _fail(outdir, "validate-gains", stage, exc)


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--outdir", default=None,
                   help="output directory (default: espmkit-out/<command>, "
                        "or $ESPMKIT_OUTDIR)")
    p.add_argument("--server", default=None, metavar="URL",
                   help="run against an espmkit HTTP service instead of "
                        "in-process")
    p.add_argument("--params", default=None,
                   help="cell parameter file (default: packaged reference "
                        "cell)")
    p.add_argument("--n-solid", type=int, default=10,
                   help="radial shells per particle (default 10)")
    p.add_argument("--m-electrolyte", type=int, default=30,
                   help="electrolyte volumes across the sandwich (default 30)")
    p.add_argument("--dt", type=float, default=1.0,
                   help="integrator step, s (default 1.0)")


def _add_cycle(p: argparse.ArgumentParser, flag: str = "--cycle") -> None:
    p.add_argument(flag, required=True,
                   help="drive-cycle CSV path, or charge_sustaining / "
                        "charge_depleting for the packaged surrogates")
    p.add_argument("--repeat", type=int, default=1,
                   help="repeat the cycle back-to-back N times (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="espmkit",
        description="Battery electrochemical simulation, capacity/health "
                    "estimation, and parameter identification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the electrochemical plant over "
                                        "a drive cycle")
    _add_cycle(p)
    p.add_argument("--soc", type=float, default=1.0,
                   help="initial bulk state of charge (default 1.0)")
    p.add_argument("--plant", default="fresh",
                   help="'fresh' or 'aged:<capacity Ah>' (default fresh)")
    p.add_argument("--no-voltage-stop", action="store_true",
                   help="keep integrating past the voltage cutoffs")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("observe", help="run the capacity/health estimator "
                                       "on a measurement stream")
    p.add_argument("--measurements", required=True,
                   help="measurement CSV with a voltage column")
    p.add_argument("--repeat", type=int, default=1,
                   help="repeat the stream back-to-back N times (default 1)")
    p.add_argument("--gains", default=None,
                   help="gain file path or preset: capacity-tracking "
                        "(default) / diffusivity-identification")
    p.add_argument("--soc-guess", type=float, default=0.30,
                   help="initial state-of-charge guess (default 0.30)")
    p.add_argument("--q-guess", type=float, default=2.1,
                   help="initial capacity guess, Ah (default 2.1)")
    p.add_argument("--theta1-fraction", type=float, default=1.0,
                   help="initial anode-diffusivity guess as a fraction of "
                        "nominal (default 1.0)")
    _add_common(p)
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("twin", help="simulate a truth plant, corrupt its "
                                    "outputs, estimate, and score")
    _add_cycle(p)
    p.add_argument("--plant", default="fresh",
                   help="'fresh' or 'aged:<capacity Ah>' (default fresh)")
    p.add_argument("--soc0", type=float, default=0.75,
                   help="plant initial state of charge (default 0.75)")
    p.add_argument("--soc-error", type=float, default=0.45,
                   help="estimator starts at soc0 minus this (default 0.45)")
    p.add_argument("--q-guess", type=float, default=2.1,
                   help="estimator initial capacity guess, Ah (default 2.1)")
    p.add_argument("--theta1-fraction", type=float, default=0.1,
                   help="estimator initial diffusivity fraction (default 0.1)")
    p.add_argument("--gains", default=None,
                   help="gain file path or preset: capacity-tracking "
                        "(default) / diffusivity-identification")
    p.add_argument("--noise-current", type=float, default=0.0,
                   help="current-noise standard deviation, A")
    p.add_argument("--noise-voltage", type=float, default=0.0,
                   help="voltage-noise standard deviation, V")
    p.add_argument("--bias-current", type=float, default=0.0,
                   help="constant current bias, A")
    p.add_argument("--bias-voltage", type=float, default=0.0,
                   help="constant voltage bias, V")
    p.add_argument("--seed", type=int, default=20260815,
                   help="corruption random seed (default 20260815)")
    _add_common(p)
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("sensitivity", help="rank parameter identifiability "
                                           "over a drive cycle")
    _add_cycle(p)
    p.add_argument("--soc", type=float, default=1.0,
                   help="initial state of charge (default 1.0)")
    p.add_argument("--free", default=None,
                   help="comma-separated parameter names (default: all)")
    p.add_argument("--scheme", choices=("central", "forward"),
                   default="central", help="finite-difference scheme")
    p.add_argument("--rel-step", type=float, default=1e-3,
                   help="relative perturbation step (default 1e-3)")
    p.add_argument("--decimate", type=int, default=1,
                   help="keep every Nth output sample (default 1)")
    p.add_argument("--sens-threshold", type=float, default=0.2,
                   help="minimum column norm relative to the largest "
                        "(default 0.2)")
    p.add_argument("--corr-threshold", type=float, default=0.8,
                   help="maximum pairwise collinearity (default 0.8)")
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("identify", help="fit selected parameters to a "
                                        "measurement stream")
    p.add_argument("--measurements", required=True,
                   help="measurement CSV with a voltage column")
    p.add_argument("--repeat", type=int, default=1,
                   help="repeat the stream back-to-back N times (default 1)")
    p.add_argument("--q-reference", type=float, required=True,
                   help="measured capacity for coulomb-counted references, Ah")
    p.add_argument("--soc0", type=float, required=True,
                   help="state of charge at the start of the stream")
    p.add_argument("--free", required=True,
                   help="comma-separated parameter names to fit")
    p.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="override a starting value (repeatable)")
    p.add_argument("--rel-bound", type=float, default=0.5,
                   help="box half-width around nominal, relative (default "
                        "0.5)")
    p.add_argument("--budget", type=int, default=4000,
                   help="objective evaluation budget (default 4000)")
    p.add_argument("--seed", type=int, default=20260815,
                   help="optimizer random seed (default 20260815)")
    p.add_argument("--optimizer", default="differential-evolution",
                   choices=("differential-evolution", "random-search"))
    p.add_argument("--weights", default="1,1,1",
                   help="comma-separated weights for the voltage and the "
                        "two state-of-charge residuals (default 1,1,1)")
    _add_common(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("validate-gains", help="check a gain set against "
                                              "every design condition")
    p.add_argument("--gains", default=None,
                   help="gain file path or preset: capacity-tracking "
                        "(default) / diffusivity-identification")
    p.add_argument("--error-fraction", type=float, default=0.45,
                   help="worst-case bulk concentration error, full-scale "
                        "fraction (default 0.45)")
    p.add_argument("--soc", type=float, default=0.5,
                   help="operating point for the checks (default 0.5)")
    _add_common(p)
    p.set_defaults(func=cmd_validate_gains)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error (usage): {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error (domain): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

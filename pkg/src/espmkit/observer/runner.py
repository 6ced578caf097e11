"""Streaming estimation over a measurement record, with gating and export.

`run_observer` drives an `InterconnectedObserver` over synchronized
(time, current, voltage, temperature) samples.  Capacity and parameter
adaptation stay disabled until the cathode residual settles: the residual
is low-pass prefiltered, its moving RMS over a sliding window must stay
below a threshold for a dwell period, and then the gate opens exactly once.
The capacity readout is additionally smoothed by a downstream first-order
filter; the raw estimate is preserved.

The module also provides the measurement-stream file format, the estimate
trajectory export, a persistence-of-excitation check on the input current,
and the composite descent function used by convergence spot-checks.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..aging import unpack_kappa_sei
from ..cycles import DriveCycle
from ..errors import DataFormatError, DomainError
from ..solid import radial_weights
from .core import InterconnectedObserver, Measurement, ObserverState
from .gains import ObserverGains

ESTIMATE_FORMAT_VERSION = 1

_ESTIMATE_COLUMNS = (
    "t_s", "current_A", "temperature_K", "voltage_meas_V",
    "y_hat_cathode_V", "y_hat_anode_V", "residual_cathode_V",
    "residual_anode_V", "cathode_bulk_molm3", "cathode_surface_molm3",
    "anode_bulk_molm3", "anode_surface_molm3", "q_raw_Ah", "q_filtered_Ah",
    "diffusivity_anode_m2s", "film_lump_ohmAh", "kappa_sei_Sm", "gate_open",
)


@dataclass
class EstimateTrajectory:
    """Per-sample estimation record.

    Scalar columns mirror the export format; the full radial estimates are
    kept as (S, N) arrays for convergence analysis but are not exported.
    """

    times: np.ndarray             # s
    currents: np.ndarray          # A
    temperatures: np.ndarray      # K
    voltages: np.ndarray          # V, measured
    y_hat_cathode: np.ndarray     # V
    y_hat_anode: np.ndarray       # V
    residual_cathode: np.ndarray  # V, measured minus cathode-loop prediction
    residual_anode: np.ndarray    # V
    bulk_cathode: np.ndarray      # mol/m^3, volume-averaged estimate
    surface_cathode: np.ndarray   # mol/m^3
    bulk_anode: np.ndarray        # mol/m^3
    surface_anode: np.ndarray     # mol/m^3
    q_raw: np.ndarray             # Ah, unfiltered capacity estimate
    q_filtered: np.ndarray        # Ah, downstream low-passed readout
    theta1: np.ndarray            # m^2/s, anode reference diffusivity estimate
    theta2: np.ndarray            # ohm/Ah, film lump estimate
    kappa_sei: np.ndarray         # S/m, unpacked film conductivity
    gate_open: np.ndarray         # bool per sample
    x1_hat: np.ndarray = field(repr=False)   # (S, N) cathode profiles
    x2_hat: np.ndarray = field(repr=False)   # (S, N) anode profiles
    gate_time: float | None = None
    faults: list[tuple[float, str]] = field(default_factory=list)
    events: list[tuple[float, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.times.size

    @property
    def gate_opened(self) -> bool:
        return self.gate_time is not None

    @property
    def final_capacity(self) -> float:
        """Filtered capacity at the last sample, Ah."""
        return float(self.q_filtered[-1])

    @property
    def final_capacity_raw(self) -> float:
        return float(self.q_raw[-1])

    def export(self, path: str | Path) -> None:
        """Write the documented per-sample columns as delimited text."""
        cols = np.column_stack([
            self.times, self.currents, self.temperatures, self.voltages,
            self.y_hat_cathode, self.y_hat_anode, self.residual_cathode,
            self.residual_anode, self.bulk_cathode, self.surface_cathode,
            self.bulk_anode, self.surface_anode, self.q_raw, self.q_filtered,
            self.theta1, self.theta2, self.kappa_sei,
            self.gate_open.astype(float),
        ])
        header = (f"# espmkit estimate trajectory v{ESTIMATE_FORMAT_VERSION}\n"
                  + ",".join(_ESTIMATE_COLUMNS))
        np.savetxt(path, cols, fmt="%.12g", delimiter=",", header=header,
                   comments="")


# ---------------------------------------------------------------------------
# measurement-stream file format: t_s, current_A, voltage_V, temperature_K
# ---------------------------------------------------------------------------

_STREAM_HEADER = ("t_s", "current_A", "voltage_V", "temperature_K")


def load_measurement_stream(path: str | Path, name: str | None = None) -> DriveCycle:
    """Parse a measurement stream file into a voltage-carrying drive cycle.

    Expected header: ``t_s,current_A,voltage_V,temperature_K``; every line
    must carry four finite numbers with strictly increasing timestamps.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read measurement stream {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    rows: list[list[float]] = []
    errors: list[str] = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row if c.strip() != ""]
        if not cells or cells[0].startswith("#"):
            continue
        if not header_seen:
            header_seen = True
            if [c.lower() for c in cells] == list(_STREAM_HEADER):
                continue
            errors.append(f"{path}:{lineno}: expected header "
                          f"{','.join(_STREAM_HEADER)!r}, got {','.join(cells)!r}")
            continue
        if len(cells) != 4:
            errors.append(f"{path}:{lineno}: expected 4 columns, got {len(cells)}")
            continue
        try:
            values = [float(c) for c in cells]
        except ValueError:
            errors.append(f"{path}:{lineno}: non-numeric entry in {cells!r}")
            continue
        if not all(np.isfinite(values)):
            errors.append(f"{path}:{lineno}: non-finite entry in {cells!r}")
            continue
        rows.append(values)
    if not header_seen:
        errors.append(f"{path}: empty measurement stream")
    if not rows and not errors:
        errors.append(f"{path}: no data rows")
    if errors:
        raise DataFormatError("\n".join(errors))
    data = np.array(rows)
    if np.any(np.diff(data[:, 0]) <= 0.0):
        k = int(np.argmax(np.diff(data[:, 0]) <= 0.0))
        raise DataFormatError(
            f"{path}: timestamps must be strictly increasing "
            f"(violation after t = {data[k, 0]:g} s)")
    return DriveCycle(times=data[:, 0], currents=data[:, 1],
                      temperatures=data[:, 3], voltages=data[:, 2],
                      name=name or path.stem, source=str(path))


def save_measurement_stream(measurements: DriveCycle, path: str | Path) -> None:
    """Write a voltage-carrying cycle in the measurement-stream layout."""
    if measurements.voltages is None:
        raise DomainError("measurement stream requires a voltage trace")
    cols = np.column_stack([measurements.times, measurements.currents,
                            measurements.voltages, measurements.temperatures])
    np.savetxt(path, cols, fmt="%.12g", delimiter=",",
               header=",".join(_STREAM_HEADER), comments="")


# ---------------------------------------------------------------------------
# the streaming loop
# ---------------------------------------------------------------------------

def run_observer(measurements: DriveCycle, model: InterconnectedObserver,
                 init: ObserverState) -> EstimateTrajectory:
    """Drive the estimator over a measurement record.

    Rows are recorded at each sample instant before stepping to the next,
    so row k holds the estimates and predicted outputs at t_k.  The gate
    decision made from the residual at t_k applies to the step leaving t_k.
    A stream that never satisfies the gating criterion completes with the
    gate closed and a warning attached to the trajectory.
    """
    if measurements.voltages is None:
        raise DomainError("observer input requires a measured voltage trace")
    times = np.asarray(measurements.times, dtype=float)
    currents = np.asarray(measurements.currents, dtype=float)
    temperatures = np.asarray(measurements.temperatures, dtype=float)
    voltages = np.asarray(measurements.voltages, dtype=float)
    n_samples = times.size
    if n_samples < 2:
        raise DomainError("observer input needs at least two samples")

    gating = model.gating
    cell = model.cell
    w = radial_weights(model.cfg.n_solid)
    obs = init.copy()

    faults: list[tuple[float, str]] = []
    events: list[tuple[float, str]] = []
    warnings: list[str] = []
    seen_flags: set[str] = set()
    gate_time: float | None = None

    # gating machine state
    prefilter: float | None = None
    rms_buffer: deque[tuple[float, float]] = deque()
    below_since: float | None = None

    rows = {key: [] for key in ("y1", "y2", "e1", "e2", "bp", "sp", "bn", "sn",
                                "q", "qf", "t1", "t2", "ks", "gate")}
    x1_hist, x2_hist = [], []
    prev_t = float(times[0])

    for k in range(n_samples):
        m = Measurement(float(times[k]), float(currents[k]),
                        float(voltages[k]), float(temperatures[k]))
        dt_meas = m.time - prev_t     # 0 at the first sample
        y1, y2 = model.output_pair(obs, m.current, m.temperature)
        e1, e2 = m.voltage - y1, m.voltage - y2

        # residual gate: prefilter -> moving RMS -> dwell; opens once
        if gate_time is None and np.isfinite(e1):
            if prefilter is None:
                prefilter = e1
            else:
                alpha = dt_meas / (gating.prefilter_tau + dt_meas) if dt_meas > 0 else 0.0
                prefilter += alpha * (e1 - prefilter)
            rms_buffer.append((m.time, prefilter))
            while rms_buffer and rms_buffer[0][0] < m.time - gating.rms_window:
                rms_buffer.popleft()
            rms = float(np.sqrt(np.mean([v * v for _, v in rms_buffer])))
            if rms < gating.threshold:
                if below_since is None:
                    below_since = m.time
                if m.time - below_since >= gating.dwell:
                    gate_time = m.time
                    obs.gate_open = True
                    events.append((m.time, f"residual gate opened (moving RMS "
                                           f"{rms * 1e3:.2f} mV)"))
            else:
                below_since = None

        # downstream capacity smoothing; the raw estimate stays untouched
        if dt_meas > 0.0:
            alpha_q = dt_meas / (gating.q_filter_tau + dt_meas)
            obs.q_filtered += alpha_q * (obs.x3_hat - obs.q_filtered)

        for flag in obs.range_flags(cell):
            if flag not in seen_flags:
                seen_flags.add(flag)
                events.append((m.time, flag))

        rows["y1"].append(y1)
        rows["y2"].append(y2)
        rows["e1"].append(e1)
        rows["e2"].append(e2)
        rows["bp"].append(float(w @ obs.x1_hat))
        rows["sp"].append(float(obs.x1_hat[-1]))
        rows["bn"].append(float(w @ obs.x2_hat))
        rows["sn"].append(float(obs.x2_hat[-1]))
        rows["q"].append(obs.x3_hat)
        rows["qf"].append(obs.q_filtered)
        rows["t1"].append(obs.theta1_hat)
        rows["t2"].append(obs.theta2_hat)
        rows["ks"].append(unpack_kappa_sei(obs.theta2_hat, cell, model.sei))
        rows["gate"].append(obs.gate_open)
        x1_hist.append(obs.x1_hat.copy())
        x2_hist.append(obs.x2_hat.copy())

        if k < n_samples - 1:
            dt = float(times[k + 1] - times[k])
            if dt <= 0.0:
                raise DomainError("measurement timestamps must be strictly increasing")
            obs, _, _ = model.step(obs, m, dt, faults, events)
        prev_t = m.time

    if gate_time is None:
        warnings.append("residual gate never opened; capacity and parameter "
                        "adaptation stayed disabled for the whole stream")

    return EstimateTrajectory(
        times=times.copy(), currents=currents.copy(),
        temperatures=temperatures.copy(), voltages=voltages.copy(),
        y_hat_cathode=np.array(rows["y1"]), y_hat_anode=np.array(rows["y2"]),
        residual_cathode=np.array(rows["e1"]), residual_anode=np.array(rows["e2"]),
        bulk_cathode=np.array(rows["bp"]), surface_cathode=np.array(rows["sp"]),
        bulk_anode=np.array(rows["bn"]), surface_anode=np.array(rows["sn"]),
        q_raw=np.array(rows["q"]), q_filtered=np.array(rows["qf"]),
        theta1=np.array(rows["t1"]), theta2=np.array(rows["t2"]),
        kappa_sei=np.array(rows["ks"]), gate_open=np.array(rows["gate"], dtype=bool),
        x1_hat=np.vstack(x1_hist), x2_hat=np.vstack(x2_hist),
        gate_time=gate_time, faults=faults, events=events, warnings=warnings,
    )


# ---------------------------------------------------------------------------
# input-richness check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PersistenceReport:
    """Sliding-window energy of the input current against configured bounds."""

    window: float          # s
    delta1: float          # A^2 s, lower bound
    delta2: float | None   # A^2 s, optional upper bound
    min_integral: float    # A^2 s
    max_integral: float    # A^2 s
    n_windows: int

    @property
    def satisfied(self) -> bool:
        upper_ok = self.delta2 is None or self.max_integral <= self.delta2
        return self.min_integral >= self.delta1 and upper_ok

    def __str__(self) -> str:
        status = "satisfied" if self.satisfied else "NOT satisfied"
        upper = "inf" if self.delta2 is None else f"{self.delta2:g}"
        return (f"excitation over {self.window:g} s windows: "
                f"integral in [{self.min_integral:.4g}, {self.max_integral:.4g}] "
                f"A^2 s vs bounds [{self.delta1:g}, {upper}] -> {status}")


def persistence_of_excitation_check(times, currents, window: float = 120.0,
                                    delta1: float = 10.0,
                                    delta2: float | None = None
                                    ) -> PersistenceReport:
    """Evaluate the squared-current integral over every sliding window.

    The scalar-input excitation measure is the integral of u^2 over
    [t, t + window]; the input is rich enough when every window's integral
    clears `delta1` (and stays below `delta2` when given).
    """
    t = np.asarray(times, dtype=float)
    u = np.asarray(currents, dtype=float)
    if t.size == 0:
        raise DomainError("excitation check requires a nonempty sequence")
    if t.size != u.size:
        raise DomainError(f"times and currents differ in length: {t.size} vs {u.size}")
    if t.size == 1 or t[-1] - t[0] < window:
        raise DomainError(
            f"record spans {0.0 if t.size == 1 else t[-1] - t[0]:g} s, shorter "
            f"than one {window:g} s window")
    usq = u * u
    # cumulative trapezoid of u^2, exact for piecewise-linear u^2
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (usq[1:] + usq[:-1]) * np.diff(t))])
    starts = t[t <= t[-1] - window]
    lo = np.interp(starts, t, cum)
    hi = np.interp(starts + window, t, cum)
    integrals = hi - lo
    return PersistenceReport(
        window=window, delta1=delta1, delta2=delta2,
        min_integral=float(integrals.min()), max_integral=float(integrals.max()),
        n_windows=int(integrals.size),
    )


# ---------------------------------------------------------------------------
# composite descent function for convergence spot-checks
# ---------------------------------------------------------------------------

def composite_lyapunov(est: EstimateTrajectory, truth_c_s_p: np.ndarray,
                       truth_c_s_n: np.ndarray, truth_q, truth_theta1: float,
                       truth_theta2: float, gains: ObserverGains) -> np.ndarray:
    """Per-sample value of the stacked quadratic error functional.

    Half the squared norms of both concentration error profiles plus half
    the squared capacity error plus the k1/k2-weighted squared parameter
    errors.  Truth profiles are (S, N) arrays aligned with the estimate
    samples; `truth_q` may be a scalar or a per-sample array.
    """
    if truth_c_s_p.shape != est.x1_hat.shape or truth_c_s_n.shape != est.x2_hat.shape:
        raise DomainError(
            f"truth profiles {truth_c_s_p.shape}/{truth_c_s_n.shape} do not match "
            f"estimate history {est.x1_hat.shape}")
    e1 = truth_c_s_p - est.x1_hat
    e2 = truth_c_s_n - est.x2_hat
    e3 = np.asarray(truth_q, dtype=float) - est.q_raw
    e_t1 = truth_theta1 - est.theta1
    e_t2 = truth_theta2 - est.theta2
    return (0.5 * np.sum(e1 * e1, axis=1) + 0.5 * np.sum(e2 * e2, axis=1)
            + 0.5 * e3 * e3 + 0.5 * gains.k1 * e_t1 * e_t1
            + 0.5 * gains.k2 * e_t2 * e_t2)

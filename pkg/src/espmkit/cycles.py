"""Drive-cycle I/O, synthetic surrogate cycles, and measurement corruption.

Current sign convention, fixed across every file format and module in this
package: positive current discharges the cell.  Cycle files are CSV with
header ``t_s,current_A,temperature_K`` and an optional ``voltage_V`` column
for externally measured (or plant-generated) voltage traces.

The shipped surrogate cycles stand in for proprietary vehicle traces: a
charge-sustaining one (aggressive, zero net charge, hybrid-vehicle
character) and a charge-depleting one (milder, net discharge).  Both are
generated deterministically by ``scripts/make_cycles.py`` and stored as
package data; the generator functions here rebuild them from a seed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError

DEFAULT_MAX_CURRENT = 500.0  # A, hardware-plausibility bound for file ingestion


@dataclass(frozen=True)
class DriveCycle:
    """Time-stamped current/temperature input, optionally with voltage."""

    times: np.ndarray         # s, strictly increasing
    currents: np.ndarray      # A, positive = discharge
    temperatures: np.ndarray  # K
    voltages: np.ndarray | None = None  # V, measured trace if present
    name: str = ""
    source: str = ""
    c_rate_scale: float = 1.0
    max_current: float = DEFAULT_MAX_CURRENT

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        i = np.asarray(self.currents, dtype=float)
        temp = np.asarray(self.temperatures, dtype=float)
        v = None if self.voltages is None else np.asarray(self.voltages, dtype=float)
        problems = []
        if t.ndim != 1 or t.size == 0:
            problems.append("times must be a non-empty 1-D array")
        for label, arr in (("currents", i), ("temperatures", temp)):
            if arr.shape != t.shape:
                problems.append(f"{label} shape {arr.shape} != times shape {t.shape}")
        if v is not None and v.shape != t.shape:
            problems.append(f"voltages shape {v.shape} != times shape {t.shape}")
        arrays = [t, i, temp] + ([] if v is None else [v])
        if any(not np.all(np.isfinite(a)) for a in arrays):
            problems.append("cycle contains non-finite values")
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            problems.append("timestamps must be strictly increasing")
        if np.any(np.abs(i) > self.max_current):
            problems.append(
                f"|current| exceeds plausibility bound {self.max_current} A "
                f"(max {np.max(np.abs(i)):.3f} A)")
        if problems:
            raise DomainError("; ".join(problems))
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "currents", i)
        object.__setattr__(self, "temperatures", temp)
        object.__setattr__(self, "voltages", v)

    def __len__(self) -> int:
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def net_charge_ah(self) -> float:
        """Net discharged charge over the cycle, Ah (trapezoid rule)."""
        return float(np.trapezoid(self.currents, self.times)) / 3600.0

    def repeat(self, count: int) -> "DriveCycle":
        """Tile the cycle `count` times end-to-end (constant sample spacing assumed
        for the seam: the gap between copies equals the first sample gap)."""
        if count < 1:
            raise DomainError(f"repeat count must be >= 1, got {count}")
        if count == 1:
            return self
        gap = float(self.times[1] - self.times[0]) if len(self) > 1 else 1.0
        period = self.duration + gap
        times = np.concatenate([self.times + k * period for k in range(count)])
        tile = lambda a: None if a is None else np.tile(a, count)
        return replace(self, times=times, currents=np.tile(self.currents, count),
                       temperatures=np.tile(self.temperatures, count),
                       voltages=tile(self.voltages),
                       name=f"{self.name}x{count}" if self.name else "")


# --------------------------------------------------------------------------
# CSV round-trip
# --------------------------------------------------------------------------

_BASE_HEADER = ["t_s", "current_A", "temperature_K"]
_VOLT_HEADER = _BASE_HEADER + ["voltage_V"]


def load_drive_cycle(path: str | Path, name: str | None = None,
                     max_current: float = DEFAULT_MAX_CURRENT) -> DriveCycle:
    """Read a cycle CSV; every parse error carries its line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read drive cycle {path}: {exc}") from exc

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}:1: empty file") from None
    header = [h.strip() for h in header]
    if header == _BASE_HEADER:
        has_voltage = False
    elif header == _VOLT_HEADER:
        has_voltage = True
    else:
        raise DataFormatError(
            f"{path}:1: expected header {','.join(_BASE_HEADER)}[,voltage_V], "
            f"got {','.join(header)!r}")

    errors: list[str] = []
    rows: list[list[float]] = []
    want = 4 if has_voltage else 3
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != want:
            errors.append(f"{path}:{lineno}: expected {want} columns, got {len(row)}")
            continue
        try:
            vals = [float(x) for x in row]
        except ValueError:
            errors.append(f"{path}:{lineno}: non-numeric value in {row!r}")
            continue
        if not all(np.isfinite(vals)):
            errors.append(f"{path}:{lineno}: non-finite value in {row!r}")
            continue
        if rows and vals[0] <= rows[-1][0]:
            kind = "duplicate" if vals[0] == rows[-1][0] else "non-increasing"
            errors.append(f"{path}:{lineno}: {kind} timestamp {vals[0]!r}")
            continue
        rows.append(vals)
    if errors:
        raise DataFormatError("\n".join(errors))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    data = np.array(rows)
    return DriveCycle(
        times=data[:, 0], currents=data[:, 1], temperatures=data[:, 2],
        voltages=data[:, 3] if has_voltage else None,
        name=path.stem if name is None else name, source=str(path),
        max_current=max_current,
    )


def save_drive_cycle(cycle: DriveCycle, path: str | Path) -> None:
    """Write a cycle CSV (voltage column included when present)."""
    path = Path(path)
    cols = [cycle.times, cycle.currents, cycle.temperatures]
    header = list(_BASE_HEADER)
    if cycle.voltages is not None:
        cols.append(cycle.voltages)
        header = list(_VOLT_HEADER)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([f"{x:.12g}" for x in row])


def reference_cycle_path(kind: str) -> Path:
    """Path of a shipped surrogate cycle: 'charge_sustaining' or 'charge_depleting'."""
    names = {
        "charge_sustaining": "us06_surrogate.csv",
        "charge_depleting": "udds_surrogate.csv",
    }
    if kind not in names:
        raise DomainError(f"unknown cycle kind {kind!r}; choose from {sorted(names)}")
    return Path(__file__).parent / "data" / "cycles" / names[kind]


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def constant_current_cycle(current: float, duration: float, dt: float = 1.0,
                           temperature: float = 298.15,
                           name: str = "cc") -> DriveCycle:
    times = np.arange(0.0, duration + dt * 0.5, dt)
    return DriveCycle(times=times, currents=np.full(times.size, float(current)),
                      temperatures=np.full(times.size, float(temperature)),
                      name=name, source="generated")


def rest_cycle(duration: float, dt: float = 1.0,
               temperature: float = 298.15) -> DriveCycle:
    return constant_current_cycle(0.0, duration, dt, temperature, name="rest")


def sinusoid_cycle(amplitude: float, period: float, n_periods: float = 1.0,
                   dt: float = 1.0, temperature: float = 298.15,
                   name: str = "sine") -> DriveCycle:
    """Zero-mean sinusoidal current over a whole number of periods.

    Slow periods (tens of minutes) concentrate the excitation in the band
    where solid-diffusion signatures dominate the terminal voltage, which
    is what the diffusivity-identification protocol needs.
    """
    if amplitude < 0.0:
        raise DomainError(f"amplitude must be >= 0, got {amplitude}")
    if period <= 0.0 or n_periods <= 0.0:
        raise DomainError(
            f"period and n_periods must be > 0, got {period}, {n_periods}")
    times = np.arange(0.0, n_periods * period + 0.5 * dt, dt)
    currents = amplitude * np.sin(2.0 * np.pi * times / period)
    return DriveCycle(times=times, currents=currents,
                      temperatures=np.full(times.size, float(temperature)),
                      name=name, source="generated")


def _vehicle_like_current(n: int, rng: np.random.Generator, peak: float,
                          regen_fraction: float) -> np.ndarray:
    """Piecewise accel/brake/idle segments smoothed to vehicle-trace texture."""
    current = np.zeros(n)
    k = 0
    while k < n:
        mode = rng.choice(("accel", "brake", "idle"), p=(0.45, 0.25, 0.30))
        length = int(rng.integers(5, 25))
        length = min(length, n - k)
        if mode == "accel":
            level = rng.uniform(0.3, 1.0) * peak
        elif mode == "brake":
            level = -rng.uniform(0.3, 1.0) * peak * regen_fraction
        else:
            level = rng.uniform(-0.02, 0.05) * peak
        ramp = np.linspace(0.0, 1.0, min(4, length))
        seg = np.full(length, level)
        seg[:ramp.size] *= ramp
        current[k:k + length] = seg
        k += length
    kernel = np.ones(5) / 5.0
    return np.convolve(current, kernel, mode="same")


def charge_sustaining_cycle(duration: float = 1200.0, dt: float = 1.0,
                            peak_current: float = 6.0, temperature: float = 298.15,
                            seed: int = 20260217) -> DriveCycle:
    """Aggressive hybrid-vehicle-like surrogate with exactly zero net charge."""
    rng = np.random.default_rng(seed)
    times = np.arange(0.0, duration + dt * 0.5, dt)
    current = _vehicle_like_current(times.size, rng, peak_current,
                                    regen_fraction=0.9)
    current -= current.mean()  # charge-sustaining: remove net throughput
    return DriveCycle(times=times, currents=current,
                      temperatures=np.full(times.size, temperature),
                      name="us06_surrogate", source=f"generated(seed={seed})")


def charge_depleting_cycle(duration: float = 1400.0, dt: float = 1.0,
                           peak_current: float = 3.0, temperature: float = 298.15,
                           mean_current: float = 0.35, seed: int = 20260218) -> DriveCycle:
    """Milder urban-like surrogate with a positive (depleting) mean current."""
    rng = np.random.default_rng(seed)
    times = np.arange(0.0, duration + dt * 0.5, dt)
    current = _vehicle_like_current(times.size, rng, peak_current,
                                    regen_fraction=0.5)
    current += mean_current - current.mean()
    return DriveCycle(times=times, currents=current,
                      temperatures=np.full(times.size, temperature),
                      name="udds_surrogate", source=f"generated(seed={seed})")


# --------------------------------------------------------------------------
# measurement corruption
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorruptionSpec:
    """Additive sensor-model corruption for current/voltage channels."""

    noise_std_current: float = 0.0  # A
    noise_std_voltage: float = 0.0  # V
    bias_current: float = 0.0       # A
    bias_voltage: float = 0.0       # V
    seed: int = 0

    def __post_init__(self):
        if self.noise_std_current < 0.0 or self.noise_std_voltage < 0.0:
            raise DomainError("noise standard deviations must be >= 0")


def corrupt(measurements: DriveCycle, spec: CorruptionSpec) -> DriveCycle:
    """Apply bias + zero-mean Gaussian noise to current and voltage channels.

    Time and temperature are untouched. Reproducible for a given seed.
    """
    if measurements.voltages is None:
        raise DomainError("corrupt() needs a measured-voltage channel")
    rng = np.random.default_rng(spec.seed)
    n = len(measurements)
    currents = (measurements.currents + spec.bias_current
                + spec.noise_std_current * rng.standard_normal(n))
    voltages = (measurements.voltages + spec.bias_voltage
                + spec.noise_std_voltage * rng.standard_normal(n))
    return replace(measurements, currents=currents, voltages=voltages,
                   name=f"{measurements.name}+corrupted",
                   max_current=max(measurements.max_current,
                                   float(np.max(np.abs(currents))) * 1.01))

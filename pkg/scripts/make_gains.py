#!/usr/bin/env python3
"""Regenerate the shipped default gain schedule.

Writes src/espmkit/data/observer_gains.cfg from the capacity-tracking
designer and the default gating configuration, so the packaged file always
matches the in-code defaults.  Run from the repository root:

    python3 scripts/make_gains.py
"""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from espmkit.ocp import load_reference_ocps
from espmkit.params import DiscretizationConfig, load_reference_parameters
from espmkit.observer import (GatingConfig, capacity_tracking_gains,
                              reference_gains_path, save_gains, validate_gains)


def main() -> None:
    cell, sei = load_reference_parameters()
    ocp_anode, ocp_cathode = load_reference_ocps()
    cfg = DiscretizationConfig()
    gains = capacity_tracking_gains(cell, sei, ocp_anode, ocp_cathode, cfg)
    report = validate_gains(gains, cell, sei, cfg)
    print(report)
    if not report.passed:
        raise SystemExit("refusing to ship a gain schedule that fails validation")
    path = reference_gains_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    save_gains(gains, GatingConfig(), path)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()

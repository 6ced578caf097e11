#!/usr/bin/env python3
"""Regenerate the shipped surrogate drive cycles.

The validation protocols call for two vehicle-like profiles: an aggressive
charge-sustaining trace and a milder charge-depleting trace.  The original
vehicle data is not redistributable, so the package ships synthetic
surrogates with matching statistical character (segment texture, C-rate
range, net-charge behavior), generated deterministically from fixed seeds.
Run from the repository root:

    python3 scripts/make_cycles.py
"""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from espmkit.cycles import (charge_depleting_cycle, charge_sustaining_cycle,
                            reference_cycle_path, save_drive_cycle)


def main() -> None:
    for kind, cycle in (
        ("charge_sustaining", charge_sustaining_cycle()),
        ("charge_depleting", charge_depleting_cycle()),
    ):
        path = reference_cycle_path(kind)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_drive_cycle(cycle, path)
        print(f"wrote {path} ({len(cycle.times)} samples, "
              f"net {cycle.net_charge_ah():+.6f} Ah, "
              f"peak |I| {abs(cycle.currents).max():.3f} A)")


if __name__ == "__main__":
    main()

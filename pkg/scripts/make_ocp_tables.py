"""Regenerate the shipped electrode OCP tables.

Functional forms are standard literature fits for graphite and NMC
half-cell potentials vs Li/Li+; entropic coefficients are smooth low-order
polynomials with physical (sub-mV/K) magnitudes.  Output: three-column
text (theta, U at 298.15 K, dU/dT).
"""

import numpy as np
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "espmkit" / "data"


def u_graphite(theta):
    return (0.7222 + 0.1387 * theta + 0.029 * theta ** 0.5
            - 0.0172 / theta + 0.0019 / theta ** 1.5
            + 0.2808 * np.exp(0.90 - 15.0 * theta)
            - 0.7984 * np.exp(0.4465 * theta - 0.4108))


def dudt_graphite(theta):
    # mV/K-scale entropic coefficient, positive at low lithiation
    return 1.0e-3 * (0.30 - 0.85 * theta + 0.45 * theta ** 2)


def u_nmc(theta):
    return (4.3452 - 1.6518 * theta + 1.6225 * theta ** 2
            - 2.0843 * theta ** 3 + 3.5146 * theta ** 4
            - 2.2166 * theta ** 5
            - 5.623e-5 * np.exp(109.451 * theta - 100.006))


def dudt_nmc(theta):
    return -1.0e-3 * (0.05 + 0.25 * theta)


def write_table(path, theta, u, dudt):
    with open(path, "w") as fh:
        fh.write("# theta    U_ref [V]    dU/dT [V/K]   (reference temperature 298.15 K)\n")
        for row in zip(theta, u, dudt):
            fh.write(f"{row[0]:.6f}  {row[1]:.9f}  {row[2]: .6e}\n")


def main():
    theta = np.round(np.arange(0.005, 0.9951, 0.005), 6)
    write_table(DATA_DIR / "ocp_anode_graphite.dat",
                theta, u_graphite(theta), dudt_graphite(theta))
    write_table(DATA_DIR / "ocp_cathode_nmc.dat",
                theta, u_nmc(theta), dudt_nmc(theta))
    print("wrote", DATA_DIR / "ocp_anode_graphite.dat")
    print("wrote", DATA_DIR / "ocp_cathode_nmc.dat")


if __name__ == "__main__":
    main()

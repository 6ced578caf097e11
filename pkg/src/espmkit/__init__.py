"""Battery cell simulation, aging, adaptive estimation, and identification.

The package layers four capabilities on one reference parameterization:

- `plant` / `solid` / `electrolyte` / `voltage`: a single-particle cell
  model with full electrolyte transport (the synthetic-truth plant) and
  its reduced constant-electrolyte variant (the estimation model).
- `aging`: anode-film growth algebra coupling capacity fade to power fade.
- `observer`: the two-loop interconnected sliding-mode estimator with
  gated capacity/diffusivity/film adaptation, gain design and validation.
- `ident`: output-sensitivity analysis, parameter subset selection, and
  multi-objective fitting of cycling records.

`twin` wires plant → corruption → estimator experiments; `service` and
`cli` expose everything over HTTP and the command line.
"""

__version__ = "0.1.0"

from .errors import (DataFormatError, DomainError, EspmkitError,
                     GainValidationError, IntegrationError,
                     ParameterValidationError, PoreClogError, UsageError)
from .params import (CellParameters, DiscretizationConfig, SeiParameters,
                     load_parameters, load_reference_parameters,
                     reference_parameter_path)
from .ocp import OcpTable, load_reference_ocps
from .cycles import (CorruptionSpec, DriveCycle, charge_depleting_cycle,
                     charge_sustaining_cycle, constant_current_cycle, corrupt,
                     load_drive_cycle, reference_cycle_path, rest_cycle,
                     save_drive_cycle, sinusoid_cycle)
from .plant import (EspmSimulator, EspmState, ReducedSpm, Trajectory, bulk_soc,
                    initial_state, simulate)
from .twin import (TwinConfig, TwinResult, diffusivity_identification_protocol,
                   measurements_from_trajectory, run_twin, score_twin)

__all__ = [
    "__version__",
    "DataFormatError", "DomainError", "EspmkitError", "GainValidationError",
    "IntegrationError", "ParameterValidationError", "PoreClogError",
    "UsageError",
    "CellParameters", "DiscretizationConfig", "SeiParameters",
    "load_parameters", "load_reference_parameters", "reference_parameter_path",
    "OcpTable", "load_reference_ocps",
    "CorruptionSpec", "DriveCycle", "charge_depleting_cycle",
    "charge_sustaining_cycle", "constant_current_cycle", "corrupt",
    "load_drive_cycle", "reference_cycle_path", "rest_cycle",
    "save_drive_cycle", "sinusoid_cycle",
    "EspmSimulator", "EspmState", "ReducedSpm", "Trajectory", "bulk_soc",
    "initial_state", "simulate",
    "TwinConfig", "TwinResult", "diffusivity_identification_protocol",
    "measurements_from_trajectory", "run_twin", "score_twin",
]

"""Parameter identifiability analysis and data fitting.

`sensitivity` answers "which physical parameters does a recorded cycle
actually inform?" via a normalized finite-difference sensitivity matrix,
column-correlation analysis, and greedy low-correlation subset selection.
`fit` then estimates the selected subset from voltage + coulomb-counted
SOC records with a pluggable derivative-free optimizer.
"""

from .sensitivity import (
    IDENT_PARAMETER_NAMES,
    OUTPUT_NAMES,
    CorrelationResult,
    ParameterVector,
    SensitivityMatrix,
    SensitivityRanking,
    SubsetSelection,
    candidate_cell,
    correlation_matrix,
    multi_vs_single_output_norms,
    sensitivity_matrix,
    subset_select,
)
from .fit import (
    DifferentialEvolutionOptimizer,
    FitCost,
    FitData,
    FitReport,
    OptimizerResult,
    RandomSearchOptimizer,
    coulomb_count_soc,
    fit,
    fit_cost,
)

__all__ = [
    "IDENT_PARAMETER_NAMES",
    "OUTPUT_NAMES",
    "CorrelationResult",
    "DifferentialEvolutionOptimizer",
    "FitCost",
    "FitData",
    "FitReport",
    "OptimizerResult",
    "ParameterVector",
    "RandomSearchOptimizer",
    "SensitivityMatrix",
    "SensitivityRanking",
    "SubsetSelection",
    "candidate_cell",
    "correlation_matrix",
    "coulomb_count_soc",
    "fit",
    "fit_cost",
    "multi_vs_single_output_norms",
    "sensitivity_matrix",
    "subset_select",
]

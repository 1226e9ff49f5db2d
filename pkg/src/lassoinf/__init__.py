"""Exact finite-sample inference for single coefficients in Gaussian linear
models, using the LASSO estimate of the tested coefficient as the test
statistic: p-values, confidence intervals by test inversion, versions valid
conditional on LASSO selection, an asymptotic wrapper for Gaussian-limit
estimators, and a theoretical power calculator for the proportional regime.
"""

from .errors import (
    ConsistencyError,
    ConvergenceError,
    DataError,
    DegenerateDesignError,
    DegenerateGridError,
    LassoinfError,
    NoSolutionError,
    NotSelectedError,
    NumericalError,
    PartitionError,
    PathError,
    ZeroResidualError,
)
from .linear_model import (
    Diagnostics,
    LinearModelData,
    NullDecomposition,
    TTestResult,
    decompose,
    diagnostics,
    g_map,
    reconstruct,
    sample_null_response,
    t_test,
)
from .null_law import LassoNullLaw
from .solver import (
    CvResult,
    LassoFit,
    PathInB,
    choose_lambda_hat,
    cross_validate,
    eval_path,
    kkt_check,
    lambda_grid,
    path_in_b,
    solve,
    solve_offset,
)
from .inference import (
    LassoTestResult,
    SeedRecord,
    asymptotic_lasso_test,
    lasso_test,
    lasso_test_at,
)
from .intervals import (
    ConfidenceInterval,
    default_grid,
    invert_on_grid,
    lasso_ci,
    oracle_one_sided_ci,
    t_ci,
)
from .post_selection import (
    SelectionContext,
    conditional_ci,
    conditional_p,
    conditional_p_general,
)
from .power_theory import (
    CoefPrior,
    FGDistribution,
    PowerEstimate,
    StateEvolutionSolution,
    asymptotic_power,
    fg_distribution,
    soft_threshold,
    soft_threshold_deriv,
    state_evolution,
)
from .dataio import ResultTable, load_csv
from .simulate import ScenarioConfig, Truth, generate_scenario, run_scenario

__version__ = "0.1.0"

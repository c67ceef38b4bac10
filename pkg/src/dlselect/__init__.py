"""Dual Lasso variable selection with Ridge refitting.

The coordinate-descent sweep runs in a compiled extension when it is
built; ``dlselect.BACKEND`` reports which kernel is active.
"""
from dlselect._kernels import BACKEND
from dlselect.conditions import (
    ConditionReport,
    beta_min_margin,
    check_ic,
    check_pic,
    check_psd,
    enumerate_candidate_submatrices,
    sign_vector,
)
from dlselect.data import (
    ActiveSet,
    CovariancePartition,
    Dataset,
    empirical_covariance,
    load_csv,
    partition_covariance,
    standardize,
)
from dlselect.dual import DualState, dual_active_set, dual_objective, dual_vector, duality_gap
from dlselect.lasso import (
    LassoFit,
    SolverOptions,
    fit_enet,
    fit_lasso,
    lambda_max,
    lasso_objective,
    lasso_path,
    soft_threshold,
)
from dlselect.pipeline import (
    PipelineResult,
    dlselect,
    dlselect_ridge,
    fit_dlselect_ridge,
    reduced_design,
    tune_lambda1,
    tune_lambda2,
)
from dlselect.ridge import RidgeFit, fit_ridge

__version__ = "0.1.0"

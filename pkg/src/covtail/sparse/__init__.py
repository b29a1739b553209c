from covtail.sparse.cone import ConeSpec, cone_excess, cone_membership, cone_probes
from covtail.sparse.design import (
    NormalizedDesign,
    SparseMinimum,
    inverse_sqrt_diagonal,
    iter_supports,
    normalize_design,
    sparse_lower_ratio,
    sparse_min_eigenvalue,
)
from covtail.sparse.experiments import (
    diag_plus_failure_bound,
    intermediate_sparsity,
    lasso_rate_experiment,
    rudelson_search,
    theorem_re_constants,
    theorem_re_experiment,
    theorem_re_sample_condition,
    transfer_search,
)
from covtail.sparse.lasso import LassoResult, kkt_gap, lasso_coordinate_descent, lasso_fit, lasso_lambda, soft_threshold
from covtail.sparse.restricted import REResult, restricted_eigenvalue, restricted_eigenvalue_all
from covtail.sparse.transfer import (
    RudelsonReport,
    RudelsonSparsity,
    TransferReport,
    random_rudelson_instance,
    random_rudelson_sigma,
    random_transfer_instance,
    rudelson_check,
    rudelson_sparsity,
    transfer_check,
)

__all__ = [
    "ConeSpec",
    "LassoResult",
    "NormalizedDesign",
    "REResult",
    "RudelsonReport",
    "RudelsonSparsity",
    "SparseMinimum",
    "TransferReport",
    "cone_excess",
    "cone_membership",
    "cone_probes",
    "diag_plus_failure_bound",
    "intermediate_sparsity",
    "inverse_sqrt_diagonal",
    "iter_supports",
    "kkt_gap",
    "lasso_coordinate_descent",
    "lasso_fit",
    "lasso_lambda",
    "lasso_rate_experiment",
    "normalize_design",
    "random_rudelson_instance",
    "random_rudelson_sigma",
    "random_transfer_instance",
    "restricted_eigenvalue",
    "restricted_eigenvalue_all",
    "rudelson_check",
    "rudelson_search",
    "rudelson_sparsity",
    "soft_threshold",
    "sparse_lower_ratio",
    "sparse_min_eigenvalue",
    "theorem_re_constants",
    "theorem_re_experiment",
    "theorem_re_sample_condition",
    "transfer_check",
    "transfer_search",
]

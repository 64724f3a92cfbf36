"""Symbolic transfer entropy with analytic significance tests.

Estimates TE between discretized asynchronous event series, tests it with
the chi-square (Wilks) and Vuong limits, checks both against resampling,
and builds Bonferroni-validated lead-lag networks.
"""

from .align import (
    CompareProfile,
    LagProfile,
    aligned_event_matrix,
    backward_match,
    lag_compare_scan,
    lag_scan,
)
from .benchgen import (
    BenchmarkDraw,
    DirichletSpec,
    EqualTeTarget,
    construct_equal_te,
    gen_false_null,
    gen_true_null,
    population_te_pair,
)
from .bootstrap import BootstrapConfig, resample_compare_pvalue, shuffle_pvalue
from .core import (
    EventMatrix,
    JointDistribution,
    StateSpec,
    SymbolSeries,
    build_event_matrix,
    conditional_entropy,
    encode_sign_changes,
    estimate_joint,
    pointwise_loglik_diff,
    transfer_entropy,
)
from .errors import DataError, DegenerateVarianceError, NonConvergenceError, SymteError
from .inference import (
    TeTestResult,
    VuongTestResult,
    te_significance_test,
    vuong_compare,
)
from .netinfer import (
    LeadLagNetwork,
    NetworkJob,
    assortativity,
    coarse_grain,
    infer_network,
)
from .special import chi2_sf, normal_sf

__version__ = "0.1.0"

__all__ = [
    "BenchmarkDraw", "BootstrapConfig", "CompareProfile", "DataError",
    "DegenerateVarianceError", "DirichletSpec", "EqualTeTarget", "EventMatrix",
    "JointDistribution", "LagProfile", "LeadLagNetwork", "NetworkJob",
    "NonConvergenceError", "StateSpec", "SymbolSeries", "SymteError",
    "TeTestResult", "VuongTestResult", "aligned_event_matrix", "assortativity",
    "backward_match", "build_event_matrix", "chi2_sf", "coarse_grain",
    "conditional_entropy", "construct_equal_te", "encode_sign_changes",
    "estimate_joint", "gen_false_null", "gen_true_null", "infer_network",
    "lag_compare_scan", "lag_scan", "normal_sf", "pointwise_loglik_diff",
    "population_te_pair", "resample_compare_pvalue", "shuffle_pvalue",
    "te_significance_test", "transfer_entropy", "vuong_compare",
]

"""Exact and rounded classification scores as a label side channel.

Log-loss and AUC reported about a hidden labeling leak that labeling.
This package makes the leak concrete: prediction vectors whose exact
log-loss decodes back to every label in one query, the precision-limited
variant that recovers labels batch by batch from rounded scores, and a
membership-inference harness with a strict curator/adversary boundary.
"""

from .core import (
    ClassLabeling,
    DecimalScore,
    ExactScore,
    Labeling,
    PredictionMatrix,
    PredictionVector,
    ScoreKind,
    auc,
    auc_exact,
    exact_score,
    exact_score_multiclass,
    format_rational,
    logloss_decimal,
    parse_decimal_score,
    parse_rational,
    prediction_vector,
    round_fraction_sig,
)
from .errors import (
    DecodeError,
    LookupBuildError,
    LossProbeError,
    OracleProtocolError,
    PrecisionError,
    ValidationError,
)
from .exact import (
    DEFAULT_LIMITS,
    Limits,
    binary_decimal_response,
    build_binary_vector,
    build_multiclass_matrix,
    build_twin_prime_vector,
    decode_binary,
    decode_binary_from_decimal,
    decode_multiclass,
    decode_twin_prime,
    decode_twin_prime_value,
    required_precision_binary,
)
from .mia import (
    AttackMode,
    AttackReport,
    CandidateSet,
    CuratorOracle,
    MembershipVector,
    ScoringView,
    curator_oracle,
    fixed_precision_attack,
    one_query_attack,
    perturb_prime,
    run_demo,
)
from .precision import (
    AttackPlan,
    BatchSpec,
    TupleLookup,
    batched_inference,
    build_tuple_lookup,
    curated_batch_vector,
    max_unique_batch,
    min_digits_for_separation,
    pad_with_half,
    plan_batches,
    query_bound,
    tuple_lookup_for,
)

__all__ = [
    "AttackMode",
    "AttackPlan",
    "AttackReport",
    "BatchSpec",
    "CandidateSet",
    "ClassLabeling",
    "CuratorOracle",
    "DEFAULT_LIMITS",
    "DecimalScore",
    "DecodeError",
    "ExactScore",
    "Labeling",
    "Limits",
    "LookupBuildError",
    "LossProbeError",
    "MembershipVector",
    "OracleProtocolError",
    "PrecisionError",
    "PredictionMatrix",
    "PredictionVector",
    "ScoreKind",
    "ScoringView",
    "TupleLookup",
    "ValidationError",
    "auc",
    "auc_exact",
    "batched_inference",
    "binary_decimal_response",
    "build_binary_vector",
    "build_multiclass_matrix",
    "build_tuple_lookup",
    "build_twin_prime_vector",
    "curated_batch_vector",
    "curator_oracle",
    "decode_binary",
    "decode_binary_from_decimal",
    "decode_multiclass",
    "decode_twin_prime",
    "decode_twin_prime_value",
    "exact_score",
    "exact_score_multiclass",
    "fixed_precision_attack",
    "format_rational",
    "logloss_decimal",
    "max_unique_batch",
    "min_digits_for_separation",
    "one_query_attack",
    "pad_with_half",
    "parse_decimal_score",
    "parse_rational",
    "perturb_prime",
    "plan_batches",
    "prediction_vector",
    "query_bound",
    "required_precision_binary",
    "round_fraction_sig",
    "run_demo",
    "tuple_lookup_for",
]

__version__ = "0.1.0"

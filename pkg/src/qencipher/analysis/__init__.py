"""Exact, closed-form, optimised and sampled pass probabilities."""
from .closed_forms import (
    ab_vectors,
    f_value,
    pair_kernel,
    pair_kernel_entries,
    pb_entangled_closed_form,
    pb_pair,
    pb_pair_density,
    pb_single_side,
)
from .exact import (
    PassProbabilityReport,
    apply_local_superops,
    key_average,
    pair_transfer,
    pb_entangled_pairs,
    pb_exact,
    pb_exact_enumerate,
    post_check_state,
    superop,
)
from .amplification import (
    AmplificationChain,
    attacked_pass_probability,
    chain_pass_probability,
    ir_bound,
    privacy_amplification,
    replacement_pass_probability,
)
from .baseline import baseline_check_sample, baseline_check_scheme, check_survival
from .bounds import OBJECTIVES, BoundSearchResult, maximize_pb
from .montecarlo import blind_eve_fidelity, mc_baseline, mc_chain, mc_estimate

__all__ = [
    "OBJECTIVES",
    "AmplificationChain",
    "BoundSearchResult",
    "PassProbabilityReport",
    "ab_vectors",
    "apply_local_superops",
    "attacked_pass_probability",
    "baseline_check_sample",
    "baseline_check_scheme",
    "blind_eve_fidelity",
    "chain_pass_probability",
    "check_survival",
    "f_value",
    "ir_bound",
    "key_average",
    "maximize_pb",
    "mc_baseline",
    "mc_chain",
    "mc_estimate",
    "pair_kernel",
    "pair_kernel_entries",
    "pair_transfer",
    "pb_entangled_closed_form",
    "pb_entangled_pairs",
    "pb_exact",
    "pb_exact_enumerate",
    "pb_pair",
    "pb_pair_density",
    "pb_single_side",
    "post_check_state",
    "privacy_amplification",
    "replacement_pass_probability",
    "superop",
]

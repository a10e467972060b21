"""puredp: approximate-to-pure differential privacy conversion and its
application suite (DP-ERM, Frank-Wolfe, PTR, mode release, AdaSSP, MWEM),
plus a statistical privacy/utility auditor and an experiment CLI."""

from .core import (
    DiscretePurifyResult,
    LqBall,
    PurifyInfo,
    PurifyParams,
    RngStream,
    analytic_gaussian_sigma,
    bin_decode,
    bin_embed,
    calibrate_delta_w8,
    clip_to_ball,
    folklore_mix_apply,
    folklore_mix_discrete,
    purify,
    purify_discrete,
    purify_discrete_batch,
    purify_l1_bound,
    sample_uniform_ball,
)
from .accounting import (
    SgdHyperParams,
    discrete_delta_threshold,
    purify_hyperparams_sgd,
    sgd_hyperparams,
    subsampled_gaussian_zcdp,
    zcdp_to_dp,
)

__version__ = "0.1.0"

__all__ = [
    "DiscretePurifyResult",
    "LqBall",
    "PurifyInfo",
    "PurifyParams",
    "RngStream",
    "SgdHyperParams",
    "analytic_gaussian_sigma",
    "bin_decode",
    "bin_embed",
    "calibrate_delta_w8",
    "clip_to_ball",
    "discrete_delta_threshold",
    "folklore_mix_apply",
    "folklore_mix_discrete",
    "purify",
    "purify_discrete",
    "purify_discrete_batch",
    "purify_hyperparams_sgd",
    "purify_l1_bound",
    "sample_uniform_ball",
    "sgd_hyperparams",
    "subsampled_gaussian_zcdp",
    "zcdp_to_dp",
]

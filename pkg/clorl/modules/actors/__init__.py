from clorl.modules.actors.policy import (
    ACTION_EPS,
    LOG_STD_MAX,
    LOG_STD_MIN,
    DeterministicPolicy,
    GaussianPolicy,
    ReparamSample,
    SampledPolicy,
    Squash,
    det_action,
    det_action_backward,
    det_action_cached,
    gauss_head,
    gauss_logprob,
    gauss_logprob_and_grad,
    gauss_mean_action,
    gauss_rsample,
    gauss_rsample_backward,
    gauss_sample_and_logprob,
)

__all__ = [
    "ACTION_EPS",
    "LOG_STD_MAX",
    "LOG_STD_MIN",
    "DeterministicPolicy",
    "GaussianPolicy",
    "ReparamSample",
    "SampledPolicy",
    "Squash",
    "det_action",
    "det_action_backward",
    "det_action_cached",
    "gauss_head",
    "gauss_logprob",
    "gauss_logprob_and_grad",
    "gauss_mean_action",
    "gauss_rsample",
    "gauss_rsample_backward",
    "gauss_sample_and_logprob",
]

"""
Policy heads.

DeterministicPolicy: tanh(MLP(state)), the TD3-style actor.
GaussianPolicy: MLP(state) -> (mean, log_std) per action dimension with
log_std clamped to [LOG_STD_MIN, LOG_STD_MAX]; either tanh-squashed
(SAC family) or an unsquashed normal evaluated at clipped actions (IQL).

All functions take batches (B, obs_dim); randomness always comes from an
explicit numpy Generator.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from clorl.core.exceptions import ConfigException, ShapeMismatchException
from clorl.modules.neural.mlp import ForwardCache, backward, forward_cached
from clorl.modules.neural.model import ParamSet
from clorl.modules.neural.schema import MlpSpec

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
ACTION_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class Squash(str, Enum):
    TANH = "tanh"
    CLIPPED_IDENTITY = "clipped_identity"


# ===============================
# Deterministic actor
# ===============================

@dataclass(frozen=True)
class DeterministicPolicy:
    spec: MlpSpec
    params: ParamSet

    @property
    def action_dim(self) -> int:
        return self.spec.output_dim

    def act(self, observations: np.ndarray, t: int = 0) -> np.ndarray:
        return det_action(self, observations)


def det_action_cached(policy: DeterministicPolicy, states) -> Tuple[np.ndarray, ForwardCache]:
    pre, cache = forward_cached(policy.params, policy.spec, states)
    return np.tanh(pre), cache


def det_action(policy: DeterministicPolicy, states) -> np.ndarray:
    return det_action_cached(policy, states)[0]


def det_action_backward(
    policy: DeterministicPolicy,
    cache: ForwardCache,
    actions: np.ndarray,
    grad_actions: np.ndarray,
) -> ParamSet:
    """Parameter gradient of sum(grad_actions * tanh(MLP(s)))."""
    grads, _ = backward(policy.params, policy.spec, cache.inputs, grad_actions * (1.0 - actions ** 2), cache)
    return grads


# ===============================
# Gaussian actors
# ===============================

@dataclass(frozen=True)
class GaussianPolicy:
    spec: MlpSpec
    params: ParamSet
    squash: Squash = Squash.TANH

    def __post_init__(self):
        if self.spec.output_dim % 2 != 0:
            raise ShapeMismatchException(
                message="Gaussian head needs an even output width (mean, log_std)",
                details={"output_dim": self.spec.output_dim}
            )

    @property
    def action_dim(self) -> int:
        return self.spec.output_dim // 2

    def act(self, observations: np.ndarray, t: int = 0) -> np.ndarray:
        return gauss_mean_action(self, observations)


@dataclass(frozen=True)
class GaussianHead:
    mean: np.ndarray
    log_std: np.ndarray
    std: np.ndarray
    log_std_mask: np.ndarray
    cache: ForwardCache


@dataclass(frozen=True)
class ReparamSample:
    actions: np.ndarray
    log_prob: np.ndarray
    pre_tanh: np.ndarray
    noise: np.ndarray
    head: GaussianHead


def gauss_head(
    policy: GaussianPolicy,
    states,
    train_rng: Optional[np.random.Generator] = None,
) -> GaussianHead:
    out, cache = forward_cached(policy.params, policy.spec, states, train_rng)
    out = np.atleast_2d(out)
    d = policy.action_dim
    mean, raw_log_std = out[:, :d], out[:, d:]
    log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
    mask = (raw_log_std >= LOG_STD_MIN) & (raw_log_std <= LOG_STD_MAX)
    return GaussianHead(mean=mean, log_std=log_std, std=np.exp(log_std), log_std_mask=mask, cache=cache)


def _normal_logpdf(noise: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    return -0.5 * noise ** 2 - log_std - _HALF_LOG_2PI


def _tanh_correction(actions: np.ndarray) -> np.ndarray:
    return np.log(1.0 - actions ** 2 + ACTION_EPS)


def _head_backward(policy: GaussianPolicy, head: GaussianHead, grad_mean: np.ndarray, grad_log_std: np.ndarray) -> ParamSet:
    upstream = np.concatenate([grad_mean, grad_log_std * head.log_std_mask], axis=1)
    grads, _ = backward(policy.params, policy.spec, head.cache.inputs, upstream, head.cache)
    return grads


def gauss_mean_action(policy: GaussianPolicy, states) -> np.ndarray:
    """Deterministic head used for evaluation."""
    head = gauss_head(policy, states)
    if policy.squash == Squash.TANH:
        actions = np.tanh(head.mean)
    else:
        actions = np.clip(head.mean, -1.0, 1.0)
    return actions[0] if np.asarray(states).ndim == 1 else actions


def gauss_rsample(
    policy: GaussianPolicy,
    states,
    rng: np.random.Generator,
    train_rng: Optional[np.random.Generator] = None,
) -> ReparamSample:
    head = gauss_head(policy, states, train_rng)
    noise = rng.standard_normal(head.mean.shape)
    pre = head.mean + head.std * noise
    if policy.squash == Squash.TANH:
        actions = np.tanh(pre)
        log_prob = np.sum(_normal_logpdf(noise, head.log_std) - _tanh_correction(actions), axis=-1)
    else:
        actions = np.clip(pre, -1.0, 1.0)
        clipped = np.clip(pre, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)
        log_prob = np.sum(_normal_logpdf((clipped - head.mean) / head.std, head.log_std), axis=-1)
    return ReparamSample(actions=actions, log_prob=log_prob, pre_tanh=pre, noise=noise, head=head)


def gauss_sample_and_logprob(policy: GaussianPolicy, states, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    sample = gauss_rsample(policy, states, rng)
    if np.asarray(states).ndim == 1:
        return sample.actions[0], sample.log_prob[0]
    return sample.actions, sample.log_prob


def gauss_rsample_backward(
    policy: GaussianPolicy,
    sample: ReparamSample,
    grad_actions: np.ndarray,
    grad_log_prob: np.ndarray,
) -> ParamSet:
    """
    Pathwise gradient of sum(grad_actions * actions + grad_log_prob * log_prob)
    with the sampling noise held fixed.
    """
    if policy.squash != Squash.TANH:
        raise ConfigException(
            message="Reparameterized gradients require the tanh squash",
            details={"squash": policy.squash.value}
        )
    a = sample.actions
    head = sample.head
    g_lp = grad_log_prob[:, None]
    one_minus_sq = 1.0 - a ** 2
    grad_pre = grad_actions * one_minus_sq + g_lp * 2.0 * a * one_minus_sq / (one_minus_sq + ACTION_EPS)
    grad_mean = grad_pre
    grad_log_std = grad_pre * head.std * sample.noise - g_lp
    return _head_backward(policy, head, grad_mean, grad_log_std)


def _logprob_terms(policy: GaussianPolicy, head: GaussianHead, actions: np.ndarray):
    clipped = np.clip(actions, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)
    if policy.squash == Squash.TANH:
        pre = np.arctanh(clipped)
        noise = (pre - head.mean) / head.std
        log_prob = np.sum(_normal_logpdf(noise, head.log_std) - _tanh_correction(clipped), axis=-1)
    else:
        noise = (clipped - head.mean) / head.std
        log_prob = np.sum(_normal_logpdf(noise, head.log_std), axis=-1)
    return log_prob, noise


def gauss_logprob(policy: GaussianPolicy, states, actions) -> np.ndarray:
    states = np.asarray(states)
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    if actions.shape[-1] != policy.action_dim:
        raise ShapeMismatchException(
            message="Action dimension mismatch",
            details={"expected": policy.action_dim, "received": actions.shape[-1]}
        )
    head = gauss_head(policy, states)
    log_prob, _ = _logprob_terms(policy, head, actions)
    return log_prob[0] if states.ndim == 1 else log_prob


def gauss_logprob_and_grad(
    policy: GaussianPolicy,
    states: np.ndarray,
    actions: np.ndarray,
    upstream: np.ndarray,
    train_rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ParamSet]:
    """log pi(a|s) for fixed actions and the parameter gradient of sum(upstream * log pi)."""
    head = gauss_head(policy, states, train_rng)
    log_prob, noise = _logprob_terms(policy, head, actions)
    u = upstream[:, None]
    grad_mean = u * noise / head.std
    grad_log_std = u * (noise ** 2 - 1.0)
    return log_prob, _head_backward(policy, head, grad_mean, grad_log_std)


# ===============================
# Evaluation wrappers
# ===============================

@dataclass
class SampledPolicy:
    """Acts with sampled actions instead of the deterministic head."""
    policy: GaussianPolicy
    rng: np.random.Generator

    def act(self, observations: np.ndarray, t: int = 0) -> np.ndarray:
        actions, _ = gauss_sample_and_logprob(self.policy, observations, self.rng)
        return actions

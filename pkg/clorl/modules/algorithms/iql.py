"""
IQL: expectile-regressed V, Q regressed on r + gamma * V(s'), and an
advantage-weighted Gaussian actor. The V network always keeps the scalar
expectile loss; only the twin Q critics switch between MSE and CE heads.
"""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from clorl.modules.actors import GaussianPolicy, Squash, gauss_logprob_and_grad
from clorl.modules.algorithms.critic import CriticHead, critic_spec, critic_step, q_min
from clorl.modules.algorithms.schema import IqlConfig
from clorl.modules.data import Batch
from clorl.modules.neural import (
    AdamState,
    LrSchedule,
    MlpSpec,
    ParamSet,
    adam_step,
    backward,
    forward,
    forward_cached,
    init_params,
    soft_update,
)

N_CRITICS = 2


@dataclass(frozen=True, eq=False)
class IqlState:
    actor_spec: MlpSpec
    critic_spec: MlpSpec
    value_spec: MlpSpec
    actor: ParamSet
    actor_opt: AdamState
    critics: Tuple[ParamSet, ...]
    critic_targets: Tuple[ParamSet, ...]
    critic_opts: Tuple[AdamState, ...]
    value: ParamSet
    value_opt: AdamState
    step: int = 0

    @property
    def policy(self) -> GaussianPolicy:
        return GaussianPolicy(self.actor_spec, self.actor, Squash.CLIPPED_IDENTITY)

    @property
    def networks(self) -> Dict[str, Tuple[MlpSpec, ParamSet]]:
        nets = {"actor": (self.actor_spec, self.actor), "value": (self.value_spec, self.value)}
        for index, params in enumerate(self.critics):
            nets[f"critic{index}"] = (self.critic_spec, params)
        return nets


def init_iql(
    config: IqlConfig,
    head: CriticHead,
    obs_dim: int,
    act_dim: int,
    rng: np.random.Generator,
    n_steps: Optional[int] = None,
) -> IqlState:
    actor_spec = MlpSpec(
        input_dim=obs_dim,
        hidden_dim=config.hidden_dim,
        n_hidden_layers=config.n_hidden_layers,
        output_dim=2 * act_dim,
        dropout_rate=config.dropout_rate,
    )
    value_spec = MlpSpec(
        input_dim=obs_dim,
        hidden_dim=config.hidden_dim,
        n_hidden_layers=config.n_hidden_layers,
        output_dim=1,
    )
    c_spec = critic_spec(obs_dim, act_dim, head, config.hidden_dim, config.n_hidden_layers)

    decay_steps = config.decay_steps or n_steps
    schedule = LrSchedule.cosine(decay_steps) if decay_steps else LrSchedule.constant()
    actor = init_params(actor_spec, rng)
    critics = tuple(init_params(c_spec, rng) for _ in range(N_CRITICS))
    value = init_params(value_spec, rng)
    return IqlState(
        actor_spec=actor_spec,
        critic_spec=c_spec,
        value_spec=value_spec,
        actor=actor,
        actor_opt=AdamState.init(actor, config.actor_lr, schedule),
        critics=critics,
        critic_targets=tuple(c.map(np.copy) for c in critics),
        critic_opts=tuple(AdamState.init(c, config.critic_lr) for c in critics),
        value=value,
        value_opt=AdamState.init(value, config.value_lr),
    )


def expectile_weights(diff: np.ndarray, expectile: float) -> np.ndarray:
    return np.where(diff > 0, expectile, 1.0 - expectile)


def expectile_loss(diff: np.ndarray, expectile: float) -> np.ndarray:
    """Elementwise w(diff) * diff^2 with w = expectile above zero, 1 - expectile below."""
    diff = np.asarray(diff, dtype=np.float64)
    return expectile_weights(diff, expectile) * diff ** 2


def awr_weights(q_values: np.ndarray, values: np.ndarray, inv_temperature: float, adv_clip: float = 100.0) -> np.ndarray:
    """clip(exp(beta * (Q - V)), -adv_clip, adv_clip)"""
    with np.errstate(over="ignore"):
        weights = np.exp(inv_temperature * (q_values - values))
    return np.clip(weights, -adv_clip, adv_clip)


def value_loss_and_grads(
    value: ParamSet,
    value_spec: MlpSpec,
    states: np.ndarray,
    q_targets: np.ndarray,
    expectile: float,
) -> Tuple[float, ParamSet]:
    v, cache = forward_cached(value, value_spec, states)
    v = v[:, 0]
    diff = q_targets - v
    loss = float(np.mean(expectile_loss(diff, expectile)))
    grad_v = -2.0 * expectile_weights(diff, expectile) * diff / diff.shape[0]
    grads, _ = backward(value, value_spec, None, grad_v[:, None], cache)
    return loss, grads


def iql_v_update(
    state: IqlState,
    batch: Batch,
    config: IqlConfig,
    head: CriticHead,
) -> Tuple[IqlState, Dict[str, float]]:
    q_targets = q_min(state.critic_targets, state.critic_spec, head, batch.states, batch.actions)
    loss, grads = value_loss_and_grads(state.value, state.value_spec, batch.states, q_targets, config.expectile)
    value_opt, value = adam_step(state.value_opt, state.value, grads)
    return replace(state, value=value, value_opt=value_opt), {"value_loss": loss}


def iql_q_targets(state: IqlState, batch: Batch, gamma: float) -> np.ndarray:
    next_v = forward(state.value, state.value_spec, batch.next_states)[:, 0]
    return batch.rewards + gamma * (1.0 - batch.dones) * next_v


def iql_q_update(
    state: IqlState,
    batch: Batch,
    config: IqlConfig,
    head: CriticHead,
) -> Tuple[IqlState, Dict[str, float]]:
    """Twin critics toward r + gamma * V(s'); targets follow with a soft update."""
    targets = iql_q_targets(state, batch, config.gamma)
    fit = critic_step(
        state.critics, state.critic_opts, state.critic_spec, head,
        batch.states, batch.actions, targets,
    )
    critic_targets = tuple(
        soft_update(target, online, config.tau)
        for target, online in zip(state.critic_targets, fit.critics)
    )
    diagnostics = {"critic_loss": fit.loss, "q_mean": fit.q_mean}
    if fit.entropy is not None:
        diagnostics["q_entropy"] = fit.entropy
    return replace(state, critics=fit.critics, critic_opts=fit.optimizers, critic_targets=critic_targets), diagnostics


def iql_actor_loss_and_grads(
    policy: GaussianPolicy,
    states: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    train_rng: Optional[np.random.Generator] = None,
) -> Tuple[float, ParamSet]:
    """loss = -mean(weights * log pi(a|s))"""
    upstream = -weights / weights.shape[0]
    log_prob, grads = gauss_logprob_and_grad(policy, states, actions, upstream, train_rng)
    return float(-np.mean(weights * log_prob)), grads


def iql_actor_update(
    state: IqlState,
    batch: Batch,
    config: IqlConfig,
    head: CriticHead,
    dropout_rng: Optional[np.random.Generator] = None,
) -> Tuple[IqlState, Dict[str, float]]:
    values = forward(state.value, state.value_spec, batch.states)[:, 0]
    q_values = q_min(state.critic_targets, state.critic_spec, head, batch.states, batch.actions)
    weights = awr_weights(q_values, values, config.inv_temperature, config.adv_clip)
    loss, grads = iql_actor_loss_and_grads(state.policy, batch.states, batch.actions, weights, dropout_rng)
    actor_opt, actor = adam_step(state.actor_opt, state.actor, grads)
    return replace(state, actor=actor, actor_opt=actor_opt), {"actor_loss": loss}


def iql_train_step(
    state: IqlState,
    batch: Batch,
    config: IqlConfig,
    head: CriticHead,
    dropout_rng: Optional[np.random.Generator] = None,
) -> Tuple[IqlState, Dict[str, float]]:
    """V, then Q, then the actor, each once per step."""
    state, v_diag = iql_v_update(state, batch, config, head)
    state, q_diag = iql_q_update(state, batch, config, head)
    state, a_diag = iql_actor_update(state, batch, config, head, dropout_rng)
    return replace(state, step=state.step + 1), {**v_diag, **q_diag, **a_diag}

"""
LB-SAC: SAC-N (N-critic ensemble, min over the ensemble for pessimism)
trained with large batches. The temperature is learned on log-alpha with
target entropy -action_dim by default.
"""

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from clorl.core.exceptions import ConfigException
from clorl.modules.actors import GaussianPolicy, Squash, gauss_rsample, gauss_rsample_backward
from clorl.modules.algorithms.critic import CriticHead, critic_spec, critic_step, q_min, q_min_action_grad
from clorl.modules.algorithms.schema import LbSacConfig
from clorl.modules.data import Batch
from clorl.modules.neural import AdamState, MlpSpec, ParamSet, adam_step, init_params, soft_update


@dataclass(frozen=True, eq=False)
class LbSacState:
    actor_spec: MlpSpec
    critic_spec: MlpSpec
    actor: ParamSet
    actor_opt: AdamState
    critics: Tuple[ParamSet, ...]
    critic_targets: Tuple[ParamSet, ...]
    critic_opts: Tuple[AdamState, ...]
    log_alpha: ParamSet
    alpha_opt: AdamState
    target_entropy: float
    step: int = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0][0]))

    @property
    def policy(self) -> GaussianPolicy:
        return GaussianPolicy(self.actor_spec, self.actor, Squash.TANH)

    @property
    def networks(self) -> Dict[str, Tuple[MlpSpec, ParamSet]]:
        nets = {"actor": (self.actor_spec, self.actor)}
        for index, params in enumerate(self.critics):
            nets[f"critic{index}"] = (self.critic_spec, params)
        return nets


def init_lbsac(
    config: LbSacConfig,
    head: CriticHead,
    obs_dim: int,
    act_dim: int,
    rng: np.random.Generator,
) -> LbSacState:
    if config.n_critics < 2:
        raise ConfigException(message="LB-SAC needs at least 2 critics", details={"n_critics": config.n_critics})
    actor_spec = MlpSpec(
        input_dim=obs_dim,
        hidden_dim=config.hidden_dim,
        n_hidden_layers=config.n_hidden_layers,
        output_dim=2 * act_dim,
    )
    c_spec = critic_spec(obs_dim, act_dim, head, config.hidden_dim, config.n_hidden_layers)
    actor = init_params(actor_spec, rng)
    critics = tuple(init_params(c_spec, rng) for _ in range(config.n_critics))
    log_alpha = ParamSet((np.array([config.init_log_alpha]),))
    target_entropy = config.target_entropy if config.target_entropy is not None else -float(act_dim)
    return LbSacState(
        actor_spec=actor_spec,
        critic_spec=c_spec,
        actor=actor,
        actor_opt=AdamState.init(actor, config.actor_lr),
        critics=critics,
        critic_targets=tuple(c.map(np.copy) for c in critics),
        critic_opts=tuple(AdamState.init(c, config.critic_lr) for c in critics),
        log_alpha=log_alpha,
        alpha_opt=AdamState.init(log_alpha, config.alpha_lr),
        target_entropy=target_entropy,
    )


def lbsac_td_target(
    rewards: np.ndarray,
    dones: np.ndarray,
    next_q_min: np.ndarray,
    next_log_prob: np.ndarray,
    alpha: float,
    gamma: float,
) -> np.ndarray:
    """y = r + (1 - done) * gamma * (min_N Q'(s', a') - alpha * log pi(a'|s'))"""
    return rewards + (1.0 - dones) * gamma * (next_q_min - alpha * next_log_prob)


def lbsac_critic_update(
    state: LbSacState,
    batch: Batch,
    config: LbSacConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> Tuple[LbSacState, Dict[str, float]]:
    sample = gauss_rsample(state.policy, batch.next_states, rng)
    next_q = q_min(state.critic_targets, state.critic_spec, head, batch.next_states, sample.actions)
    targets = lbsac_td_target(batch.rewards, batch.dones, next_q, sample.log_prob, state.alpha, config.gamma)
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


def lbsac_actor_loss_and_grads(
    policy: GaussianPolicy,
    critics,
    c_spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
) -> Tuple[float, ParamSet, np.ndarray]:
    """loss = mean(alpha * log pi(a|s) - min_N Q(s, a)), a ~ pi(s) reparameterized."""
    sample = gauss_rsample(policy, states, rng)
    batch = sample.actions.shape[0]
    q_values, dq_da = q_min_action_grad(critics, c_spec, head, states, sample.actions)
    loss = float(np.mean(alpha * sample.log_prob - q_values))
    grads = gauss_rsample_backward(
        policy, sample,
        grad_actions=-dq_da / batch,
        grad_log_prob=np.full(batch, alpha / batch),
    )
    return loss, grads, sample.log_prob


def lbsac_alpha_loss_and_grad(log_alpha: float, log_prob: np.ndarray, target_entropy: float) -> Tuple[float, float]:
    """loss = -log_alpha * mean(log pi + target_entropy)"""
    slack = float(np.mean(log_prob + target_entropy))
    return -log_alpha * slack, -slack


def lbsac_actor_alpha_update(
    state: LbSacState,
    batch: Batch,
    config: LbSacConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> Tuple[LbSacState, Dict[str, float]]:
    loss, grads, log_prob = lbsac_actor_loss_and_grads(
        state.policy, state.critics, state.critic_spec, head, batch.states, state.alpha, rng
    )
    actor_opt, actor = adam_step(state.actor_opt, state.actor, grads)

    alpha_loss, alpha_grad = lbsac_alpha_loss_and_grad(
        float(state.log_alpha[0][0]), log_prob, state.target_entropy
    )
    alpha_opt, log_alpha = adam_step(state.alpha_opt, state.log_alpha, ParamSet((np.array([alpha_grad]),)))
    new_state = replace(state, actor=actor, actor_opt=actor_opt, log_alpha=log_alpha, alpha_opt=alpha_opt)
    return new_state, {
        "actor_loss": loss,
        "alpha_loss": alpha_loss,
        "alpha": new_state.alpha,
        "entropy": float(-np.mean(log_prob)),
    }


def lbsac_train_step(
    state: LbSacState,
    batch: Batch,
    config: LbSacConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> Tuple[LbSacState, Dict[str, float]]:
    """Critic, actor, then alpha, each once per step."""
    state, critic_diag = lbsac_critic_update(state, batch, config, head, rng)
    state, actor_diag = lbsac_actor_alpha_update(state, batch, config, head, rng)
    return replace(state, step=state.step + 1), {**critic_diag, **actor_diag}

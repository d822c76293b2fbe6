"""
ReBRAC: TD3+BC with behavior-cloning penalties in both the actor loss (beta1)
and the critic target (beta2), twin critics, delayed actor updates and
target networks for the actor and both critics.
"""

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from clorl.modules.actors import DeterministicPolicy, det_action, det_action_backward, det_action_cached
from clorl.modules.algorithms.critic import CriticHead, critic_spec, critic_step, q_min, q_min_action_grad
from clorl.modules.algorithms.schema import RebracConfig
from clorl.modules.data import Batch
from clorl.modules.neural import AdamState, MlpSpec, ParamSet, adam_step, init_params, soft_update

N_CRITICS = 2


@dataclass(frozen=True, eq=False)
class RebracState:
    actor_spec: MlpSpec
    critic_spec: MlpSpec
    actor: ParamSet
    actor_target: ParamSet
    actor_opt: AdamState
    critics: Tuple[ParamSet, ...]
    critic_targets: Tuple[ParamSet, ...]
    critic_opts: Tuple[AdamState, ...]
    step: int = 0

    @property
    def policy(self) -> DeterministicPolicy:
        return DeterministicPolicy(self.actor_spec, self.actor)

    @property
    def networks(self) -> Dict[str, Tuple[MlpSpec, ParamSet]]:
        nets = {"actor": (self.actor_spec, self.actor)}
        for index, params in enumerate(self.critics):
            nets[f"critic{index}"] = (self.critic_spec, params)
        return nets


def init_rebrac(
    config: RebracConfig,
    head: CriticHead,
    obs_dim: int,
    act_dim: int,
    rng: np.random.Generator,
) -> RebracState:
    actor_spec = MlpSpec(
        input_dim=obs_dim,
        hidden_dim=config.hidden_dim,
        n_hidden_layers=config.n_hidden_layers,
        output_dim=act_dim,
    )
    c_spec = critic_spec(obs_dim, act_dim, head, config.hidden_dim, config.n_hidden_layers)
    actor = init_params(actor_spec, rng)
    critics = tuple(init_params(c_spec, rng) for _ in range(N_CRITICS))
    return RebracState(
        actor_spec=actor_spec,
        critic_spec=c_spec,
        actor=actor,
        actor_target=actor.map(np.copy),
        actor_opt=AdamState.init(actor, config.actor_lr),
        critics=critics,
        critic_targets=tuple(c.map(np.copy) for c in critics),
        critic_opts=tuple(AdamState.init(c, config.critic_lr) for c in critics),
    )


def rebrac_td_target(
    rewards: np.ndarray,
    dones: np.ndarray,
    next_q_min: np.ndarray,
    bc_penalty: np.ndarray,
    gamma: float,
    beta2: float,
) -> np.ndarray:
    """y = r + (1 - done) * gamma * (min Q' - beta2 * ||a' - a_data'||^2)"""
    return rewards + (1.0 - dones) * gamma * (next_q_min - beta2 * bc_penalty)


def rebrac_critic_targets(
    state: RebracState,
    batch: Batch,
    config: RebracConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> np.ndarray:
    target_policy = DeterministicPolicy(state.actor_spec, state.actor_target)
    next_actions = det_action(target_policy, batch.next_states)
    noise = np.clip(
        rng.standard_normal(next_actions.shape) * config.policy_noise,
        -config.noise_clip,
        config.noise_clip,
    )
    next_actions = np.clip(next_actions + noise, -1.0, 1.0)
    bc_penalty = np.sum((next_actions - batch.next_actions) ** 2, axis=-1)
    next_q = q_min(state.critic_targets, state.critic_spec, head, batch.next_states, next_actions)
    return rebrac_td_target(batch.rewards, batch.dones, next_q, bc_penalty, config.gamma, config.beta2)


def rebrac_critic_update(
    state: RebracState,
    batch: Batch,
    config: RebracConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> Tuple[RebracState, Dict[str, float]]:
    targets = rebrac_critic_targets(state, batch, config, head, rng)
    fit = critic_step(
        state.critics, state.critic_opts, state.critic_spec, head,
        batch.states, batch.actions, targets,
    )
    diagnostics = {"critic_loss": fit.loss, "q_mean": fit.q_mean}
    if fit.entropy is not None:
        diagnostics["q_entropy"] = fit.entropy
    return replace(state, critics=fit.critics, critic_opts=fit.optimizers), diagnostics


def rebrac_actor_loss_and_grads(
    actor: ParamSet,
    actor_spec: MlpSpec,
    critics,
    c_spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    dataset_actions: np.ndarray,
    beta1: float,
    normalize_q: bool,
) -> Tuple[float, ParamSet, Dict[str, float]]:
    """
    loss = mean(beta1 * ||pi(s) - a||^2 - lambda * min_i Q_i(s, pi(s)))
    with lambda = 1 / mean|Q| held constant when normalize_q.
    """
    policy = DeterministicPolicy(actor_spec, actor)
    actions, cache = det_action_cached(policy, states)
    batch = actions.shape[0]
    q_values, dq_da = q_min_action_grad(critics, c_spec, head, states, actions)

    lmbda = 1.0
    if normalize_q:
        mean_abs = float(np.mean(np.abs(q_values)))
        lmbda = 1.0 / mean_abs if mean_abs > 0 else 1.0

    delta = actions - dataset_actions
    bc_penalty = np.sum(delta ** 2, axis=-1)
    loss = float(np.mean(beta1 * bc_penalty - lmbda * q_values))
    grad_actions = (2.0 * beta1 * delta - lmbda * dq_da) / batch
    grads = det_action_backward(policy, cache, actions, grad_actions)
    return loss, grads, {"actor_loss": loss, "bc_penalty": float(bc_penalty.mean()), "lambda": lmbda}


def rebrac_actor_update(
    state: RebracState,
    batch: Batch,
    config: RebracConfig,
    head: CriticHead,
) -> Tuple[RebracState, Dict[str, float]]:
    """Actor step on the online critics, then soft-update actor and critic targets."""
    _, grads, diagnostics = rebrac_actor_loss_and_grads(
        state.actor, state.actor_spec, state.critics, state.critic_spec, head,
        batch.states, batch.actions, config.beta1, config.normalize_q,
    )
    actor_opt, actor = adam_step(state.actor_opt, state.actor, grads)
    new_state = replace(
        state,
        actor=actor,
        actor_opt=actor_opt,
        actor_target=soft_update(state.actor_target, actor, config.tau),
        critic_targets=tuple(
            soft_update(target, online, config.tau)
            for target, online in zip(state.critic_targets, state.critics)
        ),
    )
    return new_state, diagnostics


def rebrac_train_step(
    state: RebracState,
    batch: Batch,
    config: RebracConfig,
    head: CriticHead,
    rng: np.random.Generator,
) -> Tuple[RebracState, Dict[str, float]]:
    """Critic every step; actor (and target updates) every ``actor_update_every`` steps."""
    state, diagnostics = rebrac_critic_update(state, batch, config, head, rng)
    state = replace(state, step=state.step + 1)
    if state.step % config.actor_update_every == 0:
        state, actor_diag = rebrac_actor_update(state, batch, config, head)
        diagnostics["actor_loss"] = actor_diag["actor_loss"]
    return state, diagnostics

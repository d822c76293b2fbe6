"""
Fitted TD iteration of a per-(state, action) critic on a finite MDP.

Inputs are one-hot (s, a) codes into a network without hidden layers, so
each pair owns its own output row. Each outer iteration freezes the
Bellman target r + gamma * max_a' Q(s', a') and runs a block of full-batch
Adam steps toward it with the chosen head.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from clorl.modules.algorithms.critic import CriticHead
from clorl.modules.algorithms.schema import HeadKind
from clorl.modules.categorical_value import ExpandKind, ExpandStrategy, make_transform
from clorl.modules.envs import TabularMdp
from clorl.modules.neural import AdamState, LrSchedule, MlpSpec, adam_step, backward, forward_cached, init_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TabularFit:
    q_values: np.ndarray
    head: CriticHead
    bellman_residual: float

    @property
    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.q_values, axis=1)


def tabular_head(mdp: TabularMdp, kind: HeadKind, gamma: float, m: int = 401, padding: float = 0.1) -> CriticHead:
    """Categorical support spans [r_min, r_max] / (1 - gamma), padded on both sides."""
    if HeadKind(kind) == HeadKind.MSE:
        return CriticHead.scalar()
    v_min = float(mdp.rewards.min()) / (1.0 - gamma)
    v_max = float(mdp.rewards.max()) / (1.0 - gamma)
    if v_max <= v_min:
        v_min, v_max = v_min - 0.5, v_max + 0.5
    expand = ExpandStrategy(kind=ExpandKind.BOTH, v_expand=2.0 * padding)
    return CriticHead.categorical(make_transform(v_min, v_max, m=m, expand=expand))


def fitted_td_tabular(
    mdp: TabularMdp,
    kind: HeadKind,
    gamma: float,
    m: int = 401,
    n_outer: int = 150,
    n_inner: int = 100,
    lr: float = 0.05,
    seed: int = 0,
    head: Optional[CriticHead] = None,
) -> TabularFit:
    head = head or tabular_head(mdp, kind, gamma, m)
    n_pairs = mdp.n_states * mdp.n_actions
    spec = MlpSpec(input_dim=n_pairs, n_hidden_layers=0, output_dim=head.output_dim)
    params = init_params(spec, np.random.default_rng(seed))
    opt = AdamState.init(params, lr, LrSchedule.cosine(n_outer * n_inner))
    inputs = np.eye(n_pairs)
    rewards = mdp.rewards.reshape(-1)
    next_state = mdp.next_state.reshape(-1)

    def q_table(p) -> np.ndarray:
        out, _ = forward_cached(p, spec, inputs)
        return head.scalarize(out)[0].reshape(mdp.n_states, mdp.n_actions)

    for _ in range(n_outer):
        targets = rewards + gamma * q_table(params).max(axis=1)[next_state]
        for _ in range(n_inner):
            out, cache = forward_cached(params, spec, inputs)
            _, g_out = head.loss_and_grad(out, targets)
            grads, _ = backward(params, spec, None, g_out, cache)
            opt, params = adam_step(opt, params, grads)

    q_values = q_table(params)
    residual = float(np.max(np.abs(
        q_values.reshape(-1) - (rewards + gamma * q_values.max(axis=1)[next_state])
    )))
    logger.info(f"Fitted TD ({head.kind.value}) on {mdp.n_states}x{mdp.n_actions} MDP: residual={residual:.3e}")
    return TabularFit(q_values=q_values, head=head, bellman_residual=residual)

"""
Exact finite-horizon Q tables over a discretized toy environment.

States are snapped to the nearest grid point per dimension; since the
horizon is finite, backward induction is exact on the grid MDP.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from clorl.core.exceptions import ConfigException
from clorl.modules.envs.model import EnvState, TabularMdp, ToyEnv

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OracleGrid:
    env: ToyEnv
    gamma: float
    state_res: int
    action_res: int
    tol: float
    state_axes: List[np.ndarray]
    action_grid: np.ndarray
    q_table: np.ndarray
    residual: float
    greedy_return: float = float("nan")

    @property
    def n_states(self) -> int:
        return int(self.q_table.shape[1])

    @property
    def n_actions(self) -> int:
        return int(self.q_table.shape[2])

    def snap(self, observations: np.ndarray) -> np.ndarray:
        return snap_to_grid(self.env, self.state_res, observations)

    def greedy_action(self, observations: np.ndarray, t: int) -> np.ndarray:
        t = min(max(t, 0), self.q_table.shape[0] - 1)
        best = np.argmax(self.q_table[t, self.snap(observations)], axis=-1)
        return self.action_grid[best]


def snap_to_grid(env: ToyEnv, state_res: int, observations: np.ndarray) -> np.ndarray:
    """Flat grid index of the nearest grid point for each observation."""
    obs = np.atleast_2d(observations)
    low, high = env.state_low, env.state_high
    coords = np.rint((obs - low) / (high - low) * (state_res - 1)).astype(np.int64)
    coords = np.clip(coords, 0, state_res - 1)
    return np.ravel_multi_index(tuple(coords.T), (state_res,) * env.obs_dim)


class OraclePolicy:
    def __init__(self, grid: OracleGrid):
        self.grid = grid

    def act(self, observations: np.ndarray, t: int) -> np.ndarray:
        return self.grid.greedy_action(observations, t)


def _grid_points(axes: List[np.ndarray]) -> np.ndarray:
    return np.array(list(itertools.product(*axes)), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class GridModel:
    """Grid states, grid actions, per-state reward and snapped successor indices."""
    states: np.ndarray
    action_grid: np.ndarray
    rewards: np.ndarray
    next_index: np.ndarray
    state_axes: List[np.ndarray]


def discretize(env: ToyEnv, state_res: int, action_res: int) -> GridModel:
    if state_res < 2 or action_res < 2:
        raise ConfigException(
            message="Oracle grid resolutions must be at least 2",
            details={"state_res": state_res, "action_res": action_res}
        )
    state_axes = [np.linspace(lo, hi, state_res) for lo, hi in zip(env.state_low, env.state_high)]
    states = _grid_points(state_axes)
    action_grid = _grid_points([np.linspace(-1.0, 1.0, action_res)] * env.act_dim)
    n_states, n_actions = states.shape[0], action_grid.shape[0]
    next_states = env.dynamics(
        np.repeat(states, n_actions, axis=0), np.tile(action_grid, (n_states, 1))
    )
    return GridModel(
        states=states,
        action_grid=action_grid,
        rewards=env.reward(states),
        next_index=snap_to_grid(env, state_res, next_states).reshape(n_states, n_actions),
        state_axes=state_axes,
    )


def grid_mdp(env: ToyEnv, state_res: int, action_res: int) -> TabularMdp:
    """The discretized environment as a stationary TabularMdp (reward depends on the state only)."""
    model = discretize(env, state_res, action_res)
    n_actions = model.action_grid.shape[0]
    return TabularMdp(
        next_state=model.next_index,
        rewards=np.repeat(model.rewards[:, None], n_actions, axis=1),
    )


def tabular_oracle(
    env: ToyEnv,
    gamma: float = 0.99,
    state_res: int = 101,
    action_res: int = 11,
    tol: float = 1e-9,
) -> OracleGrid:
    if not 0.0 <= gamma <= 1.0:
        raise ConfigException(message="gamma must lie in [0, 1]", details={"gamma": gamma})

    model = discretize(env, state_res, action_res)
    rewards, next_index = model.rewards, model.next_index
    n_states, n_actions = next_index.shape

    q_table = np.empty((env.horizon, n_states, n_actions))
    next_value = np.zeros(n_states)
    for t in reversed(range(env.horizon)):
        q_table[t] = rewards[:, None] + gamma * next_value[next_index]
        next_value = q_table[t].max(axis=1)

    residual = 0.0
    for t in range(env.horizon):
        bootstrap = q_table[t + 1].max(axis=1)[next_index] if t + 1 < env.horizon else 0.0
        residual = max(residual, float(np.max(np.abs(q_table[t] - (rewards[:, None] + gamma * bootstrap)))))
    if residual > tol:
        logger.warning(f"Oracle Bellman residual {residual:.3e} exceeds tolerance {tol:.1e}")

    grid = OracleGrid(
        env=env, gamma=gamma, state_res=state_res, action_res=action_res, tol=tol,
        state_axes=model.state_axes, action_grid=model.action_grid, q_table=q_table, residual=residual,
    )
    greedy_return = _greedy_return(grid)
    logger.info(
        f"Oracle {env.env_id}: states={n_states} actions={n_actions} gamma={gamma} "
        f"greedy_return={greedy_return:.4f}"
    )
    return replace(grid, greedy_return=greedy_return)


def _greedy_return(grid: OracleGrid) -> float:
    """Undiscounted return of the greedy grid policy from the default initial state."""
    env = grid.env
    state = EnvState(obs=env.default_initial_state[None, :].copy(), t=0)
    total = 0.0
    done = False
    while not done:
        action = grid.greedy_action(state.obs, state.t)
        state, reward, done = env.step(state, action)
        total += float(reward[0])
    return total


def stationary_grid(env: ToyEnv, state_res: int, action_res: int, q_values: np.ndarray, gamma: float) -> OracleGrid:
    """Wrap a time-independent (S, A) Q table, e.g. from fitted TD on grid_mdp, for greedy rollouts."""
    model = discretize(env, state_res, action_res)
    q_values = np.asarray(q_values, dtype=np.float64)
    if q_values.shape != model.next_index.shape:
        raise ConfigException(
            message="Q table does not match the grid",
            details={"expected": list(model.next_index.shape), "received": list(q_values.shape)}
        )
    grid = OracleGrid(
        env=env, gamma=gamma, state_res=state_res, action_res=action_res, tol=float("inf"),
        state_axes=model.state_axes, action_grid=model.action_grid,
        q_table=np.broadcast_to(q_values, (env.horizon,) + q_values.shape), residual=float("nan"),
    )
    return replace(grid, greedy_return=_greedy_return(grid))

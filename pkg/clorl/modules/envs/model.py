"""
Deterministic toy continuous-control environments.

Dynamics and rewards are vectorized over a leading batch axis so many
episodes advance in lockstep (all episodes share the horizon). The reward
of a transition is a function of the state before it.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from clorl.core.exceptions import ConfigException, InvalidActionException, ShapeMismatchException


@dataclass(frozen=True, eq=False)
class EnvState:
    obs: np.ndarray
    t: int = 0


class ToyEnv:
    env_id: str = ""
    obs_dim: int = 0
    act_dim: int = 0
    horizon: int = 0
    state_low: np.ndarray
    state_high: np.ndarray
    default_initial_state: np.ndarray

    def reward(self, obs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dynamics(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_initial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def reset(self, rng: np.random.Generator, n: int = 1) -> EnvState:
        return EnvState(obs=self.sample_initial(rng, n), t=0)

    def step(self, state: EnvState, actions) -> Tuple[EnvState, np.ndarray, bool]:
        obs = np.asarray(state.obs, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape[-1] != self.act_dim or obs.shape[-1] != self.obs_dim:
            raise ShapeMismatchException(
                message=f"{self.env_id}: state/action dimension mismatch",
                details={"obs": list(obs.shape), "actions": list(actions.shape)}
            )
        if np.any(np.abs(actions) > 1.0) or not np.all(np.isfinite(actions)):
            raise InvalidActionException(
                message=f"{self.env_id}: actions must lie in [-1, 1]",
                details={"max_abs": float(np.max(np.abs(actions)))}
            )
        reward = self.reward(obs)
        next_obs = self.dynamics(obs, actions)
        t = state.t + 1
        return EnvState(obs=next_obs, t=t), reward, t >= self.horizon


class PointMass2D(ToyEnv):
    """
    State (px, py, vx, vy); action is an acceleration in [-1, 1]^2.
    pos += dt * vel (clamped to the box), then vel += dt * a (clamped to +-v_cap).
    Reward is -||pos - goal||.
    """
    env_id = "pointmass"
    obs_dim = 4
    act_dim = 2
    horizon = 50

    def __init__(self, dt: float = 0.1, v_cap: float = 0.5, goal=(0.5, 0.5)):
        self.dt = dt
        self.v_cap = v_cap
        self.goal = np.asarray(goal, dtype=np.float64)
        self.state_low = np.array([-1.0, -1.0, -v_cap, -v_cap])
        self.state_high = np.array([1.0, 1.0, v_cap, v_cap])
        self.default_initial_state = np.array([-0.5, -0.5, 0.0, 0.0])

    def reward(self, obs: np.ndarray) -> np.ndarray:
        return -np.linalg.norm(obs[..., :2] - self.goal, axis=-1)

    def dynamics(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        pos, vel = obs[..., :2], obs[..., 2:]
        new_pos = np.clip(pos + self.dt * vel, -1.0, 1.0)
        new_vel = np.clip(vel + self.dt * actions, -self.v_cap, self.v_cap)
        return np.concatenate([new_pos, new_vel], axis=-1)

    def sample_initial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        pos = rng.uniform(-1.0, 1.0, size=(n, 2))
        return np.concatenate([pos, np.zeros((n, 2))], axis=-1)


class Chain1D(ToyEnv):
    """s' = clamp(s + 0.2 a); reward 1 inside |s - 0.8| < 0.1, sparse otherwise."""
    env_id = "chain1d"
    obs_dim = 1
    act_dim = 1
    horizon = 20

    def __init__(self, step_size: float = 0.2, target: float = 0.8, half_width: float = 0.1):
        self.step_size = step_size
        self.goal = np.array([target])
        self.half_width = half_width
        self.state_low = np.array([-1.0])
        self.state_high = np.array([1.0])
        self.default_initial_state = np.array([0.0])

    def reward(self, obs: np.ndarray) -> np.ndarray:
        return (np.abs(obs[..., 0] - self.goal[0]) < self.half_width).astype(np.float64)

    def dynamics(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.clip(obs + self.step_size * actions, -1.0, 1.0)

    def sample_initial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=(n, 1))


ENV_REGISTRY = {
    PointMass2D.env_id: PointMass2D,
    Chain1D.env_id: Chain1D,
}


def make_env(env_id: str) -> ToyEnv:
    try:
        return ENV_REGISTRY[env_id]()
    except KeyError:
        raise ConfigException(
            message=f"Unknown environment '{env_id}'",
            details={"available": sorted(ENV_REGISTRY)}
        )


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite deterministic MDP used to check value heads against exact Q*."""
    next_state: np.ndarray
    rewards: np.ndarray

    @property
    def n_states(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.rewards.shape[1])

    @classmethod
    def random(cls, n_states: int = 5, n_actions: int = 3, seed: int = 0) -> "TabularMdp":
        rng = np.random.default_rng(seed)
        return cls(
            next_state=rng.integers(0, n_states, size=(n_states, n_actions)),
            rewards=rng.uniform(0.0, 1.0, size=(n_states, n_actions)),
        )

    def value_iteration(self, gamma: float, tol: float = 1e-12, max_iter: int = 100_000) -> Tuple[np.ndarray, float]:
        """Returns (Q*, final Bellman residual)."""
        q = np.zeros_like(self.rewards)
        residual = np.inf
        for _ in range(max_iter):
            updated = self.rewards + gamma * q.max(axis=1)[self.next_state]
            residual = float(np.max(np.abs(updated - q)))
            q = updated
            if residual < tol:
                break
        return q, residual

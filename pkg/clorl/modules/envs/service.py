import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from clorl.core.exceptions import ConfigException
from clorl.modules.data import DatasetMeta, OfflineDataset, make_dataset
from clorl.modules.envs.behavior import BehaviorKind, make_behavior
from clorl.modules.envs.model import EnvState, ToyEnv, make_env

logger = logging.getLogger(__name__)

# Seed for the Monte-Carlo reference scores; independent of the dataset seed
# so normalized scores are comparable across datasets of one environment.
SCORE_SEED = 20240101
SCORE_EPISODES = 1000


@dataclass(frozen=True, eq=False)
class Trajectories:
    """Lockstep rollouts; every array has leading axes (n_episodes, horizon)."""
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray

    @property
    def returns(self) -> np.ndarray:
        return self.rewards.sum(axis=1)


def rollout(env: ToyEnv, policy, initial_obs: np.ndarray) -> Trajectories:
    """Run ``policy.act(obs, t)`` for one full horizon from each initial state."""
    obs = np.atleast_2d(np.asarray(initial_obs, dtype=np.float64))
    n, horizon = obs.shape[0], env.horizon
    observations = np.empty((n, horizon, env.obs_dim))
    actions = np.empty((n, horizon, env.act_dim))
    rewards = np.empty((n, horizon))
    next_observations = np.empty((n, horizon, env.obs_dim))

    state = EnvState(obs=obs, t=0)
    done = False
    while not done:
        t = state.t
        action = np.asarray(policy.act(state.obs, t), dtype=np.float64).reshape(n, env.act_dim)
        observations[:, t] = state.obs
        actions[:, t] = action
        state, reward, done = env.step(state, action)
        rewards[:, t] = reward
        next_observations[:, t] = state.obs

    return Trajectories(observations, actions, rewards, next_observations)


def initial_states(
    env: ToyEnv,
    n: int,
    rng: np.random.Generator,
    fixed: Optional[np.ndarray] = None,
) -> np.ndarray:
    if fixed is not None:
        return np.tile(np.asarray(fixed, dtype=np.float64), (n, 1))
    return env.sample_initial(rng, n)


@lru_cache(maxsize=None)
def reference_scores(env_id: str, n_episodes: int = SCORE_EPISODES) -> Tuple[float, float]:
    """(random_score, expert_score): mean Monte-Carlo returns of the Random and noiseless Expert policies."""
    env = make_env(env_id)
    start_ss, random_ss = np.random.SeedSequence(SCORE_SEED).spawn(2)
    starts = env.sample_initial(np.random.default_rng(start_ss), n_episodes)

    random_policy = make_behavior(env, BehaviorKind.RANDOM, rng=np.random.default_rng(random_ss))
    expert_policy = make_behavior(env, BehaviorKind.EXPERT, noise_std=0.0)
    random_score = float(rollout(env, random_policy, starts).returns.mean())
    expert_score = float(rollout(env, expert_policy, starts).returns.mean())
    logger.info(f"Reference scores {env_id}: random={random_score:.4f} expert={expert_score:.4f}")
    return random_score, expert_score


def behavior_returns(
    env: ToyEnv,
    kind: BehaviorKind,
    n_episodes: int,
    noise_std: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    start_ss, behavior_ss = np.random.SeedSequence(seed).spawn(2)
    policy = make_behavior(env, kind, noise_std=noise_std, rng=np.random.default_rng(behavior_ss))
    starts = env.sample_initial(np.random.default_rng(start_ss), n_episodes)
    return rollout(env, policy, starts).returns


def generate_dataset(
    env: ToyEnv | str,
    behavior: BehaviorKind | str,
    n_episodes: int,
    noise_std: float = 0.1,
    seed: int = 0,
    reward_scale: float = 1.0,
    fixed_start: bool = False,
) -> Tuple[OfflineDataset, DatasetMeta]:
    """
    Roll out a scripted behavior policy and pack the transitions.

    Every episode runs the full horizon and ends with done=1. Starts are
    uniform in the state box unless ``fixed_start`` pins them to the
    environment's default initial state. Rewards are stored unscaled;
    ``reward_scale`` is recorded in the meta only.
    """
    env = make_env(env) if isinstance(env, str) else env
    kind = BehaviorKind(behavior)
    if n_episodes < 1:
        raise ConfigException(message="n_episodes must be at least 1", details={"n_episodes": n_episodes})
    if noise_std < 0:
        raise ConfigException(message="noise_std must be non-negative", details={"noise_std": noise_std})

    start_ss, behavior_ss = np.random.SeedSequence(seed).spawn(2)
    policy = make_behavior(env, kind, noise_std=noise_std, rng=np.random.default_rng(behavior_ss))
    starts = initial_states(
        env, n_episodes, np.random.default_rng(start_ss),
        fixed=env.default_initial_state if fixed_start else None,
    )
    traj = rollout(env, policy, starts)

    horizon = env.horizon
    n = n_episodes * horizon
    dones = np.zeros((n_episodes, horizon), dtype=bool)
    dones[:, -1] = True
    dataset = make_dataset(
        observations=traj.observations.reshape(n, env.obs_dim),
        actions=traj.actions.reshape(n, env.act_dim),
        rewards=traj.rewards.reshape(n),
        next_observations=traj.next_observations.reshape(n, env.obs_dim),
        dones=dones.reshape(n),
        episode_starts=range(0, n, horizon),
    )

    random_score, expert_score = reference_scores(env.env_id)
    source = f"{env.env_id}/{kind.value}/noise={noise_std}/episodes={n_episodes}/seed={seed}"
    if fixed_start:
        source += "/start=fixed"
    meta = DatasetMeta(
        reward_scale=reward_scale,
        source=source,
        random_score=random_score,
        expert_score=expert_score,
    )
    logger.info(
        f"Generated {source}: n={n} mean_return={traj.returns.mean():.4f} "
        f"(random={random_score:.4f}, expert={expert_score:.4f})"
    )
    return dataset, meta

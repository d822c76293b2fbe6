import logging
from typing import Optional, Tuple

import numpy as np

from clorl.core.exceptions import ConfigException
from clorl.modules.actors import GaussianPolicy, SampledPolicy
from clorl.modules.envs import ToyEnv, initial_states, rollout

logger = logging.getLogger(__name__)


def evaluate_policy(
    env: ToyEnv,
    policy,
    n_episodes: int,
    seed: int,
    fixed_initial_state: Optional[np.ndarray] = None,
    sampled: bool = False,
) -> Tuple[float, float]:
    """
    Mean and (population) std of undiscounted episode returns.

    Episodes run in lockstep; initial states are drawn from the seed unless
    ``fixed_initial_state`` pins them. Gaussian policies act with their
    deterministic head unless ``sampled`` is set, in which case actions are
    drawn from a generator spawned off the same seed.
    """
    if n_episodes < 1:
        raise ConfigException(message="n_episodes must be at least 1", details={"n_episodes": n_episodes})
    start_ss, action_ss = np.random.SeedSequence(seed).spawn(2)
    if sampled and isinstance(policy, GaussianPolicy):
        policy = SampledPolicy(policy, np.random.default_rng(action_ss))
    starts = initial_states(env, n_episodes, np.random.default_rng(start_ss), fixed=fixed_initial_state)
    returns = rollout(env, policy, starts).returns
    return float(np.mean(returns)), float(np.std(returns))

"""Scripted behavior policies used to produce offline datasets of graded quality."""

from enum import Enum
from typing import Optional

import numpy as np

from clorl.modules.envs.model import ToyEnv


class BehaviorKind(str, Enum):
    RANDOM = "random"
    MEDIOCRE = "mediocre"
    EXPERT = "expert"


# (kp, kd) of the PD controller toward the goal
PD_GAINS = {
    BehaviorKind.MEDIOCRE: (0.5, 0.3),
    BehaviorKind.EXPERT: (2.0, 1.0),
}


class RandomBehavior:
    def __init__(self, act_dim: int, rng: np.random.Generator):
        self.act_dim = act_dim
        self.rng = rng

    def act(self, observations: np.ndarray, t: int) -> np.ndarray:
        n = np.atleast_2d(observations).shape[0]
        return self.rng.uniform(-1.0, 1.0, size=(n, self.act_dim))


class PdController:
    """
    a = clip(kp * (goal - pos) - kd * vel + noise, -1, 1).

    On PointMass2D pos/vel are the first/second half of the state; Chain1D
    has no velocity so only the proportional term acts.
    """

    def __init__(
        self,
        env: ToyEnv,
        kp: float,
        kd: float,
        noise_std: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ):
        self.env = env
        self.kp = kp
        self.kd = kd
        self.noise_std = noise_std
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def act(self, observations: np.ndarray, t: int) -> np.ndarray:
        obs = np.atleast_2d(observations)
        act_dim = self.env.act_dim
        pos = obs[:, :act_dim]
        action = self.kp * (self.env.goal - pos)
        if obs.shape[1] >= 2 * act_dim:
            action = action - self.kd * obs[:, act_dim:2 * act_dim]
        if self.noise_std > 0:
            action = action + self.noise_std * self.rng.standard_normal(action.shape)
        return np.clip(action, -1.0, 1.0)


def make_behavior(
    env: ToyEnv,
    kind: BehaviorKind,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
):
    kind = BehaviorKind(kind)
    rng = rng if rng is not None else np.random.default_rng(0)
    if kind is BehaviorKind.RANDOM:
        return RandomBehavior(env.act_dim, rng)
    kp, kd = PD_GAINS[kind]
    return PdController(env, kp, kd, noise_std=noise_std, rng=rng)

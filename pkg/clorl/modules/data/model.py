from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class OfflineDataset:
    """
    Immutable transition arrays with episode boundaries.

    Arrays are float32 (dones bool) as stored on disk; rewards are the
    in-memory (already scaled) values. ``stored_rewards`` keeps the file
    values when a reward scale has been applied, so saving is lossless.
    """
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray
    next_actions: np.ndarray
    dones: np.ndarray
    episode_starts: Tuple[int, ...]
    stored_rewards: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("observations", "actions", "rewards", "next_observations", "next_actions"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float32))
        object.__setattr__(self, "dones", _frozen(self.dones, np.bool_))
        object.__setattr__(self, "episode_starts", tuple(int(s) for s in self.episode_starts))
        if self.stored_rewards is not None:
            object.__setattr__(self, "stored_rewards", _frozen(self.stored_rewards, np.float32))

    @property
    def n(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def obs_dim(self) -> int:
        return int(self.observations.shape[1])

    @property
    def act_dim(self) -> int:
        return int(self.actions.shape[1])

    @property
    def episode_bounds(self) -> list[tuple[int, int]]:
        bounds = list(self.episode_starts) + [self.n]
        return list(zip(bounds[:-1], bounds[1:]))

    @property
    def file_rewards(self) -> np.ndarray:
        return self.stored_rewards if self.stored_rewards is not None else self.rewards

    def with_reward_scale(self, scale: float) -> "OfflineDataset":
        scaled = self.rewards * np.float32(scale)
        return replace(self, rewards=scaled, stored_rewards=self.rewards)

    def episode_returns(self) -> np.ndarray:
        rewards = self.rewards.astype(np.float64)
        return np.array([rewards[start:end].sum() for start, end in self.episode_bounds])


@dataclass(frozen=True, eq=False)
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    next_actions: np.ndarray
    dones: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.rewards.shape[0])

import logging
from typing import Sequence

import numpy as np

from clorl.core.exceptions import ConfigException, DatasetValidationException
from clorl.modules.data.model import Batch, OfflineDataset
from clorl.modules.data.schema import DatasetMeta

logger = logging.getLogger(__name__)


def build_next_actions(actions: np.ndarray, episode_starts: Sequence[int]) -> np.ndarray:
    """
    Successor-step dataset action within each episode; the final step of an
    episode repeats its own action (inert, it is multiplied by 1 - done = 0).
    """
    actions = np.asarray(actions)
    n = actions.shape[0]
    next_actions = np.empty_like(actions)
    bounds = list(episode_starts) + [n]
    for start, end in zip(bounds[:-1], bounds[1:]):
        next_actions[start:end - 1] = actions[start + 1:end]
        next_actions[end - 1] = actions[end - 1]
    return next_actions


def make_dataset(
    observations: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_observations: np.ndarray,
    dones: np.ndarray,
    episode_starts: Sequence[int],
) -> OfflineDataset:
    """Assemble and validate a dataset, deriving next_actions from the boundaries."""
    dataset = OfflineDataset(
        observations=observations,
        actions=actions,
        rewards=rewards,
        next_observations=next_observations,
        next_actions=build_next_actions(np.asarray(actions, dtype=np.float32), episode_starts),
        dones=dones,
        episode_starts=tuple(episode_starts),
    )
    validate_dataset(dataset)
    return dataset


def validate_dataset(dataset: OfflineDataset) -> None:
    """Raise DatasetValidationException on any broken invariant."""
    n = dataset.n
    errors = []

    if n == 0:
        errors.append("dataset is empty")
    for name in ("observations", "actions", "next_observations", "next_actions", "dones"):
        length = getattr(dataset, name).shape[0]
        if length != n:
            errors.append(f"{name} has {length} rows, expected {n}")
    if dataset.observations.ndim != 2 or dataset.next_observations.shape != dataset.observations.shape:
        errors.append("observations and next_observations must be (n, obs_dim) alike")
    if dataset.actions.ndim != 2 or dataset.next_actions.shape != dataset.actions.shape:
        errors.append("actions and next_actions must be (n, act_dim) alike")

    for name in ("observations", "actions", "rewards", "next_observations", "next_actions"):
        if not np.all(np.isfinite(getattr(dataset, name))):
            errors.append(f"{name} contains non-finite values")
    for name in ("actions", "next_actions"):
        values = getattr(dataset, name)
        if values.size and np.max(np.abs(values)) > 1.0:
            errors.append(f"{name} outside [-1, 1]")

    starts = list(dataset.episode_starts)
    if not starts or starts[0] != 0:
        errors.append("episode_starts must begin with 0")
    elif any(b <= a for a, b in zip(starts[:-1], starts[1:])) or starts[-1] >= max(n, 1):
        errors.append("episode_starts must be strictly increasing and inside the dataset")
    elif dataset.dones.shape[0] == n and n > 0:
        expected = np.zeros(n, dtype=bool)
        expected[[s - 1 for s in starts[1:]]] = True
        expected[n - 1] = True
        if not np.array_equal(dataset.dones, expected):
            errors.append("dones must be set exactly at the last step of every episode")

    if errors:
        raise DatasetValidationException(
            message="Dataset violates transition invariants",
            details={"errors": errors}
        )


def sample_batch(dataset: OfflineDataset, batch_size: int, rng: np.random.Generator) -> Batch:
    """Uniform indices with replacement; arrays promoted to float64."""
    if dataset.n == 0:
        raise DatasetValidationException(message="Cannot sample from an empty dataset")
    if batch_size < 1:
        raise ConfigException(message="batch_size must be at least 1", details={"batch_size": batch_size})

    indices = rng.integers(0, dataset.n, size=batch_size)
    return Batch(
        states=dataset.observations[indices].astype(np.float64),
        actions=dataset.actions[indices].astype(np.float64),
        rewards=dataset.rewards[indices].astype(np.float64),
        next_states=dataset.next_observations[indices].astype(np.float64),
        next_actions=dataset.next_actions[indices].astype(np.float64),
        dones=dataset.dones[indices].astype(np.float64),
        indices=indices,
    )


def normalized_score(raw: float, meta: DatasetMeta) -> float:
    span = meta.expert_score - meta.random_score
    if not span > 0:
        raise DatasetValidationException(
            message="Normalization needs expert_score > random_score",
            details={"random_score": meta.random_score, "expert_score": meta.expert_score}
        )
    return 100.0 * (raw - meta.random_score) / span

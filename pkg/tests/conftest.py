import numpy as np
import pytest

from clorl.modules.data import DatasetMeta, make_dataset


def tiny_dataset(episode_lengths=(3, 2), obs_dim=2, act_dim=1, seed=0, rewards=None):
    """Random transitions with the given episode layout; actions inside [-1, 1]."""
    rng = np.random.default_rng(seed)
    n = int(sum(episode_lengths))
    starts = np.concatenate([[0], np.cumsum(episode_lengths)[:-1]]).astype(int).tolist()
    dones = np.zeros(n, dtype=bool)
    dones[np.cumsum(episode_lengths) - 1] = True
    if rewards is None:
        rewards = rng.normal(size=n)
    return make_dataset(
        observations=rng.normal(size=(n, obs_dim)),
        actions=rng.uniform(-1, 1, size=(n, act_dim)),
        rewards=np.asarray(rewards, dtype=np.float64),
        next_observations=rng.normal(size=(n, obs_dim)),
        dones=dones,
        episode_starts=starts,
    )


@pytest.fixture
def small_dataset():
    return tiny_dataset(episode_lengths=(4, 3, 5), obs_dim=2, act_dim=2, seed=7)


@pytest.fixture
def toy_meta():
    return DatasetMeta(source="pointmass/test", random_score=-50.0, expert_score=-5.0)


@pytest.fixture
def out_env(tmp_path, monkeypatch):
    """Point every default output location at a temporary directory."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("CLORL_OUT", str(tmp_path / "runs"))
    monkeypatch.setenv("CLORL_LOG_DIR", str(tmp_path / "logs"))
    return tmp_path

"""Toy environments, scripted behaviors, dataset generation and the tabular oracle."""

import numpy as np
import pytest
from scipy import stats

from clorl.core.exceptions import ConfigException, InvalidActionException, ShapeMismatchException
from clorl.modules.data import DatasetRepository, validate_dataset
from clorl.modules.envs import (
    BehaviorKind,
    Chain1D,
    EnvState,
    OraclePolicy,
    PointMass2D,
    TabularMdp,
    behavior_returns,
    generate_dataset,
    grid_mdp,
    make_env,
    reference_scores,
    rollout,
    stationary_grid,
    tabular_oracle,
)


class TestDynamics:

    def test_pointmass_at_rest_on_goal(self):
        env = PointMass2D()
        state = EnvState(obs=np.array([[0.5, 0.5, 0.0, 0.0]]))
        next_state, reward, done = env.step(state, np.zeros((1, 2)))
        assert reward[0] == 0.0
        np.testing.assert_array_equal(next_state.obs, state.obs)
        assert next_state.t == 1 and not done

    def test_pointmass_velocity_and_box_clamps(self):
        env = PointMass2D()
        obs = np.array([[0.99, -0.2, 0.5, 0.0]])
        next_obs = env.step(EnvState(obs=obs), np.array([[1.0, -1.0]]))[0].obs
        np.testing.assert_allclose(next_obs, [[1.0, -0.2, 0.5, -0.1]])

    def test_chain_step(self):
        env = Chain1D()
        next_state, reward, _ = env.step(EnvState(obs=np.array([[0.0]])), np.array([[1.0]]))
        assert next_state.obs[0, 0] == pytest.approx(0.2)
        assert reward[0] == 0.0

    def test_chain_reward_uses_state_before_transition(self):
        env = Chain1D()
        next_state, reward, _ = env.step(EnvState(obs=np.array([[0.7]])), np.array([[0.5]]))
        assert next_state.obs[0, 0] == pytest.approx(0.8)
        assert reward[0] == 0.0
        _, reward, _ = env.step(next_state, np.array([[0.0]]))
        assert reward[0] == 1.0

    def test_episode_ends_at_horizon(self):
        env = Chain1D()
        state = EnvState(obs=np.zeros((3, 1)))
        for t in range(env.horizon):
            state, _, done = env.step(state, np.zeros((3, 1)))
            assert done == (t == env.horizon - 1)

    def test_rejects_out_of_range_actions(self):
        env = Chain1D()
        with pytest.raises(InvalidActionException):
            env.step(EnvState(obs=np.zeros((1, 1))), np.array([[1.5]]))
        with pytest.raises(InvalidActionException):
            env.step(EnvState(obs=np.zeros((1, 1))), np.array([[np.nan]]))

    def test_rejects_wrong_action_dimension(self):
        with pytest.raises(ShapeMismatchException):
            PointMass2D().step(EnvState(obs=np.zeros((1, 4))), np.zeros((1, 3)))

    def test_registry(self):
        assert isinstance(make_env("pointmass"), PointMass2D)
        assert isinstance(make_env("chain1d"), Chain1D)
        with pytest.raises(ConfigException):
            make_env("hopper")


class TestGenerateDataset:

    def test_seed_determinism(self):
        a = DatasetRepository.encode(*generate_dataset("pointmass", "expert", n_episodes=5, seed=3))
        b = DatasetRepository.encode(*generate_dataset("pointmass", "expert", n_episodes=5, seed=3))
        c = DatasetRepository.encode(*generate_dataset("pointmass", "expert", n_episodes=5, seed=4))
        assert a == b
        assert a != c

    def test_layout(self):
        env = PointMass2D()
        dataset, meta = generate_dataset(env, BehaviorKind.MEDIOCRE, n_episodes=4, seed=0, reward_scale=100.0)
        validate_dataset(dataset)
        assert dataset.n == 4 * env.horizon
        assert dataset.episode_starts == tuple(range(0, 4 * env.horizon, env.horizon))
        assert np.all(np.abs(dataset.actions) <= 1.0)
        assert meta.env_id == "pointmass"
        assert meta.reward_scale == 100.0
        assert not meta.reward_scale_applied
        assert np.all(dataset.rewards <= 0.0)
        assert np.min(dataset.rewards) > -3.0

    def test_behavior_quality_ordering(self):
        env = PointMass2D()
        returns = {
            kind: behavior_returns(env, kind, 1000, noise_std=0.1, seed=0).mean()
            for kind in BehaviorKind
        }
        assert returns[BehaviorKind.EXPERT] > returns[BehaviorKind.MEDIOCRE] > returns[BehaviorKind.RANDOM]

    def test_noiseless_expert_from_fixed_start_repeats(self):
        dataset, _ = generate_dataset("pointmass", "expert", n_episodes=6, noise_std=0.0, seed=2, fixed_start=True)
        episodes = [dataset.observations[s:e] for s, e in dataset.episode_bounds]
        for episode in episodes[1:]:
            np.testing.assert_array_equal(episode, episodes[0])
        assert len(set(dataset.episode_returns().tolist())) == 1

    def test_random_behavior_actions_are_uniform(self):
        dataset, _ = generate_dataset("chain1d", "random", n_episodes=500, seed=0)
        counts, _ = np.histogram(dataset.actions[:, 0], bins=20, range=(-1.0, 1.0))
        assert counts.sum() == 500 * Chain1D().horizon
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_reference_scores_order(self):
        for env_id in ("pointmass", "chain1d"):
            random_score, expert_score = reference_scores(env_id)
            assert expert_score > random_score

    def test_rejects_bad_arguments(self):
        with pytest.raises(ConfigException):
            generate_dataset("chain1d", "expert", n_episodes=0)
        with pytest.raises(ConfigException):
            generate_dataset("chain1d", "expert", n_episodes=1, noise_std=-1.0)
        with pytest.raises(ValueError):
            generate_dataset("chain1d", "perfect", n_episodes=1)


class TestTabularOracle:

    def test_chain_greedy_return_counts_in_target_steps(self):
        env = Chain1D()
        grid = tabular_oracle(env, gamma=0.99, state_res=101, action_res=11)
        # full speed reaches 0.8 after 4 steps, then every remaining step is rewarded
        steps_to_target = int(np.ceil((0.7 - 0.0) / env.step_size + 1e-9))
        assert grid.greedy_return == env.horizon - steps_to_target == 16

    def test_greedy_rollout_matches_oracle_return(self):
        env = Chain1D()
        grid = tabular_oracle(env, gamma=0.99)
        traj = rollout(env, OraclePolicy(grid), env.default_initial_state[None, :])
        assert traj.returns[0] == grid.greedy_return

    def test_zero_discount_is_immediate_reward(self):
        env = Chain1D()
        grid = tabular_oracle(env, gamma=0.0, state_res=21, action_res=5)
        rewards = env.reward(np.array([[x] for x in np.linspace(-1.0, 1.0, 21)]))
        for t in range(env.horizon):
            np.testing.assert_array_equal(grid.q_table[t], np.repeat(rewards[:, None], 5, axis=1))

    def test_refinement_is_stable(self):
        env = Chain1D()
        coarse = tabular_oracle(env, state_res=51).greedy_return
        fine = tabular_oracle(env, state_res=101).greedy_return
        assert abs(fine - coarse) < 0.05 * fine

    def test_bellman_residual_is_exact(self):
        grid = tabular_oracle(Chain1D(), gamma=0.9, state_res=41, action_res=9)
        assert grid.residual < 1e-9

    def test_rejects_coarse_grid(self):
        with pytest.raises(ConfigException):
            tabular_oracle(Chain1D(), state_res=1)

    def test_stationary_grid_wraps_q_table(self):
        env = Chain1D()
        mdp = grid_mdp(env, 101, 11)
        q_star, _ = mdp.value_iteration(0.95)
        grid = stationary_grid(env, 101, 11, q_star, 0.95)
        assert grid.greedy_return == 16
        with pytest.raises(ConfigException):
            stationary_grid(env, 101, 11, q_star[:, :3], 0.95)


class TestTabularMdp:

    def test_value_iteration_fixed_point(self):
        mdp = TabularMdp.random(5, 3, seed=1)
        q, residual = mdp.value_iteration(0.9)
        assert residual < 1e-12
        np.testing.assert_allclose(q, mdp.rewards + 0.9 * q.max(axis=1)[mdp.next_state], atol=1e-10)

    def test_grid_mdp_shapes(self):
        mdp = grid_mdp(Chain1D(), 21, 5)
        assert (mdp.n_states, mdp.n_actions) == (21, 5)
        assert mdp.next_state.min() >= 0 and mdp.next_state.max() < 21

"""HL-Gauss supports, encoding, decoding and the cross-entropy head."""

import math

import mpmath
import numpy as np
import pytest

from clorl.core.exceptions import (
    DatasetValidationException,
    InvalidSupportException,
    NonFiniteException,
    ShapeMismatchException,
)
from clorl.modules.categorical_value import (
    ExpandKind,
    ExpandStrategy,
    HlGaussParams,
    build_support,
    ce_loss_and_grad,
    expand_support,
    logits_to_value,
    make_transform,
    probs_to_value,
    support_from_dataset,
    target_to_probs,
    value_entropy,
    value_grad_wrt_logits,
)
from clorl.modules.categorical_value.service import Z_EPS, discounted_suffix_returns
from clorl.modules.data import DatasetMeta, DatasetRepository
from tests.conftest import tiny_dataset

# an interior target's bin masses sum to z / (z + 1e-6) with z = 2 in erf units
INTERIOR_MASS = 2.0 / (2.0 + Z_EPS)


def _mp_probs(target, edges, sigma, dps=40):
    """Same formula as the encoder, evaluated in arbitrary precision."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(target)
        scale = mpmath.sqrt(2) * mpmath.mpf(sigma)
        cdf = [mpmath.erf((mpmath.mpf(float(e)) - t) / scale) for e in edges]
        z = cdf[-1] - cdf[0]
        return np.array([float((cdf[i + 1] - cdf[i]) / (z + mpmath.mpf(Z_EPS))) for i in range(len(edges) - 1)])


class TestBuildSupport:

    def test_two_bins(self):
        support = build_support(0, 2, 2)
        np.testing.assert_array_equal(support.edges, [0.0, 1.0, 2.0])
        assert support.zeta == 1.0
        np.testing.assert_array_equal(support.centers, [0.5, 1.5])

    def test_symmetric_four_bins(self):
        support = build_support(-1, 1, 4)
        np.testing.assert_allclose(support.edges, [-1.0, -0.5, 0.0, 0.5, 1.0], atol=1e-15)
        assert support.zeta == 0.5

    def test_dataset_derived_support_matches_high_precision(self):
        v_min, v_max = support_from_dataset(tiny_dataset(episode_lengths=(6, 4), seed=3), 0.99)
        support = build_support(v_min, v_max, 101)
        with mpmath.workdps(40):
            lo, hi = mpmath.mpf(v_min), mpmath.mpf(v_max)
            expected = [float(lo + (hi - lo) * i / 101) for i in range(102)]
            zeta = float((hi - lo) / 101)
        np.testing.assert_allclose(support.edges, expected, rtol=0, atol=1e-12 * max(1.0, abs(v_max)))
        assert support.zeta == pytest.approx(zeta, rel=1e-14)

    @pytest.mark.parametrize("v_min,v_max,m", [(1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, 1.0, 1), (0.0, math.inf, 5)])
    def test_degenerate_supports_rejected(self, v_min, v_max, m):
        with pytest.raises(InvalidSupportException):
            build_support(v_min, v_max, m)


class TestExpandSupport:

    def test_both_splits_expansion(self):
        assert expand_support(0, 10, ExpandStrategy(kind=ExpandKind.BOTH, v_expand=0.1)) == pytest.approx((-0.5, 10.5))

    def test_min_moves_lower_bound_only(self):
        assert expand_support(0, 10, ExpandStrategy(kind=ExpandKind.MIN, v_expand=0.1)) == pytest.approx((-1.0, 10.0))

    def test_zero_expansion_is_identity(self):
        assert expand_support(0, 10, ExpandStrategy(kind=ExpandKind.BOTH, v_expand=0.0)) == (0.0, 10.0)

    def test_negative_expansion_shrinks(self):
        lo, hi = expand_support(0, 10, ExpandStrategy(kind=ExpandKind.BOTH, v_expand=-0.05))
        assert (lo, hi) == pytest.approx((0.25, 9.75))

    def test_equal_bin_widths_across_strategies(self):
        strategy_min = ExpandStrategy(kind=ExpandKind.MIN, v_expand=0.1)
        strategy_both = ExpandStrategy(kind=ExpandKind.BOTH, v_expand=0.1)
        a = build_support(*expand_support(0, 10, strategy_min), 101)
        b = build_support(*expand_support(0, 10, strategy_both), 101)
        assert a.zeta == pytest.approx(b.zeta, rel=1e-12)

    def test_collapse_rejected(self):
        with pytest.raises(InvalidSupportException):
            expand_support(0, 10, ExpandStrategy(kind=ExpandKind.MIN, v_expand=-1.0))
        with pytest.raises(InvalidSupportException):
            expand_support(5, 5, ExpandStrategy(kind=ExpandKind.BOTH, v_expand=0.1))


class TestTargetToProbs:

    def test_shared_edge_splits_evenly(self):
        support = build_support(0, 2, 2)
        for ratio in (0.1, 0.75, 3.0):
            probs = target_to_probs(1.0, support, HlGaussParams.for_support(support, ratio))
            np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-6)
            assert probs[0] == pytest.approx(probs[1], abs=1e-15)

    def test_matches_arbitrary_precision_oracle(self):
        support = build_support(0, 10, 10)
        params = HlGaussParams(sigma_zeta_ratio=0.75, sigma=0.75)
        probs = target_to_probs(5.2, support, params)
        np.testing.assert_allclose(probs, _mp_probs(5.2, support.edges, 0.75), rtol=0, atol=1e-10)

    def test_vanishing_sigma_is_one_hot(self):
        support = build_support(0, 10, 10)
        params = HlGaussParams.for_support(support, 1e-6)
        probs = target_to_probs(support.centers[4], support, params)
        expected = np.zeros(10)
        expected[4] = INTERIOR_MASS
        np.testing.assert_allclose(probs, expected, rtol=0, atol=1e-9)

    def test_interior_mass_just_below_one(self):
        transform = make_transform(-3.0, 7.0, m=51)
        sigma = transform.params.sigma
        targets = np.linspace(-3.0 + 3 * sigma, 7.0 - 3 * sigma, 200)
        sums = transform.to_probs(targets).sum(axis=-1)
        assert np.all(sums <= 1.0)
        assert np.all(sums >= 1.0 - 1e-4)

    def test_entries_non_negative_and_batched(self):
        transform = make_transform(0.0, 1.0, m=21)
        targets = np.random.default_rng(0).uniform(-0.5, 1.5, size=(4, 5))
        probs = transform.to_probs(targets)
        assert probs.shape == (4, 5, 21)
        assert np.all(probs >= 0.0)

    def test_far_outside_target_tends_to_zero(self):
        transform = make_transform(0.0, 1.0, m=11)
        assert transform.to_probs(100.0).sum() < 1e-6


class TestProbsToValue:

    def test_one_hot_picks_center(self):
        assert probs_to_value([1.0, 0.0], build_support(0, 2, 2)) == pytest.approx(0.5)

    def test_even_split_is_midpoint(self):
        assert probs_to_value([0.5, 0.5], build_support(0, 2, 2)) == pytest.approx(1.0)

    def test_round_trip_oracle_target(self):
        support = build_support(0, 10, 10)
        params = HlGaussParams(sigma_zeta_ratio=0.75, sigma=0.75)
        assert probs_to_value(target_to_probs(5.2, support, params), support) == pytest.approx(5.2, abs=1e-3)

    def test_round_trip_interior_within_tolerance(self):
        transform = make_transform(-10.0, 30.0, m=101)
        sigma = transform.params.sigma
        targets = np.linspace(-10.0 + 3 * sigma, 30.0 - 3 * sigma, 500)
        decoded = transform.from_probs(transform.to_probs(targets))
        assert np.max(np.abs(decoded - targets)) <= 1e-3 * 40.0
        assert np.max(np.abs(decoded - targets)) <= transform.support.zeta / 2

    def test_monotone_in_target(self):
        transform = make_transform(0.0, 1.0, m=101)
        sigma = transform.params.sigma
        targets = np.linspace(3 * sigma, 1.0 - 3 * sigma, 1000)
        decoded = transform.from_probs(transform.to_probs(targets))
        assert np.all(np.diff(decoded) > 0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchException):
            probs_to_value([0.2, 0.3, 0.5], build_support(0, 2, 2))


class TestCrossEntropy:

    def test_uniform_case(self):
        loss, grad = ce_loss_and_grad(np.zeros(5), np.full(5, 0.2))
        assert loss == pytest.approx(math.log(5))
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_two_class_arithmetic(self):
        loss, grad = ce_loss_and_grad([0.0, 0.0], [1.0, 0.0])
        assert loss == pytest.approx(math.log(2))
        np.testing.assert_allclose(grad, [-0.5, 0.5])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        h = 1e-5
        for _ in range(10):
            logits = rng.normal(scale=2.0, size=7)
            target = rng.dirichlet(np.ones(7))
            _, grad = ce_loss_and_grad(logits, target)
            numeric = np.empty(7)
            for i in range(7):
                step = np.zeros(7)
                step[i] = h
                numeric[i] = (ce_loss_and_grad(logits + step, target)[0] - ce_loss_and_grad(logits - step, target)[0]) / (2 * h)
            np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-10)

    def test_unnormalized_target_gradient(self):
        """HL-Gauss targets sum slightly below one; the gradient keeps that mass."""
        transform = make_transform(0.0, 10.0, m=21)
        target = transform.to_probs(4.3)
        logits = np.random.default_rng(2).normal(size=21)
        _, grad = ce_loss_and_grad(logits, target)
        assert grad.sum() == pytest.approx(0.0, abs=1e-12)

    def test_large_logits_stay_finite(self):
        loss, grad = ce_loss_and_grad([1000.0, -1000.0, 0.0], [0.0, 1.0, 0.0])
        assert np.isfinite(loss) and np.all(np.isfinite(grad))

    def test_rejects_non_finite_logits(self):
        with pytest.raises(NonFiniteException):
            ce_loss_and_grad([np.nan, 0.0], [0.5, 0.5])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeMismatchException):
            ce_loss_and_grad(np.zeros(3), np.ones(4) / 4)


class TestScalarization:

    def test_value_gradient_matches_finite_differences(self):
        support = build_support(-2.0, 5.0, 9)
        logits = np.random.default_rng(4).normal(size=9)
        values, probs = logits_to_value(logits, support)
        analytic = value_grad_wrt_logits(probs, values, support)
        h = 1e-5
        numeric = np.array([
            (logits_to_value(logits + h * np.eye(9)[i], support)[0] - logits_to_value(logits - h * np.eye(9)[i], support)[0]) / (2 * h)
            for i in range(9)
        ])
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)

    def test_entropy(self):
        assert value_entropy(np.full(8, 1 / 8)) == pytest.approx(math.log(8))
        assert value_entropy([1.0, 0.0, 0.0]) == pytest.approx(0.0)


class TestSupportFromDataset:

    def test_single_trajectory(self):
        dataset = tiny_dataset(episode_lengths=(3,), rewards=[1.0, 2.0, 3.0])
        v_min, v_max = support_from_dataset(dataset, 0.9)
        assert v_min == pytest.approx(3.0)
        assert v_max == pytest.approx(5.23)

    def test_one_step_trajectory(self):
        dataset = tiny_dataset(episode_lengths=(1,), rewards=[0.25])
        assert support_from_dataset(dataset, 0.99) == (0.25, 0.25)

    def test_two_trajectories_do_not_mix(self):
        dataset = tiny_dataset(episode_lengths=(1, 1), rewards=[1.0, -1.0])
        assert support_from_dataset(dataset, 0.99) == (-1.0, 1.0)

    def test_matches_brute_force_suffix_sums(self):
        dataset = tiny_dataset(episode_lengths=(5, 1, 7, 3), seed=9)
        gamma = 0.95
        rewards = dataset.rewards.astype(np.float64)
        brute = []
        for start, end in dataset.episode_bounds:
            for t in range(start, end):
                brute.append(sum(gamma ** k * rewards[t + k] for k in range(end - t)))
        np.testing.assert_allclose(
            discounted_suffix_returns(dataset.rewards, dataset.episode_starts, gamma), brute, rtol=1e-12
        )
        v_min, v_max = support_from_dataset(dataset, gamma)
        assert v_min == pytest.approx(min(brute), rel=1e-12)
        assert v_max == pytest.approx(max(brute), rel=1e-12)

    @pytest.mark.parametrize("reward_scale", [1.0, 100.0])
    def test_survives_save_and_load(self, reward_scale):
        dataset = tiny_dataset(episode_lengths=(6, 2, 4), seed=3)
        meta = DatasetMeta(source="pointmass/test", random_score=-1.0, expert_score=1.0, reward_scale=reward_scale)
        loaded, _ = DatasetRepository.decode(DatasetRepository.encode(dataset, meta))
        expected = dataset.with_reward_scale(reward_scale) if reward_scale != 1.0 else dataset
        assert support_from_dataset(loaded, 0.97) == support_from_dataset(expected, 0.97)

    def test_rejects_bad_gamma(self):
        with pytest.raises(InvalidSupportException):
            support_from_dataset(tiny_dataset(), 1.0)

    def test_rejects_empty_dataset(self):
        empty = tiny_dataset()
        object.__setattr__(empty, "rewards", np.zeros(0, dtype=np.float32))
        with pytest.raises(DatasetValidationException):
            support_from_dataset(empty, 0.99)


class TestMakeTransform:

    def test_expansion_applied_before_binning(self):
        transform = make_transform(0.0, 10.0, m=101, expand=ExpandStrategy(kind=ExpandKind.BOTH, v_expand=0.1))
        assert (transform.support.v_min, transform.support.v_max) == pytest.approx((-0.5, 10.5))
        assert transform.params.sigma == pytest.approx(0.75 * 11.0 / 101)

"""
HL-Gauss categorical value machinery

Scalar returns are spread over a fixed bin grid with a Gaussian kernel
(erf differences at the bin edges), critics predict logits over the same
grid, and the scalar Q value is the expectation over bin centers.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special

from clorl.core.exceptions import (
    DatasetValidationException,
    InvalidSupportException,
    NonFiniteException,
    ShapeMismatchException,
)
from clorl.modules.categorical_value.schema import (
    ExpandKind,
    ExpandStrategy,
    HlGaussParams,
    ValueSupport,
)

logger = logging.getLogger(__name__)

# Literal epsilon of the reference transform, not a relative tolerance.
Z_EPS = 1e-6


def build_support(v_min: float, v_max: float, m: int) -> ValueSupport:
    if m < 2:
        raise InvalidSupportException(
            message="Support needs at least two bins",
            details={"m": m}
        )
    if not (math.isfinite(v_min) and math.isfinite(v_max)) or v_max <= v_min:
        raise InvalidSupportException(
            message="Degenerate support: v_max must exceed v_min",
            details={"v_min": v_min, "v_max": v_max}
        )
    return ValueSupport(v_min=float(v_min), v_max=float(v_max), m=int(m))


def expand_support(v_min: float, v_max: float, strategy: ExpandStrategy) -> Tuple[float, float]:
    if v_max <= v_min:
        raise InvalidSupportException(
            message="Cannot expand a degenerate support",
            details={"v_min": v_min, "v_max": v_max}
        )

    size = v_max - v_min
    e = strategy.v_expand
    if strategy.kind == ExpandKind.MIN:
        new_min, new_max = v_min - e * size, v_max
    else:
        # Half on each side keeps bin widths equal to the Min variant.
        new_min, new_max = v_min - e * size / 2, v_max + e * size / 2

    if new_max <= new_min:
        raise InvalidSupportException(
            message="Expansion collapses the support",
            details={"v_min": new_min, "v_max": new_max, "v_expand": e}
        )
    return new_min, new_max


def target_to_probs(target, support: ValueSupport, params: HlGaussParams) -> np.ndarray:
    """
    HL-Gauss encoding of scalar target(s).

    Accepts a scalar or an array of any shape; the bin axis is appended last.
    Targets are not clamped: far outside the support the result tends to the
    zero vector through the z + 1e-6 guard.
    """
    target = np.asarray(target, dtype=np.float64)
    cdf_evals = special.erf(
        (support.edges - target[..., None]) / (np.sqrt(2.0) * params.sigma)
    )
    z = cdf_evals[..., -1] - cdf_evals[..., 0]
    bin_probs = cdf_evals[..., 1:] - cdf_evals[..., :-1]
    return bin_probs / (z[..., None] + Z_EPS)


def probs_to_value(probs, support: ValueSupport) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape[-1] != support.m:
        raise ShapeMismatchException(
            message="Probability vector length does not match the support",
            details={"expected": support.m, "received": probs.shape[-1]}
        )
    return np.sum(probs * support.centers, axis=-1)


def logits_to_value(logits, support: ValueSupport) -> Tuple[np.ndarray, np.ndarray]:
    """Scalarize categorical logits; returns (values, probs)."""
    probs = special.softmax(np.asarray(logits, dtype=np.float64), axis=-1)
    return probs_to_value(probs, support), probs


def value_grad_wrt_logits(probs: np.ndarray, values: np.ndarray, support: ValueSupport) -> np.ndarray:
    """d E[center] / d logits = p * (center - E[center])."""
    return probs * (support.centers - values[..., None])


def ce_loss_and_grad(logits, target_probs) -> Tuple[np.ndarray, np.ndarray]:
    """
    Softmax cross-entropy along the last axis.

    Returns the per-row loss and its exact gradient w.r.t. the logits,
    softmax * sum(target) - target (softmax - target for normalized targets).
    """
    logits = np.asarray(logits, dtype=np.float64)
    target_probs = np.asarray(target_probs, dtype=np.float64)
    if logits.shape != target_probs.shape:
        raise ShapeMismatchException(
            message="Logits and target probabilities differ in shape",
            details={"logits": list(logits.shape), "target_probs": list(target_probs.shape)}
        )
    if not np.all(np.isfinite(logits)):
        raise NonFiniteException(message="Non-finite logits in cross-entropy")

    log_probs = special.log_softmax(logits, axis=-1)
    loss = -np.sum(target_probs * log_probs, axis=-1)
    grad = np.exp(log_probs) * np.sum(target_probs, axis=-1, keepdims=True) - target_probs
    return loss, grad


def value_entropy(probs) -> np.ndarray:
    """Shannon entropy (nats) of categorical value heads along the last axis."""
    probs = np.asarray(probs, dtype=np.float64)
    return -np.sum(special.xlogy(probs, probs), axis=-1)


def discounted_suffix_returns(rewards: np.ndarray, episode_starts, gamma: float) -> np.ndarray:
    """
    Per-index discounted return to the end of its trajectory, no bootstrap.
    Evaluated backwards: G_t = r_t + gamma * G_{t+1}.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    n = rewards.shape[0]
    bounds = list(episode_starts) + [n]
    returns = np.empty(n, dtype=np.float64)
    for start, end in zip(bounds[:-1], bounds[1:]):
        running = 0.0
        for t in range(end - 1, start - 1, -1):
            running = rewards[t] + gamma * running
            returns[t] = running
    return returns


def support_from_dataset(dataset, gamma: float) -> Tuple[float, float]:
    if dataset.n == 0:
        raise DatasetValidationException(message="Cannot derive a support from an empty dataset")
    if not 0.0 < gamma < 1.0:
        raise InvalidSupportException(
            message="Discount must lie in (0, 1)",
            details={"gamma": gamma}
        )
    returns = discounted_suffix_returns(dataset.rewards, dataset.episode_starts, gamma)
    return float(returns.min()), float(returns.max())


@dataclass(frozen=True)
class CategoricalTransform:
    """Support plus kernel width, the unit the categorical critic head consumes."""
    support: ValueSupport
    params: HlGaussParams

    def to_probs(self, target) -> np.ndarray:
        return target_to_probs(target, self.support, self.params)

    def from_probs(self, probs) -> np.ndarray:
        return probs_to_value(probs, self.support)


def make_transform(
    v_min: float,
    v_max: float,
    m: int = 101,
    sigma_zeta_ratio: float = 0.75,
    expand: Optional[ExpandStrategy] = None,
) -> CategoricalTransform:
    if expand is not None:
        v_min, v_max = expand_support(v_min, v_max, expand)
    support = build_support(v_min, v_max, m)
    params = HlGaussParams.for_support(support, sigma_zeta_ratio)
    logger.info(
        f"Categorical support [{support.v_min:.4f}, {support.v_max:.4f}] "
        f"m={support.m} zeta={support.zeta:.6f} sigma={params.sigma:.6f}"
    )
    return CategoricalTransform(support=support, params=params)

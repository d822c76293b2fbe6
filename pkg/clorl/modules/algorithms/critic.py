"""
Critic heads and ensembles.

A critic is an MLP on concat(state, action) with 1 output (Scalar head,
trained with MSE) or m logits (Categorical head, trained with HL-Gauss
cross-entropy). Ensembles always scalarize before taking the min, and
categorical targets are re-binned from the scalar target.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from clorl.core.exceptions import ConfigException, ShapeMismatchException
from clorl.modules.algorithms.schema import ClassificationConfig, HeadKind
from clorl.modules.categorical_value import (
    CategoricalTransform,
    ce_loss_and_grad,
    logits_to_value,
    make_transform,
    support_from_dataset,
    value_entropy,
    value_grad_wrt_logits,
)
from clorl.modules.neural import (
    AdamState,
    ForwardCache,
    MlpSpec,
    ParamSet,
    adam_step,
    backward,
    forward_cached,
)


@dataclass(frozen=True)
class CriticHead:
    kind: HeadKind = HeadKind.MSE
    transform: Optional[CategoricalTransform] = None

    def __post_init__(self):
        if self.kind == HeadKind.CE and self.transform is None:
            raise ConfigException(message="Categorical head needs a value support")

    @classmethod
    def scalar(cls) -> "CriticHead":
        return cls(kind=HeadKind.MSE)

    @classmethod
    def categorical(cls, transform: CategoricalTransform) -> "CriticHead":
        return cls(kind=HeadKind.CE, transform=transform)

    @property
    def output_dim(self) -> int:
        return 1 if self.kind == HeadKind.MSE else self.transform.support.m

    def scalarize(self, outputs: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """(values (B,), probs (B, m) or None)"""
        if self.kind == HeadKind.MSE:
            return outputs[..., 0], None
        return logits_to_value(outputs, self.transform.support)

    def loss_and_grad(self, outputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
        """Batch-mean loss of one critic and its gradient w.r.t. the outputs."""
        batch = outputs.shape[0]
        if self.kind == HeadKind.MSE:
            diff = outputs[:, 0] - targets
            return float(np.mean(diff ** 2)), (2.0 * diff / batch)[:, None]
        per_row, grad = ce_loss_and_grad(outputs, self.transform.to_probs(targets))
        return float(np.mean(per_row)), grad / batch

    def value_upstream(self, values: np.ndarray, probs: Optional[np.ndarray], upstream: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the outputs of sum(upstream * scalarized value)."""
        if self.kind == HeadKind.MSE:
            return upstream[:, None]
        return value_grad_wrt_logits(probs, values, self.transform.support) * upstream[:, None]


def build_head(
    kind: HeadKind,
    dataset=None,
    gamma: float = 0.99,
    classification: Optional[ClassificationConfig] = None,
) -> CriticHead:
    """Scalar head, or a Categorical head whose support spans the dataset's discounted returns."""
    kind = HeadKind(kind)
    if kind == HeadKind.MSE:
        return CriticHead.scalar()
    if dataset is None:
        raise ConfigException(message="Categorical head needs a dataset to derive its support")
    classification = classification or ClassificationConfig()
    v_min, v_max = support_from_dataset(dataset, gamma)
    if v_max <= v_min:
        # constant-return datasets still need a non-degenerate support
        v_min, v_max = v_min - 0.5, v_max + 0.5
    transform = make_transform(
        v_min, v_max,
        m=classification.m,
        sigma_zeta_ratio=classification.sigma_zeta_ratio,
        expand=classification.expand,
    )
    return CriticHead.categorical(transform)


def critic_spec(obs_dim: int, act_dim: int, head: CriticHead, hidden_dim: int = 256, n_hidden_layers: int = 3) -> MlpSpec:
    return MlpSpec(
        input_dim=obs_dim + act_dim,
        hidden_dim=hidden_dim,
        n_hidden_layers=n_hidden_layers,
        output_dim=head.output_dim,
    )


def critic_inputs(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    states = np.atleast_2d(states)
    actions = np.atleast_2d(actions)
    if states.shape[0] != actions.shape[0]:
        raise ShapeMismatchException(
            message="States and actions differ in batch size",
            details={"states": list(states.shape), "actions": list(actions.shape)}
        )
    return np.concatenate([states, actions], axis=1)


@dataclass(frozen=True, eq=False)
class EnsembleOutput:
    values: np.ndarray
    outputs: List[np.ndarray]
    probs: List[Optional[np.ndarray]]
    caches: List[ForwardCache]

    @property
    def q_min(self) -> np.ndarray:
        return self.values.min(axis=0)


def ensemble_forward(
    critics: Sequence[ParamSet],
    spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    actions: np.ndarray,
) -> EnsembleOutput:
    inputs = critic_inputs(states, actions)
    values, outputs, probs, caches = [], [], [], []
    for params in critics:
        out, cache = forward_cached(params, spec, inputs)
        value, prob = head.scalarize(out)
        values.append(value)
        outputs.append(out)
        probs.append(prob)
        caches.append(cache)
    return EnsembleOutput(values=np.stack(values), outputs=outputs, probs=probs, caches=caches)


def q_min(critics: Sequence[ParamSet], spec: MlpSpec, head: CriticHead, states, actions) -> np.ndarray:
    """Min over the ensemble of scalarized Q(s, a)."""
    return ensemble_forward(critics, spec, head, states, actions).q_min


def q_min_action_grad(
    critics: Sequence[ParamSet],
    spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    actions: np.ndarray,
    upstream: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    min_i Q_i(s, a) and the gradient of sum(upstream * min_i Q_i) w.r.t. the
    actions; the gradient flows through the arg-min critic of each row.
    """
    ens = ensemble_forward(critics, spec, head, states, actions)
    obs_dim = spec.input_dim - np.atleast_2d(actions).shape[1]
    batch = ens.values.shape[1]
    upstream = np.ones(batch) if upstream is None else np.asarray(upstream, dtype=np.float64)
    winner = np.argmin(ens.values, axis=0)

    grad_actions = np.zeros((batch, spec.input_dim - obs_dim))
    for index, params in enumerate(critics):
        mask = winner == index
        if not np.any(mask):
            continue
        g_out = head.value_upstream(ens.values[index], ens.probs[index], upstream * mask)
        _, input_grad = backward(params, spec, None, g_out, ens.caches[index])
        grad_actions += input_grad[:, obs_dim:]
    return ens.q_min, grad_actions


def critic_loss_and_grads(
    critics: Sequence[ParamSet],
    spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
) -> Tuple[float, List[ParamSet], EnsembleOutput]:
    """Loss summed over the ensemble (each term a batch mean) and per-critic gradients."""
    ens = ensemble_forward(critics, spec, head, states, actions)
    total = 0.0
    grads = []
    for params, out, cache in zip(critics, ens.outputs, ens.caches):
        loss, g_out = head.loss_and_grad(out, targets)
        total += loss
        grad, _ = backward(params, spec, None, g_out, cache)
        grads.append(grad)
    return total, grads, ens


@dataclass(frozen=True, eq=False)
class CriticFit:
    critics: Tuple[ParamSet, ...]
    optimizers: Tuple[AdamState, ...]
    loss: float
    q_mean: float
    entropy: Optional[float] = None


def critic_step(
    critics: Sequence[ParamSet],
    optimizers: Sequence[AdamState],
    spec: MlpSpec,
    head: CriticHead,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
) -> CriticFit:
    """One Adam step of every critic toward fixed targets."""
    loss, grads, ens = critic_loss_and_grads(critics, spec, head, states, actions, targets)
    new_critics, new_optimizers = [], []
    for params, opt, grad in zip(critics, optimizers, grads):
        opt, params = adam_step(opt, params, grad)
        new_critics.append(params)
        new_optimizers.append(opt)
    entropy = None
    if head.kind == HeadKind.CE:
        entropy = float(np.mean([value_entropy(p).mean() for p in ens.probs]))
    return CriticFit(
        critics=tuple(new_critics),
        optimizers=tuple(new_optimizers),
        loss=loss,
        q_mean=float(ens.q_min.mean()),
        entropy=entropy,
    )

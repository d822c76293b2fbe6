"""
Fully-connected ReLU networks with hand-written reverse-mode gradients.

Inputs are batches of shape (B, input_dim); a single vector of shape
(input_dim,) is accepted and the batch axis is dropped again on output.
Passing a generator as ``train_rng`` selects train mode (inverted dropout
after every hidden activation); without it the network runs in eval mode.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from clorl.core.exceptions import ShapeMismatchException
from clorl.modules.neural.model import ParamSet
from clorl.modules.neural.schema import MlpSpec


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)
    dropout_scales: List[Optional[np.ndarray]] = field(default_factory=list)
    squeeze: bool = False


def init_params(spec: MlpSpec, rng: np.random.Generator, dtype=np.float64) -> ParamSet:
    """Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
    layers = []
    for fan_in, fan_out in spec.layer_dims:
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)
        bias = np.zeros(fan_out, dtype=dtype)
        layers.append((weight, bias))
    return ParamSet.from_layers(layers)


def _check_params(params: ParamSet, spec: MlpSpec) -> None:
    expected = []
    for fan_in, fan_out in spec.layer_dims:
        expected.extend([(fan_in, fan_out), (fan_out,)])
    if params.shapes != expected:
        raise ShapeMismatchException(
            message="Parameters do not match the network spec",
            details={"expected": [list(s) for s in expected], "received": [list(s) for s in params.shapes]}
        )


def _as_batch(inputs, width: int, what: str) -> Tuple[np.ndarray, bool]:
    inputs = np.asarray(inputs)
    squeeze = inputs.ndim == 1
    if squeeze:
        inputs = inputs[None, :]
    if inputs.ndim != 2 or inputs.shape[1] != width:
        raise ShapeMismatchException(
            message=f"{what} dimension mismatch",
            details={"expected": width, "received": list(inputs.shape)}
        )
    return inputs, squeeze


def forward_cached(
    params: ParamSet,
    spec: MlpSpec,
    inputs,
    train_rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    _check_params(params, spec)
    x, squeeze = _as_batch(inputs, spec.input_dim, "Input")
    cache = ForwardCache(inputs=x, squeeze=squeeze)

    use_dropout = train_rng is not None and spec.dropout_rate > 0.0
    keep = 1.0 - spec.dropout_rate
    layers = params.layers
    hidden = x
    for index, (weight, bias) in enumerate(layers):
        z = hidden @ weight + bias
        if index == len(layers) - 1:
            out = z
            break
        cache.pre_activations.append(z)
        hidden = np.maximum(z, 0.0)
        scale = None
        if use_dropout:
            scale = (train_rng.random(hidden.shape) < keep) / keep
            hidden = hidden * scale
        cache.dropout_scales.append(scale)
        cache.activations.append(hidden)

    return (out[0] if squeeze else out), cache


def forward(
    params: ParamSet,
    spec: MlpSpec,
    inputs,
    train_rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    out, _ = forward_cached(params, spec, inputs, train_rng)
    return out


def backward(
    params: ParamSet,
    spec: MlpSpec,
    inputs,
    upstream_grad,
    cache: Optional[ForwardCache] = None,
) -> Tuple[ParamSet, np.ndarray]:
    """
    Gradients of sum(output * upstream_grad) w.r.t. every parameter and the input.
    Without a cache the eval-mode forward pass is recomputed.
    """
    if cache is None:
        _, cache = forward_cached(params, spec, inputs)
    g, _ = _as_batch(upstream_grad, spec.output_dim, "Upstream gradient")
    if g.shape[0] != cache.inputs.shape[0]:
        raise ShapeMismatchException(
            message="Upstream gradient batch size differs from the input batch",
            details={"expected": cache.inputs.shape[0], "received": g.shape[0]}
        )

    layers = params.layers
    grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]
    for index in range(len(layers) - 1, -1, -1):
        weight, _ = layers[index]
        layer_input = cache.activations[index - 1] if index > 0 else cache.inputs
        grads[index] = (layer_input.T @ g, g.sum(axis=0))
        g = g @ weight.T
        if index > 0:
            scale = cache.dropout_scales[index - 1]
            if scale is not None:
                g = g * scale
            g = g * (cache.pre_activations[index - 1] > 0)

    input_grad = g[0] if cache.squeeze else g
    return ParamSet.from_layers(grads), input_grad

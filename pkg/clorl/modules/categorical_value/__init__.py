from clorl.modules.categorical_value.schema import (
    ExpandKind,
    ExpandStrategy,
    HlGaussParams,
    ValueSupport,
)
from clorl.modules.categorical_value.service import (
    CategoricalTransform,
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

__all__ = [
    "CategoricalTransform",
    "ExpandKind",
    "ExpandStrategy",
    "HlGaussParams",
    "ValueSupport",
    "build_support",
    "ce_loss_and_grad",
    "expand_support",
    "logits_to_value",
    "make_transform",
    "probs_to_value",
    "support_from_dataset",
    "target_to_probs",
    "value_entropy",
    "value_grad_wrt_logits",
]

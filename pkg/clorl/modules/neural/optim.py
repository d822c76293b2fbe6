import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from clorl.core.exceptions import ConfigException, NonFiniteException
from clorl.modules.neural.model import ParamSet
from clorl.modules.neural.schema import LrSchedule, ScheduleKind

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AdamState:
    first_moment: ParamSet
    second_moment: ParamSet
    step: int
    base_lr: float
    schedule: LrSchedule

    @classmethod
    def init(cls, params: ParamSet, base_lr: float, schedule: LrSchedule = LrSchedule.constant()) -> "AdamState":
        return cls(
            first_moment=params.zeros_like(),
            second_moment=params.zeros_like(),
            step=0,
            base_lr=base_lr,
            schedule=schedule,
        )

    def learning_rate(self, step: int | None = None) -> float:
        step = self.step if step is None else step
        if self.schedule.kind == ScheduleKind.CONSTANT:
            return self.base_lr
        progress = min(step, self.schedule.total_steps) / self.schedule.total_steps
        return self.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def adam_step(state: AdamState, params: ParamSet, grads: ParamSet) -> Tuple[AdamState, ParamSet]:
    """One Adam update with bias correction; the lr follows the state's schedule."""
    params.check_aligned(grads)
    params.check_aligned(state.first_moment)
    if not grads.all_finite():
        raise NonFiniteException(
            message="Non-finite gradient passed to Adam",
            details={"step": state.step}
        )

    lr = state.learning_rate()
    t = state.step + 1
    m = state.first_moment.zip_map(grads, lambda m_, g: ADAM_BETA1 * m_ + (1 - ADAM_BETA1) * g)
    v = state.second_moment.zip_map(grads, lambda v_, g: ADAM_BETA2 * v_ + (1 - ADAM_BETA2) * g * g)
    correction1 = 1 - ADAM_BETA1 ** t
    correction2 = 1 - ADAM_BETA2 ** t

    new_arrays = []
    for p, m_, v_ in zip(params.arrays, m.arrays, v.arrays):
        update = lr * (m_ / correction1) / (np.sqrt(v_ / correction2) + ADAM_EPS)
        new_arrays.append((p - update).astype(p.dtype))

    return replace(state, first_moment=m, second_moment=v, step=t), ParamSet(tuple(new_arrays))


def soft_update(target: ParamSet, online: ParamSet, tau: float) -> ParamSet:
    """new_target = tau * online + (1 - tau) * target"""
    if not 0.0 < tau <= 1.0:
        raise ConfigException(
            message="Soft-update rate must lie in (0, 1]",
            details={"tau": tau}
        )
    if tau == 1.0:
        target.check_aligned(online)
        return online.map(np.copy)
    return target.zip_map(online, lambda t, o: tau * o + (1.0 - tau) * t)

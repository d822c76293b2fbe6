from clorl.modules.neural.mlp import ForwardCache, backward, forward, forward_cached, init_params
from clorl.modules.neural.model import ParamSet
from clorl.modules.neural.optim import AdamState, adam_step, soft_update
from clorl.modules.neural.repository import Checkpoint, CheckpointRepository
from clorl.modules.neural.schema import Activation, LrSchedule, MlpSpec, ScheduleKind

__all__ = [
    "Activation",
    "AdamState",
    "Checkpoint",
    "CheckpointRepository",
    "ForwardCache",
    "LrSchedule",
    "MlpSpec",
    "ParamSet",
    "ScheduleKind",
    "adam_step",
    "backward",
    "forward",
    "forward_cached",
    "init_params",
    "soft_update",
]

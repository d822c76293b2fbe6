from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Activation(str, Enum):
    RELU = "relu"


class MlpSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    input_dim: int = Field(..., gt=0)
    hidden_dim: int = Field(256, gt=0)
    n_hidden_layers: int = Field(3, ge=0)
    output_dim: int = Field(..., gt=0)
    activation: Activation = Activation.RELU
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0)

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.hidden_dim] * self.n_hidden_layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_dims)


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    COSINE = "cosine"


class LrSchedule(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ScheduleKind = ScheduleKind.CONSTANT
    total_steps: Optional[int] = Field(None, gt=0)

    @model_validator(mode="after")
    def validate_total_steps(self):
        if self.kind == ScheduleKind.COSINE and self.total_steps is None:
            raise ValueError("Cosine decay requires total_steps")
        return self

    @classmethod
    def constant(cls) -> "LrSchedule":
        return cls(kind=ScheduleKind.CONSTANT)

    @classmethod
    def cosine(cls, total_steps: int) -> "LrSchedule":
        return cls(kind=ScheduleKind.COSINE, total_steps=total_steps)

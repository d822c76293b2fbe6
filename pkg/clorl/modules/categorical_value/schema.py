from enum import Enum
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ExpandKind(str, Enum):
    MIN = "min"
    BOTH = "both"


class ExpandStrategy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExpandKind = Field(ExpandKind.BOTH, description="Which bounds absorb the expansion")
    v_expand: float = Field(0.0, description="Fraction of the support size; negative shrinks")


class ValueSupport(BaseModel):
    """
    Bin-edge grid over [v_min, v_max] with m bins of width zeta.
    Edges and centers are derived lazily and cached on the frozen model.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    v_min: float
    v_max: float
    m: int = Field(..., ge=2)

    @model_validator(mode="after")
    def validate_bounds(self):
        if not self.v_max > self.v_min:
            raise ValueError(f"v_max ({self.v_max}) must exceed v_min ({self.v_min})")
        return self

    @property
    def zeta(self) -> float:
        return (self.v_max - self.v_min) / self.m

    @cached_property
    def edges(self) -> np.ndarray:
        edges = np.linspace(self.v_min, self.v_max, self.m + 1, dtype=np.float64)
        edges.setflags(write=False)
        return edges

    @cached_property
    def centers(self) -> np.ndarray:
        centers = (self.edges[:-1] + self.edges[1:]) / 2
        centers.setflags(write=False)
        return centers


class HlGaussParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_zeta_ratio: float = Field(..., gt=0)
    sigma: float = Field(..., gt=0)

    @classmethod
    def for_support(cls, support: ValueSupport, sigma_zeta_ratio: float = 0.75) -> "HlGaussParams":
        return cls(sigma_zeta_ratio=sigma_zeta_ratio, sigma=sigma_zeta_ratio * support.zeta)

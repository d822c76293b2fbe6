from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from clorl.modules.categorical_value.schema import ExpandKind, ExpandStrategy


class Algorithm(str, Enum):
    REBRAC = "rebrac"
    IQL = "iql"
    LBSAC = "lbsac"


class HeadKind(str, Enum):
    MSE = "mse"
    CE = "ce"


class ClassificationConfig(BaseModel):
    """HL-Gauss head geometry; the support bounds come from the dataset."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(101, ge=2, description="Number of bins")
    sigma_zeta_ratio: float = Field(0.75, gt=0, description="Gaussian std in bin widths")
    v_expand: float = Field(0.0, description="Fractional support enlargement (negative shrinks)")
    expand_strategy: ExpandKind = Field(ExpandKind.BOTH, description="min: lower bound only; both: split")

    @property
    def expand(self) -> ExpandStrategy:
        return ExpandStrategy(kind=self.expand_strategy, v_expand=self.v_expand)


class AlgoConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(0.99, gt=0, lt=1, description="Discount")
    tau: float = Field(5e-3, gt=0, le=1, description="Target soft-update rate")
    batch_size: int = Field(256, ge=1)
    actor_lr: float = Field(3e-4, gt=0)
    critic_lr: float = Field(3e-4, gt=0)
    hidden_dim: int = Field(256, gt=0)
    n_hidden_layers: int = Field(3, ge=0)


class RebracConfig(AlgoConfig):
    batch_size: int = Field(1024, ge=1)
    actor_lr: float = Field(1e-3, gt=0)
    critic_lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.01, ge=0, description="Actor BC penalty weight")
    beta2: float = Field(0.01, ge=0, description="Critic-target BC penalty weight")
    policy_noise: float = Field(0.2, ge=0, description="Target smoothing noise std")
    noise_clip: float = Field(0.5, ge=0)
    normalize_q: bool = True
    actor_update_every: int = Field(2, ge=1, description="Delayed actor updates")


class IqlConfig(AlgoConfig):
    n_hidden_layers: int = Field(2, ge=0)
    value_lr: float = Field(3e-4, gt=0)
    expectile: float = Field(0.7, gt=0, lt=1, description="IQL tau")
    inv_temperature: float = Field(3.0, gt=0, description="AWR beta")
    adv_clip: float = Field(100.0, gt=0)
    decay_steps: Optional[int] = Field(None, gt=0, description="Actor cosine horizon; defaults to n_steps")
    dropout_rate: float = Field(0.0, ge=0, lt=1, description="Actor dropout")


class LbSacConfig(AlgoConfig):
    batch_size: int = Field(1024, ge=1)
    actor_lr: float = Field(6e-4, gt=0)
    critic_lr: float = Field(6e-4, gt=0)
    alpha_lr: float = Field(6e-4, gt=0)
    n_critics: int = Field(10, ge=2, description="Ensemble size N")
    target_entropy: Optional[float] = Field(None, description="Defaults to -action_dim")
    init_log_alpha: float = 0.0

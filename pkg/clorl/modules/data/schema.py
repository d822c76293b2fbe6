from typing import List

from pydantic import BaseModel, ConfigDict, Field, StrictInt, model_validator


class DatasetMeta(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    reward_scale: float = Field(
        1.0,
        gt=0,
        description="Multiplier applied to stored rewards at load (100 for sparse-goal tasks)"
    )
    source: str = Field("", description="Free-text provenance, e.g. pointmass/expert/noise=0.1/seed=1")
    random_score: float = Field(..., description="Mean return of the uniform random policy")
    expert_score: float = Field(..., description="Mean return of the noiseless expert controller")
    reward_scale_applied: bool = Field(
        False,
        description="Set by load once reward_scale has been multiplied into the in-memory rewards"
    )

    @model_validator(mode="after")
    def validate_scores(self):
        if not self.expert_score > self.random_score:
            raise ValueError(
                f"expert_score ({self.expert_score}) must exceed random_score ({self.random_score})"
            )
        return self

    @property
    def env_id(self) -> str | None:
        """Environment id encoded as the first path segment of ``source``."""
        head = self.source.split("/", 1)[0].strip()
        return head or None


class CodsHeader(BaseModel):
    """JSON header of a CODS v1 file; checked before any payload is read."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    obs_dim: StrictInt = Field(..., ge=1)
    act_dim: StrictInt = Field(..., ge=1)
    n: StrictInt = Field(..., ge=1)
    episode_starts: List[StrictInt]
    reward_scale: float = Field(..., gt=0)
    random_score: float
    expert_score: float
    source: str

    @model_validator(mode="after")
    def validate_episode_starts(self):
        starts = self.episode_starts
        if not starts or starts[0] != 0:
            raise ValueError("episode_starts must begin with 0")
        if any(b <= a for a, b in zip(starts[:-1], starts[1:])):
            raise ValueError("episode_starts must be strictly increasing")
        if starts[-1] >= self.n:
            raise ValueError(f"episode_starts must be below n={self.n}")
        return self

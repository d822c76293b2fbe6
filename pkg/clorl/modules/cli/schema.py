import copy
import itertools
import json
import logging
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from clorl.core.exceptions import ConfigException
from clorl.modules.algorithms.schema import (
    AlgoConfig,
    Algorithm,
    ClassificationConfig,
    HeadKind,
    IqlConfig,
    LbSacConfig,
    RebracConfig,
)
from clorl.modules.envs import ENV_REGISTRY

logger = logging.getLogger(__name__)


# ========== Dotted overrides ==========

def parse_override(text: str) -> Tuple[str, Any]:
    """
    "rebrac.beta1=0.01" -> ("rebrac.beta1", 0.01)
    Values are parsed as JSON when possible, kept as strings otherwise.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigException(message=f"Override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def set_dotted(raw: Dict[str, Any], key: str, value: Any) -> Dict[str, Any]:
    """Set a nested key on a raw config dict in place; intermediate blocks are created."""
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        elif not isinstance(child, dict):
            raise ConfigException(
                message=f"Cannot set {key!r}: {part!r} is not a block",
                details={"key": key}
            )
        node = child
    node[parts[-1]] = value
    return raw


def apply_overrides(raw: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    raw = copy.deepcopy(raw)
    for text in overrides:
        set_dotted(raw, *parse_override(text))
    return raw


# ========== Run config ==========

class RunConfig(BaseModel):
    """
    One training run. The three algorithm blocks always validate; only the
    one named by ``algorithm`` is used and enters the fingerprint.
    """
    model_config = ConfigDict(extra="forbid")

    description: str = Field("", description="Free text, e.g. the provenance of a preset")
    algorithm: Algorithm = Algorithm.REBRAC
    head: HeadKind = HeadKind.MSE
    classification: Optional[ClassificationConfig] = None
    rebrac: RebracConfig = Field(default_factory=RebracConfig)
    iql: IqlConfig = Field(default_factory=IqlConfig)
    lbsac: LbSacConfig = Field(default_factory=LbSacConfig)

    dataset: str = Field(..., min_length=1, description="Path to a CODS file")
    env: Optional[str] = Field(None, description="Evaluation env; defaults to the dataset's source env")
    seed: int = Field(0, ge=0)
    n_steps: int = Field(1000, ge=0)
    eval_every: int = Field(1000, ge=1)
    eval_episodes: int = Field(10, ge=1)
    log_every: int = Field(100, ge=1)
    fixed_eval_start: bool = False
    sampled_eval: bool = Field(False, description="Evaluate Gaussian actors with sampled actions")
    out_dir: Optional[str] = Field(None, description="Run directory; defaults to CLORL_OUT/<slug>")

    @field_validator("env")
    @classmethod
    def validate_env(cls, v):
        if v is not None and v not in ENV_REGISTRY:
            raise ValueError(f"unknown env {v!r}; expected one of {sorted(ENV_REGISTRY)}")
        return v

    @model_validator(mode="after")
    def validate_head(self):
        if self.head == HeadKind.CE and self.classification is None:
            raise ValueError("head 'ce' requires a classification block")
        if self.head == HeadKind.MSE and self.classification is not None:
            logger.warning("classification block is ignored with head 'mse'")
        return self

    @property
    def algo_config(self) -> AlgoConfig:
        return getattr(self, self.algorithm.value)

    @property
    def active_classification(self) -> Optional[ClassificationConfig]:
        return self.classification if self.head == HeadKind.CE else None

    def hyperparameters(self) -> Dict[str, Any]:
        """Everything that shapes training except the dataset and seed."""
        classification = self.active_classification
        return {
            "algorithm": self.algorithm.value,
            "head": self.head.value,
            "classification": classification.model_dump(mode="json") if classification else None,
            self.algorithm.value: self.algo_config.model_dump(mode="json"),
            "n_steps": self.n_steps,
            "eval_every": self.eval_every,
            "eval_episodes": self.eval_episodes,
            "fixed_eval_start": self.fixed_eval_start,
            "sampled_eval": self.sampled_eval,
        }


# ========== Sweep config ==========

class SweepConfig(BaseModel):
    """
    Cartesian grid over dotted RunConfig keys. The first two axes label the
    heatmap rows and columns; further axes are averaged over in it.
    """
    model_config = ConfigDict(extra="forbid")

    description: str = ""
    base: Dict[str, Any] = Field(default_factory=dict, description="Raw RunConfig fields shared by all cells")
    datasets: List[str] = Field(..., min_length=1)
    grid: Dict[str, List[Any]] = Field(..., min_length=1, description="dotted key -> values")
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    max_workers: int = Field(1, ge=1, description="Concurrent runs")
    out_dir: Optional[str] = None

    @field_validator("grid")
    @classmethod
    def validate_grid(cls, v):
        for key, values in v.items():
            if not values:
                raise ValueError(f"grid axis {key!r} has no values")
            if len({json.dumps(value, sort_keys=True) for value in values}) != len(values):
                raise ValueError(f"grid axis {key!r} repeats a value")
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v

    @property
    def axes(self) -> List[str]:
        return list(self.grid)

    def cells(self) -> List[Dict[str, Any]]:
        """Grid points in row-major order of the axes."""
        return [dict(zip(self.axes, values)) for values in itertools.product(*self.grid.values())]

    def cell_config(self, cell: Dict[str, Any], dataset: str, seed: int) -> RunConfig:
        raw = copy.deepcopy(self.base)
        for key, value in cell.items():
            set_dotted(raw, key, value)
        raw["dataset"] = dataset
        raw["seed"] = seed
        raw.pop("out_dir", None)
        return RunConfig.model_validate(raw)

    @model_validator(mode="after")
    def validate_cells(self):
        for cell in self.cells():
            try:
                self.cell_config(cell, self.datasets[0], self.seeds[0])
            except ValidationError as e:
                raise ValueError(f"grid cell {cell} is not a valid run config: {e}") from e
        return self

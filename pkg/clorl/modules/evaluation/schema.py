import hashlib
import json
from collections import defaultdict
from typing import Any, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from clorl.core.exceptions import DatasetValidationException


def config_fingerprint(hyperparameters: Dict[str, Any]) -> str:
    """sha256 of the canonical (sorted-key, compact) JSON; stable under key reordering."""
    canonical = json.dumps(hyperparameters, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class EvalPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    mean: float
    std: float
    n_episodes: int
    normalized_mean: Optional[float] = None


class QTracePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    mean_q: float
    q_entropy: Optional[float] = None


class RunResult(BaseModel):
    """Everything a run reports; serialized as result.json with sorted keys."""
    fingerprint: str
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    dataset: str = ""
    seed: int
    n_steps: int
    evaluations: List[EvalPoint] = Field(default_factory=list)
    q_trace: List[QTracePoint] = Field(default_factory=list)
    final_return: float
    final_score: float

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2)


class ScoreTable:
    """(dataset id, config fingerprint) -> {seed: final score}"""

    def __init__(self):
        self._scores: Dict[Tuple[str, str], Dict[int, float]] = defaultdict(dict)

    def add(self, dataset: str, fingerprint: str, seed: int, score: float) -> None:
        entry = self._scores[(dataset, fingerprint)]
        if seed in entry:
            raise DatasetValidationException(
                message="Duplicate seed in score table",
                details={"dataset": dataset, "fingerprint": fingerprint, "seed": seed}
            )
        entry[int(seed)] = float(score)

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[str, str, int, float]]) -> "ScoreTable":
        table = cls()
        for dataset, fingerprint, seed, score in rows:
            table.add(dataset, fingerprint, seed, score)
        return table

    def __len__(self) -> int:
        return len(self._scores)

    def __contains__(self, key: Tuple[str, str]) -> bool:
        return key in self._scores

    @property
    def datasets(self) -> List[str]:
        return sorted({dataset for dataset, _ in self._scores})

    def fingerprints(self, dataset: str) -> List[str]:
        return sorted(fp for ds, fp in self._scores if ds == dataset)

    def seeds(self, dataset: str, fingerprint: str) -> List[int]:
        return sorted(self._scores[(dataset, fingerprint)])

    def scores(self, dataset: str, fingerprint: str) -> List[float]:
        """Per-seed scores ordered by seed."""
        entry = self._scores[(dataset, fingerprint)]
        return [entry[seed] for seed in sorted(entry)]

    def rows(self) -> List[Tuple[str, str, int, float]]:
        return [
            (dataset, fingerprint, seed, self._scores[(dataset, fingerprint)][seed])
            for dataset, fingerprint in sorted(self._scores)
            for seed in self.seeds(dataset, fingerprint)
        ]


class EopPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    mean: float
    std: float

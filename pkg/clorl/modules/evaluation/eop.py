"""
Expected Online Performance.

eop(scores, k) is the expected best score among k policies picked
uniformly without replacement from a tuned set. With the scores sorted
ascending, the i-th order statistic is the maximum of a k-subset in
C(i-1, k-1) of the C(N, k) subsets.
"""

import csv
import logging
import math
from fractions import Fraction
from numbers import Integral, Rational
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from clorl.core.exceptions import UsageException
from clorl.modules.evaluation.schema import EopPoint, ScoreTable

logger = logging.getLogger(__name__)

N_BOOTSTRAP = 200
EOP_COLUMNS = ("k", "mean", "std")


def eop_weights(n: int, k: int) -> List[Fraction]:
    """Exact weights of the ascending order statistics s_(1)..s_(N)."""
    if not 1 <= k <= n:
        raise UsageException(
            message=f"k must lie in [1, {n}] for {n} scores",
            details={"k": k, "n_scores": n}
        )
    total = math.comb(n, k)
    return [Fraction(math.comb(i - 1, k - 1), total) for i in range(1, n + 1)]


def eop(scores: Sequence, k: int):
    """
    Expected maximum of k of the scores drawn without replacement.

    Integer and Fraction inputs give an exact Fraction; any other input is
    summed exactly in rational arithmetic and returned as float.
    """
    values = list(scores)
    weights = eop_weights(len(values), k)
    if all(isinstance(v, Rational) for v in values):
        exact_values = sorted(Fraction(int(v)) if isinstance(v, Integral) else Fraction(v) for v in values)
        return sum((w * v for w, v in zip(weights, exact_values)), Fraction(0))
    if not all(math.isfinite(float(v)) for v in values):
        raise UsageException(message="EOP needs finite scores", details={"scores": [str(v) for v in values]})
    exact = sum((w * Fraction(float(v)) for w, v in zip(weights, sorted(float(v) for v in values))), Fraction(0))
    return float(exact)


def _group_cells(table: ScoreTable, datasets: Sequence[str]) -> List[List[List[float]]]:
    """Per dataset, per fingerprint, the seed-ordered score list."""
    if not datasets:
        raise UsageException(message="Dataset group is empty")
    cells = []
    for dataset in datasets:
        fingerprints = table.fingerprints(dataset)
        if not fingerprints:
            raise UsageException(message=f"No scores for dataset {dataset!r}", details={"dataset": dataset})
        cells.append([table.scores(dataset, fp) for fp in fingerprints])
    return cells


def _group_eop(per_dataset: List[List[float]], k: int) -> float:
    """Mean over datasets of the EOP over that dataset's configurations."""
    return math.fsum(eop(scores, k) for scores in per_dataset) / len(per_dataset)


def eop_curve(
    table: ScoreTable,
    datasets: Optional[Sequence[str]] = None,
    ks: Iterable[int] = (1,),
    n_bootstrap: int = N_BOOTSTRAP,
    seed: int = 0,
) -> List[EopPoint]:
    """
    Per k, the group EOP and its seed-bootstrap std.

    The mean averages, over seed index j, the group EOP computed from each
    configuration's j-th seed (configurations with fewer seeds reuse their
    last one). The std resamples one seed per (dataset, configuration)
    ``n_bootstrap`` times; it is exactly 0 when every cell has a single seed.
    """
    datasets = list(datasets) if datasets is not None else table.datasets
    cells = _group_cells(table, datasets)
    ks = list(ks)
    n_seeds = max(len(scores) for per_dataset in cells for scores in per_dataset)
    rng = np.random.default_rng(seed)
    draws = [
        [rng.integers(0, len(scores), size=n_bootstrap) for scores in per_dataset]
        for per_dataset in cells
    ]

    points = []
    for k in ks:
        by_seed = [
            _group_eop([[scores[min(j, len(scores) - 1)] for scores in per_dataset] for per_dataset in cells], k)
            for j in range(n_seeds)
        ]
        boot = [
            _group_eop(
                [[scores[int(idx[b])] for scores, idx in zip(per_dataset, per_draws)]
                 for per_dataset, per_draws in zip(cells, draws)],
                k,
            )
            for b in range(n_bootstrap)
        ]
        points.append(EopPoint(k=k, mean=math.fsum(by_seed) / n_seeds, std=float(np.std(boot))))
        logger.debug(f"EOP k={k}: {points[-1].mean:.4f} ± {points[-1].std:.4f}")
    return points


def write_eop_csv(points: Sequence[EopPoint], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(EOP_COLUMNS)
        for point in points:
            writer.writerow([point.k, repr(point.mean), repr(point.std)])
    return path


def read_score_csv(paths: Iterable[Path], table: Optional[ScoreTable] = None) -> ScoreTable:
    """
    Load score rows into a table. Accepted layouts: the sweep's
    ``dataset,fingerprint,seed,score`` file, or a bare ``score`` column
    (one configuration per row, as for a hand-written list of policy scores).
    """
    table = table if table is not None else ScoreTable()
    for path in paths:
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or "score" not in reader.fieldnames:
                raise UsageException(
                    message=f"{path} has no 'score' column",
                    details={"path": str(path), "columns": reader.fieldnames}
                )
            for row_index, row in enumerate(reader):
                table.add(
                    dataset=row.get("dataset") or path.stem,
                    fingerprint=row.get("fingerprint") or f"row{row_index}",
                    seed=int(row.get("seed") or 0),
                    score=float(row["score"]),
                )
    return table

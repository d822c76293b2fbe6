"""
Run and sweep orchestration.

A sweep trains every (grid cell, dataset, seed) independently, each run in
its own process when ``max_workers > 1``. Scores are collected after all
runs have joined; failed runs are recorded as NaN and never stop the sweep.
"""

import csv
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from clorl.core.exceptions import ConfigException
from clorl.modules.algorithms.usecase import TrainOutcome, train
from clorl.modules.cli.schema import RunConfig, SweepConfig
from clorl.modules.data import DatasetMeta, DatasetRepository, OfflineDataset
from clorl.modules.envs import ToyEnv, make_env
from clorl.modules.evaluation.schema import ScoreTable, config_fingerprint

logger = logging.getLogger(__name__)

SCORE_COLUMNS = ("dataset", "fingerprint", "seed", "score")


def dataset_id(path: str) -> str:
    return Path(path).stem


class RunUsecase:

    def __init__(self):
        self.repository = DatasetRepository()

    def _resolve_env(self, config: RunConfig, dataset: OfflineDataset, meta: DatasetMeta) -> ToyEnv:
        env_id = config.env or meta.env_id
        if env_id is None:
            raise ConfigException(
                message="No evaluation env: set 'env' or use a dataset whose source names one",
                details={"dataset": config.dataset}
            )
        env = make_env(env_id)
        if (env.obs_dim, env.act_dim) != (dataset.obs_dim, dataset.act_dim):
            raise ConfigException(
                message=f"Dataset dimensions do not match env {env_id!r}",
                details={
                    "dataset": [dataset.obs_dim, dataset.act_dim],
                    "env": [env.obs_dim, env.act_dim],
                }
            )
        return env

    def execute(self, config: RunConfig, run_dir: Optional[Path] = None) -> TrainOutcome:
        """
        Load the dataset, resolve the evaluation env and train. With a run
        directory, writes log.csv, result.json and checkpoints/<network>.ckpt.
        """
        dataset, meta = self.repository.load(Path(config.dataset))
        env = self._resolve_env(config, dataset, meta)

        run_dir = Path(run_dir) if run_dir is not None else None
        outcome = train(
            config.algorithm,
            config.algo_config,
            config.head,
            dataset,
            meta,
            env,
            seed=config.seed,
            n_steps=config.n_steps,
            classification=config.active_classification,
            eval_every=config.eval_every,
            eval_episodes=config.eval_episodes,
            log_every=config.log_every,
            fixed_eval_start=config.fixed_eval_start,
            sampled_eval=config.sampled_eval,
            log_path=run_dir / "log.csv" if run_dir else None,
            checkpoint_dir=run_dir / "checkpoints" if run_dir else None,
            hyperparameters=config.hyperparameters(),
            dataset_id=dataset_id(config.dataset),
        )
        if run_dir is not None:
            (run_dir / "result.json").write_text(outcome.result.to_json() + "\n", encoding="utf-8")
        return outcome


# ===============================
# Sweep
# ===============================

@dataclass(frozen=True)
class SweepJob:
    cell_index: int
    config: Dict[str, Any]


@dataclass(frozen=True)
class SweepRecord:
    cell_index: int
    dataset: str
    fingerprint: str
    seed: int
    score: float


def run_job(job: SweepJob, usecase: Optional[RunUsecase] = None) -> SweepRecord:
    """One sweep run; any failure becomes a NaN score. Module level so worker processes can pickle it."""
    config = RunConfig.model_validate(job.config)
    fingerprint = config_fingerprint(config.hyperparameters())
    try:
        score = (usecase or RunUsecase()).execute(config).result.final_score
    except Exception as e:
        logger.warning(
            f"Sweep cell {job.cell_index} dataset={config.dataset} seed={config.seed} failed: "
            f"{type(e).__name__}: {e}"
        )
        score = math.nan
    return SweepRecord(
        cell_index=job.cell_index,
        dataset=dataset_id(config.dataset),
        fingerprint=fingerprint,
        seed=config.seed,
        score=score,
    )


@dataclass
class SweepOutcome:
    table: ScoreTable
    cells: List[Dict[str, Any]]
    fingerprints: List[str]
    records: List[SweepRecord]
    paths: Dict[str, Path]


def _label(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def _fmt(value: float) -> str:
    return repr(float(value))


def _nan_mean(values: Sequence[float]) -> float:
    """Mean that stays NaN if any contributing run failed."""
    if not values:
        return math.nan
    return math.fsum(values) / len(values)


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_sweep_outputs(
    config: SweepConfig,
    records: List[SweepRecord],
    fingerprints: List[str],
    out_dir: Path,
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    axes = config.axes
    per_cell: Dict[int, List[float]] = defaultdict(list)
    for record in records:
        per_cell[record.cell_index].append(record.score)
    cell_means = [_nan_mean(per_cell[i]) for i in range(len(cells))]

    paths = {
        "scores": _write_rows(
            out_dir / "scores.csv",
            SCORE_COLUMNS,
            [(r.dataset, r.fingerprint, r.seed, _fmt(r.score)) for r in records],
        ),
        "cells": _write_rows(
            out_dir / "cells.csv",
            ("cell", *axes, "fingerprint", "mean_score", "n_runs"),
            [
                (i, *(_label(cell[axis]) for axis in axes), fingerprints[i], _fmt(cell_means[i]), len(per_cell[i]))
                for i, cell in enumerate(cells)
            ],
        ),
    }

    # heatmap: first axis down, second across; remaining axes averaged
    row_axis = axes[0]
    col_axis = axes[1] if len(axes) > 1 else None
    col_values = config.grid[col_axis] if col_axis else [None]
    grid_scores: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    for i, cell in enumerate(cells):
        key = (_label(cell[row_axis]), _label(cell[col_axis]) if col_axis else "score")
        grid_scores[key].extend(per_cell[i])
    header = [f"{row_axis}\\{col_axis}" if col_axis else row_axis]
    header += [_label(v) for v in col_values] if col_axis else ["score"]
    heatmap_rows = []
    for row_value in config.grid[row_axis]:
        row_label = _label(row_value)
        cols = [_label(v) for v in col_values] if col_axis else ["score"]
        heatmap_rows.append([row_label] + [_fmt(_nan_mean(grid_scores[(row_label, c)])) for c in cols])
    paths["heatmap"] = _write_rows(out_dir / "heatmap.csv", header, heatmap_rows)

    for axis in axes:
        by_value: Dict[str, List[float]] = defaultdict(list)
        for i, cell in enumerate(cells):
            by_value[_label(cell[axis])].extend(per_cell[i])
        rows = [(_label(v), _fmt(_nan_mean(by_value[_label(v)]))) for v in config.grid[axis]]
        paths[f"marginal_{axis}"] = _write_rows(out_dir / f"marginal_{axis}.csv", (axis, "mean_score"), rows)
    return paths


class SweepUsecase:

    def __init__(self):
        self.run_usecase = RunUsecase()

    @staticmethod
    def _jobs(config: SweepConfig, cells: List[Dict[str, Any]]) -> List[SweepJob]:
        return [
            SweepJob(
                cell_index=i,
                config=config.cell_config(cell, dataset, seed).model_dump(mode="json"),
            )
            for i, cell in enumerate(cells)
            for dataset in config.datasets
            for seed in config.seeds
        ]

    @staticmethod
    def _fingerprints(config: SweepConfig, cells: List[Dict[str, Any]]) -> List[str]:
        fingerprints = [
            config_fingerprint(config.cell_config(cell, config.datasets[0], config.seeds[0]).hyperparameters())
            for cell in cells
        ]
        if len(set(fingerprints)) != len(fingerprints):
            raise ConfigException(
                message="Several grid cells train the same configuration (e.g. classification axes with head 'mse')",
                details={"axes": config.axes}
            )
        return fingerprints

    def execute(self, config: SweepConfig, out_dir: Path) -> SweepOutcome:
        cells = config.cells()
        jobs = self._jobs(config, cells)
        fingerprints = self._fingerprints(config, cells)
        logger.info(
            f"Sweep: {len(cells)} cells x {len(config.datasets)} datasets x {len(config.seeds)} seeds "
            f"= {len(jobs)} runs, max_workers={config.max_workers}"
        )

        if config.max_workers == 1:
            records = [run_job(job, self.run_usecase) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=config.max_workers) as executor:
                records = list(executor.map(run_job, jobs))

        table = ScoreTable()
        for record in records:
            table.add(record.dataset, record.fingerprint, record.seed, record.score)
        n_failed = sum(1 for r in records if not math.isfinite(r.score))
        if n_failed:
            logger.warning(f"Sweep finished with {n_failed}/{len(records)} failed runs")

        paths = write_sweep_outputs(config, records, fingerprints, out_dir)
        logger.info(f"Sweep outputs written to {out_dir}")
        return SweepOutcome(table=table, cells=cells, fingerprints=fingerprints, records=records, paths=paths)

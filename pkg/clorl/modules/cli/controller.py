import json
import logging
from argparse import Namespace
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from slugify import slugify

from clorl.config.config import output_root
from clorl.core.exceptions import ConfigException, OutputExistsException
from clorl.core.response import CommandResponse
from clorl.modules.categorical_value import support_from_dataset
from clorl.modules.cli.schema import RunConfig, SweepConfig, apply_overrides, set_dotted
from clorl.modules.data import DatasetRepository, save_dataset
from clorl.modules.envs import generate_dataset
from clorl.modules.evaluation.eop import eop_curve, read_score_csv, write_eop_csv
from clorl.modules.evaluation.usecase import RunUsecase, SweepUsecase

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parents[2] / "presets"

# flag name -> dotted RunConfig key
_TRAIN_FLAGS = {
    "dataset": "dataset",
    "env": "env",
    "algorithm": "algorithm",
    "head": "head",
    "m": "classification.m",
    "sigma_zeta": "classification.sigma_zeta_ratio",
    "v_expand": "classification.v_expand",
    "expand_strategy": "classification.expand_strategy",
    "seed": "seed",
    "n_steps": "n_steps",
    "eval_every": "eval_every",
    "eval_episodes": "eval_episodes",
    "log_every": "log_every",
    "out": "out_dir",
}


def _read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigException(message=f"Config file not found: {path}", details={"path": str(path)})
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigException(message=f"{path} is not valid JSON: {e}", details={"path": str(path)}) from e
    if not isinstance(raw, dict):
        raise ConfigException(message=f"{path} must hold a JSON object", details={"path": str(path)})
    return raw


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.json"
    if not path.is_file():
        available = sorted(p.stem for p in PRESET_DIR.glob("*.json"))
        raise ConfigException(message=f"Unknown preset {name!r}", details={"available": available})
    return path


def load_raw_config(config: Optional[str], preset: Optional[str]) -> Dict[str, Any]:
    """Preset first, then the config file on top of it."""
    raw: Dict[str, Any] = {}
    if preset:
        raw.update(_read_json(preset_path(preset)))
    if config:
        raw.update(_read_json(Path(config)))
    return raw


def _require_dataset_file(path: str) -> None:
    if not Path(path).is_file():
        raise ConfigException(message=f"Dataset file not found: {path}", details={"dataset": path})


def _claim_output(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise OutputExistsException(
            message=f"{path} already exists; pass --force to overwrite",
            details={"path": str(path)}
        )


class CliController:

    @staticmethod
    def cmd_gen_data(args: Namespace) -> dict:
        output = Path(args.output)
        _claim_output(output, args.force)
        dataset, meta = generate_dataset(
            args.env,
            args.behavior,
            n_episodes=args.episodes,
            noise_std=args.noise_std,
            seed=args.seed,
            reward_scale=args.reward_scale,
            fixed_start=args.fixed_start,
        )
        save_dataset(dataset, meta, output)
        returns = dataset.episode_returns()
        return CommandResponse.created(
            message="Dataset generated",
            data={
                "meta": meta,
                "n": dataset.n,
                "episodes": len(dataset.episode_starts),
                "obs_dim": dataset.obs_dim,
                "act_dim": dataset.act_dim,
                "mean_return": float(np.mean(returns)),
                "std_return": float(np.std(returns)),
            },
            meta={"path": output},
        )

    @staticmethod
    def build_run_config(args: Namespace) -> RunConfig:
        raw = load_raw_config(args.config, args.preset)
        for flag, key in _TRAIN_FLAGS.items():
            value = getattr(args, flag, None)
            if value is not None:
                set_dotted(raw, key, value)
        if args.fixed_eval_start:
            raw["fixed_eval_start"] = True
        if args.sampled_eval:
            raw["sampled_eval"] = True
        raw = apply_overrides(raw, args.set or [])
        return RunConfig.model_validate(raw)

    @staticmethod
    def run_dir_for(config: RunConfig) -> Path:
        if config.out_dir:
            return Path(config.out_dir)
        name = slugify(f"{config.algorithm.value}-{config.head.value}-{Path(config.dataset).stem}-seed{config.seed}")
        return Path(output_root()) / name

    @staticmethod
    def cmd_train(args: Namespace) -> dict:
        config = CliController.build_run_config(args)
        _require_dataset_file(config.dataset)
        run_dir = CliController.run_dir_for(config)
        _claim_output(run_dir / "result.json", args.force)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.json").write_text(
            json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        logger.info(f"Run directory: {run_dir}")

        usecase = RunUsecase()
        outcome = usecase.execute(config, run_dir)
        return CommandResponse.created(
            message="Training finished",
            data={
                "fingerprint": outcome.result.fingerprint,
                "final_return": outcome.result.final_return,
                "final_score": outcome.result.final_score,
            },
            meta={"run_dir": run_dir},
        )

    @staticmethod
    def build_sweep_config(args: Namespace) -> SweepConfig:
        raw = load_raw_config(args.config, args.preset)
        if args.dataset:
            raw["datasets"] = list(args.dataset)
        if args.seeds:
            raw["seeds"] = list(args.seeds)
        if args.max_workers is not None:
            raw["max_workers"] = args.max_workers
        if args.out is not None:
            raw["out_dir"] = args.out
        return SweepConfig.model_validate(apply_overrides(raw, args.set or []))

    @staticmethod
    def cmd_sweep(args: Namespace) -> dict:
        config = CliController.build_sweep_config(args)
        for path in config.datasets:
            _require_dataset_file(path)
        if config.out_dir:
            out_dir = Path(config.out_dir)
        else:
            name = args.preset or (Path(args.config).stem if args.config else "sweep")
            out_dir = Path(output_root()) / "sweeps" / slugify(name)
        _claim_output(out_dir / "scores.csv", args.force)

        usecase = SweepUsecase()
        outcome = usecase.execute(config, out_dir)
        n_failed = sum(1 for r in outcome.records if not np.isfinite(r.score))
        return CommandResponse.created(
            message="Sweep finished",
            data={
                "cells": len(outcome.cells),
                "runs": len(outcome.records),
                "failed_runs": n_failed,
            },
            meta={"out_dir": out_dir, "files": outcome.paths},
        )

    @staticmethod
    def cmd_eop(args: Namespace) -> dict:
        for path in args.scores:
            if not Path(path).is_file():
                raise ConfigException(message=f"Score file not found: {path}", details={"path": path})
        table = read_score_csv(args.scores)
        points = eop_curve(table, datasets=args.dataset or None, ks=args.ks, n_bootstrap=args.n_bootstrap, seed=args.seed)
        meta = None
        if args.output:
            output = Path(args.output)
            _claim_output(output, args.force)
            meta = {"path": write_eop_csv(points, output)}
        return CommandResponse.retrieved(message="Expected online performance", data=points, meta=meta)

    @staticmethod
    def cmd_inspect(args: Namespace) -> dict:
        path = Path(args.path)
        _require_dataset_file(str(path))
        raw = path.read_bytes()
        header, _ = DatasetRepository.read_header(raw)
        dataset, meta = DatasetRepository.decode(raw)
        v_min, v_max = support_from_dataset(dataset, args.gamma)
        returns = dataset.episode_returns()
        return CommandResponse.retrieved(
            message="Dataset header",
            data={
                "header": header,
                "support": {"gamma": args.gamma, "v_min": v_min, "v_max": v_max},
                "episode_return": {
                    "mean": float(np.mean(returns)),
                    "min": float(np.min(returns)),
                    "max": float(np.max(returns)),
                },
            },
            meta={"path": path, "env": meta.env_id},
        )

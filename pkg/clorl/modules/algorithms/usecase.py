"""
Training loop shared by the three algorithm families.

One run owns all of its mutable state. Randomness is split from the run
seed into independent streams (init, batches, target/policy noise,
dropout, evaluation), so a run is reproducible bit for bit.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from clorl.core.exceptions import ConfigException, DivergenceException, NonFiniteException
from clorl.modules.algorithms.critic import CriticHead, build_head
from clorl.modules.algorithms.iql import IqlState, init_iql, iql_train_step
from clorl.modules.algorithms.lbsac import LbSacState, init_lbsac, lbsac_train_step
from clorl.modules.algorithms.rebrac import RebracState, init_rebrac, rebrac_train_step
from clorl.modules.algorithms.schema import (
    AlgoConfig,
    Algorithm,
    ClassificationConfig,
    HeadKind,
    IqlConfig,
    LbSacConfig,
    RebracConfig,
)
from clorl.modules.data import DatasetMeta, OfflineDataset, normalized_score, sample_batch
from clorl.modules.envs import ToyEnv
from clorl.modules.evaluation.schema import EvalPoint, QTracePoint, RunResult, config_fingerprint
from clorl.modules.evaluation.service import evaluate_policy
from clorl.modules.neural import CheckpointRepository

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("step", "critic_loss", "actor_loss", "mean_q_estimate", "eval_return_mean", "eval_return_std")
_LOSS_KEYS = ("critic_loss", "actor_loss", "value_loss", "alpha_loss")

TrainState = Union[RebracState, IqlState, LbSacState]

_CONFIG_TYPES = {
    Algorithm.REBRAC: RebracConfig,
    Algorithm.IQL: IqlConfig,
    Algorithm.LBSAC: LbSacConfig,
}


@dataclass
class TrainOutcome:
    result: RunResult
    state: TrainState
    head: CriticHead
    log_rows: List[Dict[str, Any]] = field(default_factory=list)


def init_train_state(
    algorithm: Algorithm,
    config: AlgoConfig,
    head: CriticHead,
    obs_dim: int,
    act_dim: int,
    rng: np.random.Generator,
    n_steps: int,
) -> TrainState:
    if algorithm == Algorithm.REBRAC:
        return init_rebrac(config, head, obs_dim, act_dim, rng)
    if algorithm == Algorithm.IQL:
        return init_iql(config, head, obs_dim, act_dim, rng, n_steps=max(n_steps, 1))
    return init_lbsac(config, head, obs_dim, act_dim, rng)


def train_step(
    algorithm: Algorithm,
    state: TrainState,
    batch,
    config: AlgoConfig,
    head: CriticHead,
    noise_rng: np.random.Generator,
    dropout_rng: np.random.Generator,
):
    """ReBRAC: critic, actor every 2nd step. IQL: V, Q, actor. LB-SAC: critic, actor, alpha."""
    if algorithm == Algorithm.REBRAC:
        return rebrac_train_step(state, batch, config, head, noise_rng)
    if algorithm == Algorithm.IQL:
        return iql_train_step(state, batch, config, head, dropout_rng)
    return lbsac_train_step(state, batch, config, head, noise_rng)


def _format(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(float(value))


class RunLog:
    """Append-only CSV run log; the file is flushed after every row."""

    def __init__(self, path: Optional[Path]):
        self.rows: List[Dict[str, Any]] = []
        self._handle = None
        self._writer = None
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(path, "w", newline="", encoding="utf-8")
            self._writer = csv.writer(self._handle, lineterminator="\n")
            self._writer.writerow(LOG_COLUMNS)

    def append(self, row: Dict[str, Any]) -> None:
        self.rows.append(row)
        if self._writer is not None:
            self._writer.writerow([row["step"]] + [_format(row.get(col)) for col in LOG_COLUMNS[1:]])
            self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def _check_finite(step: int, diagnostics: Dict[str, float]) -> None:
    bad = {key: diagnostics[key] for key in _LOSS_KEYS if key in diagnostics and not math.isfinite(diagnostics[key])}
    if bad:
        logger.error(f"Non-finite loss at step {step}: {bad}")
        raise DivergenceException(step=step, details={"losses": {k: str(v) for k, v in bad.items()}})


def train(
    algorithm: Algorithm | str,
    config: AlgoConfig,
    head_kind: HeadKind | str,
    dataset: OfflineDataset,
    meta: DatasetMeta,
    env: ToyEnv,
    seed: int = 0,
    n_steps: int = 1000,
    classification: Optional[ClassificationConfig] = None,
    eval_every: int = 1000,
    eval_episodes: int = 10,
    log_every: int = 100,
    fixed_eval_start: bool = False,
    sampled_eval: bool = False,
    log_path: Optional[Path] = None,
    checkpoint_dir: Optional[Path] = None,
    hyperparameters: Optional[Dict[str, Any]] = None,
    dataset_id: str = "",
) -> TrainOutcome:
    algorithm = Algorithm(algorithm)
    head_kind = HeadKind(head_kind)
    if n_steps < 0 or eval_every < 1 or log_every < 1:
        raise ConfigException(
            message="n_steps must be >= 0 and eval/log cadences >= 1",
            details={"n_steps": n_steps, "eval_every": eval_every, "log_every": log_every}
        )
    expected_type = _CONFIG_TYPES[algorithm]
    if not isinstance(config, expected_type):
        config = expected_type.model_validate(config.model_dump() if hasattr(config, "model_dump") else config)

    if meta.reward_scale != 1.0 and not meta.reward_scale_applied:
        dataset = dataset.with_reward_scale(meta.reward_scale)

    head = build_head(head_kind, dataset, config.gamma, classification)
    init_ss, batch_ss, noise_ss, dropout_ss, eval_ss = np.random.SeedSequence(seed).spawn(5)
    batch_rng = np.random.default_rng(batch_ss)
    noise_rng = np.random.default_rng(noise_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    eval_seed = int(eval_ss.generate_state(1)[0])
    fixed_start = env.default_initial_state if fixed_eval_start else None

    state = init_train_state(
        algorithm, config, head, dataset.obs_dim, dataset.act_dim,
        np.random.default_rng(init_ss), n_steps,
    )
    hyperparameters = hyperparameters if hyperparameters is not None else {
        "algorithm": algorithm.value,
        "head": head_kind.value,
        "classification": classification.model_dump(mode="json") if classification and head_kind == HeadKind.CE else None,
        algorithm.value: config.model_dump(mode="json"),
        "n_steps": n_steps,
    }

    evaluations: List[EvalPoint] = []
    q_trace: List[QTracePoint] = []

    def evaluate(step: int) -> EvalPoint:
        mean, std = evaluate_policy(env, state.policy, eval_episodes, eval_seed, fixed_start, sampled=sampled_eval)
        point = EvalPoint(
            step=step, mean=mean, std=std, n_episodes=eval_episodes,
            normalized_mean=normalized_score(mean, meta),
        )
        evaluations.append(point)
        return point

    run_log = RunLog(log_path)
    logger.info(
        f"Training {algorithm.value}/{head_kind.value} seed={seed} n_steps={n_steps} "
        f"on n={dataset.n} transitions"
    )
    try:
        first = evaluate(0)
        run_log.append({"step": 0, "eval_return_mean": first.mean, "eval_return_std": first.std})

        last_actor_loss: Optional[float] = None
        for step in range(1, n_steps + 1):
            batch = sample_batch(dataset, config.batch_size, batch_rng)
            try:
                state, diagnostics = train_step(algorithm, state, batch, config, head, noise_rng, dropout_rng)
            except NonFiniteException as e:
                logger.error(f"Non-finite update at step {step}: {e.message}")
                raise DivergenceException(step=step, details=e.details) from e
            _check_finite(step, diagnostics)
            if "actor_loss" in diagnostics:
                last_actor_loss = diagnostics["actor_loss"]

            is_eval = step % eval_every == 0 or step == n_steps
            is_log = step % log_every == 0
            if not (is_eval or is_log):
                continue

            row: Dict[str, Any] = {
                "step": step,
                "critic_loss": diagnostics["critic_loss"],
                "actor_loss": last_actor_loss,
                "mean_q_estimate": diagnostics["q_mean"],
            }
            q_trace.append(QTracePoint(step=step, mean_q=diagnostics["q_mean"], q_entropy=diagnostics.get("q_entropy")))
            if is_eval:
                point = evaluate(step)
                row["eval_return_mean"] = point.mean
                row["eval_return_std"] = point.std
            run_log.append(row)
            logger.info(
                f"step={step} critic_loss={diagnostics['critic_loss']:.4f} "
                f"q={diagnostics['q_mean']:.3f}"
                + (f" eval={row['eval_return_mean']:.3f}" if is_eval else "")
            )
    finally:
        run_log.close()

    final = evaluations[-1]
    result = RunResult(
        fingerprint=config_fingerprint(hyperparameters),
        hyperparameters=hyperparameters,
        dataset=dataset_id,
        seed=seed,
        n_steps=n_steps,
        evaluations=evaluations,
        q_trace=q_trace,
        final_return=final.mean,
        final_score=final.normalized_mean,
    )

    if checkpoint_dir is not None:
        for name, (spec, params) in state.networks.items():
            CheckpointRepository.save(Path(checkpoint_dir) / f"{name}.ckpt", params, spec=spec, step=n_steps)

    logger.info(f"Finished {algorithm.value}/{head_kind.value} seed={seed}: final return {final.mean:.4f}")
    return TrainOutcome(result=result, state=state, head=head, log_rows=run_log.rows)

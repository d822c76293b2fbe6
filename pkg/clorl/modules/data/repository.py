"""
CODS v1 dataset files

  bytes 0-7   magic "CODSv001"
  u32 LE      header length
  UTF-8 JSON  {obs_dim, act_dim, n, episode_starts, reward_scale,
               random_score, expert_score, source}
  float32 LE  observations, actions, rewards, next_observations
  n bytes     dones (0/1)
  u32 LE      CRC32 of everything above

Rewards are stored unscaled; load multiplies reward_scale in once.
next_actions are not stored and are rebuilt from the episode boundaries.
"""

import json
import logging
import struct
import zlib
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import ValidationError

from clorl.core.exceptions import DatasetFormatException
from clorl.modules.data.model import OfflineDataset
from clorl.modules.data.schema import CodsHeader, DatasetMeta
from clorl.modules.data.service import build_next_actions, validate_dataset

logger = logging.getLogger(__name__)

MAGIC = b"CODSv001"
_LE_F32 = np.dtype("<f4")
_HEADER_KEYS = {
    "obs_dim", "act_dim", "n", "episode_starts", "reward_scale",
    "random_score", "expert_score", "source",
}


def _validated_header(header: dict) -> CodsHeader:
    try:
        return CodsHeader.model_validate(header)
    except ValidationError as e:
        raise DatasetFormatException(
            message="Header values are invalid",
            details={"errors": [
                {"field": ".".join(str(loc) for loc in err["loc"]), "message": err["msg"]}
                for err in e.errors()
            ]}
        ) from e


class DatasetRepository:

    @staticmethod
    def encode(dataset: OfflineDataset, meta: DatasetMeta) -> bytes:
        validate_dataset(dataset)
        header = {
            "obs_dim": dataset.obs_dim,
            "act_dim": dataset.act_dim,
            "n": dataset.n,
            "episode_starts": list(dataset.episode_starts),
            "reward_scale": meta.reward_scale,
            "random_score": meta.random_score,
            "expert_score": meta.expert_score,
            "source": meta.source,
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

        parts = [MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
        for array in (dataset.observations, dataset.actions, dataset.file_rewards, dataset.next_observations):
            parts.append(np.ascontiguousarray(array, dtype=_LE_F32).tobytes())
        parts.append(dataset.dones.astype(np.uint8).tobytes())
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)

    @staticmethod
    def save(dataset: OfflineDataset, meta: DatasetMeta, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(DatasetRepository.encode(dataset, meta))
        logger.info(f"Saved dataset n={dataset.n} episodes={len(dataset.episode_starts)} to {path}")
        return path

    @staticmethod
    def read_header(raw: bytes) -> Tuple[dict, int]:
        """Parse magic and JSON header; returns (header, payload offset)."""
        if len(raw) < len(MAGIC) + 8:
            raise DatasetFormatException(message="File too short for a CODS header")
        if raw[:len(MAGIC)] != MAGIC:
            raise DatasetFormatException(
                message="Bad magic or unsupported version",
                details={"magic": raw[:len(MAGIC)].hex()}
            )
        (header_len,) = struct.unpack_from("<I", raw, len(MAGIC))
        start = len(MAGIC) + 4
        if start + header_len > len(raw):
            raise DatasetFormatException(message="Header truncated")
        try:
            header = json.loads(raw[start:start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise DatasetFormatException(message="Header is not valid JSON", details={"error": str(e)})
        if not isinstance(header, dict) or set(header) != _HEADER_KEYS:
            raise DatasetFormatException(
                message="Header keys do not match CODS v1",
                details={"keys": sorted(header) if isinstance(header, dict) else None}
            )
        return header, start + header_len

    @staticmethod
    def decode(raw: bytes) -> Tuple[OfflineDataset, DatasetMeta]:
        header, offset = DatasetRepository.read_header(raw)
        if len(raw) < offset + 4:
            raise DatasetFormatException(message="File truncated before checksum")
        (stored_crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
        if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
            raise DatasetFormatException(message="Checksum mismatch")

        fields = _validated_header(header)
        n, obs_dim, act_dim = fields.n, fields.obs_dim, fields.act_dim
        expected = offset + 4 * n * (2 * obs_dim + act_dim + 1) + n + 4
        if len(raw) != expected:
            raise DatasetFormatException(
                message="Payload size does not match the header",
                details={"expected_bytes": expected, "actual_bytes": len(raw)}
            )

        def block(count: int) -> np.ndarray:
            nonlocal offset
            values = np.frombuffer(raw, dtype=_LE_F32, count=count, offset=offset).astype(np.float32)
            offset += count * _LE_F32.itemsize
            return values

        observations = block(n * obs_dim).reshape(n, obs_dim)
        actions = block(n * act_dim).reshape(n, act_dim)
        rewards = block(n)
        next_observations = block(n * obs_dim).reshape(n, obs_dim)
        dones = np.frombuffer(raw, dtype=np.uint8, count=n, offset=offset)
        if np.any(dones > 1):
            raise DatasetFormatException(message="dones must be 0 or 1")

        dataset = OfflineDataset(
            observations=observations,
            actions=actions,
            rewards=rewards,
            next_observations=next_observations,
            next_actions=build_next_actions(actions, fields.episode_starts),
            dones=dones.astype(bool),
            episode_starts=tuple(fields.episode_starts),
        )
        validate_dataset(dataset)

        try:
            meta = DatasetMeta(
                reward_scale=fields.reward_scale,
                source=fields.source,
                random_score=fields.random_score,
                expert_score=fields.expert_score,
            )
        except ValidationError as e:
            raise DatasetFormatException(
                message="Header scores are inconsistent",
                details={"errors": [err["msg"] for err in e.errors()]}
            ) from e
        if meta.reward_scale != 1.0:
            dataset = dataset.with_reward_scale(meta.reward_scale)
        meta = meta.model_copy(update={"reward_scale_applied": True})
        return dataset, meta

    @staticmethod
    def load(path: Path) -> Tuple[OfflineDataset, DatasetMeta]:
        path = Path(path)
        dataset, meta = DatasetRepository.decode(path.read_bytes())
        logger.info(
            f"Loaded dataset {path} n={dataset.n} episodes={len(dataset.episode_starts)} "
            f"reward_scale={meta.reward_scale}"
        )
        return dataset, meta


def save_dataset(dataset: OfflineDataset, meta: DatasetMeta, path: Path) -> Path:
    return DatasetRepository.save(dataset, meta, path)


def load_dataset(path: Path) -> Tuple[OfflineDataset, DatasetMeta]:
    return DatasetRepository.load(path)

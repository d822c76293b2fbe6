"""
Checkpoint persistence

Layout: u32 little-endian header length, UTF-8 JSON header
{spec, step, schedule, shapes}, then every parameter array as contiguous
little-endian float32 in ParamSet order.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from clorl.core.exceptions import CheckpointFormatException
from clorl.modules.neural.model import ParamSet
from clorl.modules.neural.schema import LrSchedule, MlpSpec

_LE_F32 = np.dtype("<f4")


@dataclass(frozen=True)
class Checkpoint:
    params: ParamSet
    spec: Optional[MlpSpec]
    step: int
    schedule: LrSchedule


class CheckpointRepository:

    @staticmethod
    def save(
        path: Path,
        params: ParamSet,
        spec: Optional[MlpSpec] = None,
        step: int = 0,
        schedule: LrSchedule = LrSchedule.constant(),
    ) -> Path:
        header = {
            "spec": spec.model_dump(mode="json") if spec is not None else None,
            "step": int(step),
            "schedule": schedule.model_dump(mode="json"),
            "shapes": [list(shape) for shape in params.shapes],
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as out_file:
            out_file.write(struct.pack("<I", len(header_bytes)))
            out_file.write(header_bytes)
            for array in params.arrays:
                out_file.write(np.ascontiguousarray(array, dtype=_LE_F32).tobytes())
        return path

    @staticmethod
    def load(path: Path) -> Checkpoint:
        raw = Path(path).read_bytes()
        if len(raw) < 4:
            raise CheckpointFormatException(message="Checkpoint truncated", details={"path": str(path)})
        (header_len,) = struct.unpack_from("<I", raw, 0)
        if 4 + header_len > len(raw):
            raise CheckpointFormatException(message="Checkpoint header truncated", details={"path": str(path)})
        try:
            header = json.loads(raw[4:4 + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointFormatException(
                message="Checkpoint header is not valid JSON",
                details={"path": str(path), "error": str(e)}
            )

        offset = 4 + header_len
        arrays = []
        for shape in header["shapes"]:
            count = int(np.prod(shape)) if shape else 1
            nbytes = count * _LE_F32.itemsize
            if offset + nbytes > len(raw):
                raise CheckpointFormatException(message="Checkpoint parameters truncated", details={"path": str(path)})
            block = np.frombuffer(raw, dtype=_LE_F32, count=count, offset=offset)
            arrays.append(block.astype(np.float32).reshape(shape))
            offset += nbytes
        if offset != len(raw):
            raise CheckpointFormatException(message="Trailing bytes after checkpoint parameters", details={"path": str(path)})

        spec = MlpSpec.model_validate(header["spec"]) if header["spec"] is not None else None
        return Checkpoint(
            params=ParamSet(tuple(arrays)),
            spec=spec,
            step=header["step"],
            schedule=LrSchedule.model_validate(header["schedule"]),
        )

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, Tuple

import numpy as np

from clorl.core.exceptions import ShapeMismatchException


@dataclass(frozen=True)
class ParamSet:
    """
    Ordered tuple of parameter arrays.

    For an MLP the order is W0, b0, W1, b1, ... with W of shape
    (fan_in, fan_out); other owners (a scalar log-temperature) use any
    layout. Optimizer state and gradients share the same ordering.
    """
    arrays: Tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.arrays)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.arrays)

    def __getitem__(self, index: int) -> np.ndarray:
        return self.arrays[index]

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [a.shape for a in self.arrays]

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays)

    @property
    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.arrays[0::2], self.arrays[1::2]))

    @classmethod
    def from_layers(cls, layers: Sequence[tuple[np.ndarray, np.ndarray]]) -> "ParamSet":
        arrays = []
        for weight, bias in layers:
            arrays.extend([weight, bias])
        return cls(tuple(arrays))

    def check_aligned(self, other: "ParamSet") -> None:
        if self.shapes != other.shapes:
            raise ShapeMismatchException(
                message="Parameter sets are not aligned",
                details={"left": [list(s) for s in self.shapes], "right": [list(s) for s in other.shapes]}
            )

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ParamSet":
        return ParamSet(tuple(fn(a) for a in self.arrays))

    def zip_map(self, other: "ParamSet", fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ParamSet":
        self.check_aligned(other)
        return ParamSet(tuple(fn(a, b) for a, b in zip(self.arrays, other.arrays)))

    def zeros_like(self) -> "ParamSet":
        return self.map(np.zeros_like)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays]) if self.arrays else np.zeros(0)

    def with_flat(self, flat: np.ndarray) -> "ParamSet":
        if flat.size != self.n_params:
            raise ShapeMismatchException(
                message="Flat vector length does not match the parameter count",
                details={"expected": self.n_params, "received": int(flat.size)}
            )
        arrays, offset = [], 0
        for a in self.arrays:
            arrays.append(flat[offset:offset + a.size].reshape(a.shape).astype(a.dtype))
            offset += a.size
        return ParamSet(tuple(arrays))

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays)

    def equals(self, other: "ParamSet") -> bool:
        """Bitwise equality (shapes, dtypes and values)."""
        if self.shapes != other.shapes:
            return False
        return all(
            a.dtype == b.dtype and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays, other.arrays)
        )

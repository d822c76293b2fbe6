from clorl.modules.data.model import Batch, OfflineDataset
from clorl.modules.data.repository import DatasetRepository, load_dataset, save_dataset
from clorl.modules.data.schema import DatasetMeta
from clorl.modules.data.service import (
    build_next_actions,
    make_dataset,
    normalized_score,
    sample_batch,
    validate_dataset,
)

__all__ = [
    "Batch",
    "DatasetMeta",
    "DatasetRepository",
    "OfflineDataset",
    "build_next_actions",
    "load_dataset",
    "make_dataset",
    "normalized_score",
    "sample_batch",
    "save_dataset",
    "validate_dataset",
]

from veilface.data.datasets import *
from veilface.data.image_io import *
from veilface.data.ingest import *
from veilface.data.types import *

__all__ = [
    "DEFAULT_SPLIT_FRACTIONS",
    "Split",
    "IndexEntry",
    "DatasetIndex",
    "to_unit_range",
    "from_unit_range",
    "load_image",
    "save_image",
    "identity_of",
    "assign_split",
    "ingest_dataset",
    "save_index",
    "load_index",
    "FaceDataset",
    "SyntheticFaceDataset",
]

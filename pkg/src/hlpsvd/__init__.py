"""Truncated-SVD node embeddings and classifiers for heterophilic graphs."""

__version__ = "0.1.0"

from .data import GraphDataset, Split, load_dataset, save_dataset  # noqa: F401
from .models import HlpConfig, hlp_aggregate, hlp_concat  # noqa: F401
from .tsvd import TsvdParams, TsvdResult, truncated_svd  # noqa: F401

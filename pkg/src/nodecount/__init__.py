"""Node-count inference for 802.11 cells from client-side observables."""

from nodecount.dataset import Dataset, FeatureSubset, LabeledExample, load_csv, write_csv
from nodecount.errors import NodeCountError

__all__ = [
    "Dataset",
    "FeatureSubset",
    "LabeledExample",
    "NodeCountError",
    "load_csv",
    "write_csv",
]

__version__ = "0.1.0"

"""Multivariate dependence from eigenspectra of normalized kernel Gram matrices."""

import logging

from .dataset import SampleTable, load_csv, parse_groups
from .entropy import joint_entropy, renyi_entropy, shearer_gap, spectrum
from .kernel import KernelSpec, gram, joint_gram, select_bandwidth
from .measures import (
    MeasureReport,
    dual_total_correlation,
    hsic,
    measure_from_table,
    mutual_information,
    subsampled_measure,
    total_correlation,
)
from .inference import auc, permutation_test, permutation_test_multi, power_experiment

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

__all__ = [
    "SampleTable", "load_csv", "parse_groups",
    "spectrum", "renyi_entropy", "joint_entropy", "shearer_gap",
    "KernelSpec", "gram", "joint_gram", "select_bandwidth",
    "MeasureReport", "total_correlation", "dual_total_correlation", "mutual_information",
    "hsic", "measure_from_table", "subsampled_measure",
    "permutation_test", "permutation_test_multi", "power_experiment", "auc",
]

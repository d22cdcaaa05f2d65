"""Benchmark problem generators, suites and performance profiles."""

from .problems import (
    FAMILIES,
    gen_degenerate,
    gen_eq_qp,
    gen_matrix_completion,
    gen_nonneg_pca,
    gen_rosenbrock,
    load_ratings,
    make_instance,
)
from .profiles import data_profile, pairwise_profile, write_data_csv, write_pairwise_csv
from .suites import SUITES, load_records, run_suite, suite_tasks

__all__ = [
    "FAMILIES", "SUITES", "gen_degenerate", "gen_eq_qp", "gen_matrix_completion",
    "gen_nonneg_pca", "gen_rosenbrock", "load_ratings", "make_instance", "data_profile",
    "pairwise_profile", "write_data_csv", "write_pairwise_csv", "load_records",
    "run_suite", "suite_tasks",
]

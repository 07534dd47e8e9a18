"""Active matched-pair experimental design with a sequential betting test.

The package simulates trials that enroll matched pairs preferentially from
a learned high-effect region, test for a treatment effect by betting on
treatment assignment, and compare the design with random enrollment and
regression- or GP-driven active designs.
"""
from .datagen import PairDataset, SyntheticConfig, generate_pair_dataset, load_pairs_csv
from .designs import RunConfig, RunResult, UbarConfig, run_design
from .errors import InputError, PaircalError, RuntimeFailure
from .harness import MetricsSummary, monte_carlo, report, run_replications, summarize
from .theory import FiniteClass, compute_ubar, run_theoretical_robustcal

__version__ = "0.1.0"

__all__ = [
    "FiniteClass", "InputError", "MetricsSummary", "PairDataset", "PaircalError", "RunConfig",
    "RunResult", "RuntimeFailure", "SyntheticConfig", "UbarConfig", "compute_ubar",
    "generate_pair_dataset", "load_pairs_csv", "monte_carlo", "report", "run_design",
    "run_replications", "run_theoretical_robustcal", "summarize",
]

"""Black-box optimization over categorical design spaces.

The loop: encode categories as bits, fit a Bayesian ridge posterior over
a quadratic binary surrogate, Thompson-sample a coefficient vector, add
feasibility penalties, hand the resulting QUBO to a solver, screen the
samples, evaluate the best novel candidates, repeat.  The posterior
scale sigma2 is the single exploration knob; sigma2 = 0 degenerates to
pure exploitation of the ridge mean.
"""

from .acquisition import QuboProblem, build_acquisition, read_qubo, write_qubo
from .dataset import Dataset
from .driver import (
    LoopRecord,
    RunConfig,
    RunTrace,
    dataset_from_trace,
    read_trace,
    run_baseline,
    run_bo,
    run_sweep,
    write_trace,
)
from .exceptions import QubboError
from .objectives import (
    DeceptiveQuboObjective,
    Objective,
    ObjectiveSpec,
    SyntheticQuboObjective,
    TabularObjective,
    load_table,
    make_synthetic,
)
from .report import ReportBundle, build_report, proposal_diversity
from .solvers import (
    FileExchangeAdapter,
    SamplePool,
    SolverConfig,
    random_batch,
    read_pool_csv,
    select_batch,
    solve,
    write_pool_csv,
)
from .space import DesignSpace, PenaltySpec, SiteBinaryEncoder, SiteSpec
from .surrogate import FeatureMap, QuboRidge

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "QubboError",
    "SiteSpec",
    "DesignSpace",
    "PenaltySpec",
    "SiteBinaryEncoder",
    "FeatureMap",
    "QuboRidge",
    "Dataset",
    "QuboProblem",
    "build_acquisition",
    "write_qubo",
    "read_qubo",
    "SamplePool",
    "SolverConfig",
    "solve",
    "select_batch",
    "random_batch",
    "write_pool_csv",
    "read_pool_csv",
    "FileExchangeAdapter",
    "Objective",
    "ObjectiveSpec",
    "SyntheticQuboObjective",
    "DeceptiveQuboObjective",
    "TabularObjective",
    "make_synthetic",
    "load_table",
    "RunConfig",
    "LoopRecord",
    "RunTrace",
    "run_bo",
    "run_baseline",
    "run_sweep",
    "write_trace",
    "read_trace",
    "dataset_from_trace",
    "ReportBundle",
    "build_report",
    "proposal_diversity",
]

"""Statistically ranked RF beam training for sparse MIMO channels."""

from .beamstats import (
    BeamHierarchy,
    BeamHistory,
    BeamPmf,
    PmfError,
    Ranking,
    aggregate,
    cumulative_cut,
    empirical_pmf,
    entropy,
    min_entropy_grouping,
    rank,
    relative_entropy,
    update_history,
)
from .codebook import (
    Codebook,
    PhysicalOracle,
    SparseChannel,
    UlaConfig,
    dft_codebook,
    physical_oracle,
    rssi,
    steering_vector,
)
from .estimators import ExhaustiveSearch, HybridSearch, MarsSearch, MultiLevelSearch
from .montecarlo import TrialStats, compare_strategies, run_trials, sample_realization
from .strategies import (
    FailedPairMemory,
    IndexOracle,
    MlHierarchySpec,
    SearchResult,
    exhaustive_search,
    expected_tests_bruteforce,
    hybrid_search,
    mars_search,
    mean_tests,
    ml_search,
    op_operator,
)

__version__ = "0.1.0"

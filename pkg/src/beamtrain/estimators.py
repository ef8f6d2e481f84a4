"""Scikit-learn style wrappers around the search strategies.

``fit`` learns beam statistics, either from a beam history (an ``(n, 2)``
array of successful (tx, rx) index pairs) or from given PMFs.  ``search``
runs one beam training operation against an oracle and ``predict`` maps
ground-truth realizations to the number of tests spent on each.

>>> est = MarsSearch().fit(tx_pmf=[0.2, 0.5, 0.3], rx_pmf=[0.9, 0.1])
>>> est.predict([[1, 0], [0, 1]]).tolist()
[1, 6]
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .beamstats import (
    BeamHistory,
    BeamPmf,
    aggregate,
    contiguous_grouping,
    empirical_pmf,
    entropy,
    min_entropy_grouping,
)
from .strategies import (
    FailedPairMemory,
    IndexOracle,
    MlHierarchySpec,
    SearchResult,
    analytic_mean_tests,
    count_distribution,
    default_num_groups,
    exhaustive_search,
    expected_tests_bruteforce,
    hybrid_search,
    mars_search,
    ml_search,
)
from .validation import check_pairs, check_pmf


class BeamSearchEstimator(BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_search``."""

    def __init__(self, n_tx=None, n_rx=None, smoothing=1.0):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.smoothing = smoothing

    def fit(self, X=None, y=None, *, tx_pmf=None, rx_pmf=None):
        """Learn Tx/Rx beam PMFs.

        Parameters
        ----------
        X : array-like of shape (n_observations, 2), optional
            Beam history: successful (tx, rx) index pairs.
        tx_pmf, rx_pmf : BeamPmf or array-like, optional
            Known PMFs; take precedence over ``X``.

        With neither, uniform PMFs over ``n_tx`` x ``n_rx`` beams are used.
        """
        if tx_pmf is not None or rx_pmf is not None:
            if tx_pmf is None or rx_pmf is None:
                raise ValueError("give both tx_pmf and rx_pmf")
            tx, rx = check_pmf(tx_pmf, "T"), check_pmf(rx_pmf, "R")
            for name, want, pmf in (("n_tx", self.n_tx, tx), ("n_rx", self.n_rx, rx)):
                if want is not None and want != len(pmf):
                    raise ValueError(f"{name}={want} but the PMF has {len(pmf)} beams")
            self.history_ = None
        elif X is not None:
            pairs = check_pairs(X, self.n_tx, self.n_rx)
            n_tx = self.n_tx if self.n_tx is not None else int(pairs[:, 0].max()) + 1
            n_rx = self.n_rx if self.n_rx is not None else int(pairs[:, 1].max()) + 1
            self.history_ = BeamHistory.empty(n_tx, n_rx).merge_counts(
                np.bincount(pairs[:, 0], minlength=n_tx), np.bincount(pairs[:, 1], minlength=n_rx)
            )
            tx, rx = empirical_pmf(self.history_, self.smoothing)
        else:
            if self.n_tx is None or self.n_rx is None:
                raise ValueError("fit needs a history, PMFs, or n_tx and n_rx")
            tx, rx = BeamPmf.uniform(self.n_tx, "T"), BeamPmf.uniform(self.n_rx, "R")
            self.history_ = None
        self.tx_pmf_, self.rx_pmf_ = tx, rx
        self.n_tx_, self.n_rx_ = len(tx), len(rx)
        self._prepare()
        return self

    def _prepare(self):
        pass

    def search(self, oracle, memory: FailedPairMemory | None = None) -> SearchResult:
        """One beam training operation against ``oracle``."""
        check_is_fitted(self, "tx_pmf_")
        return self._search(oracle, memory)

    def __call__(self, oracle) -> SearchResult:
        return self.search(oracle)

    def predict(self, X) -> np.ndarray:
        """Tests used for each ground-truth (tx, rx) realization in ``X``."""
        check_is_fitted(self, "tx_pmf_")
        pairs = check_pairs(X, self.n_tx_, self.n_rx_)
        table = self.cost_table()
        return table[pairs[:, 0], pairs[:, 1]]

    def cost_table(self) -> np.ndarray:
        """``(n_tx, n_rx)`` array of tests used per realization; 0 marks failure."""
        check_is_fitted(self, "tx_pmf_")
        if getattr(self, "_cost_table", None) is None:
            table = np.zeros((self.n_tx_, self.n_rx_), dtype=np.int64)
            for t in range(self.n_tx_):
                for r in range(self.n_rx_):
                    res = self.search(IndexOracle((t, r)))
                    table[t, r] = res.tests_used if res.found_pair is not None else 0
            self._cost_table = table
        return self._cost_table

    def expected_tests(self) -> float:
        """Exact mean tests under the fitted PMFs (enumerates realizations)."""
        check_is_fitted(self, "tx_pmf_")
        return expected_tests_bruteforce(self.search, self.tx_pmf_, self.rx_pmf_)

    def tests_distribution(self) -> dict[int, float]:
        check_is_fitted(self, "tx_pmf_")
        return count_distribution(self.search, self.tx_pmf_, self.rx_pmf_)

    def score(self, X, y=None) -> float:
        """Negative mean tests over realizations ``X`` (higher is better)."""
        return -float(np.mean(self.predict(X)))


class ExhaustiveSearch(BeamSearchEstimator):
    def __init__(self, full_sweep=True, n_tx=None, n_rx=None, smoothing=1.0):
        super().__init__(n_tx=n_tx, n_rx=n_rx, smoothing=smoothing)
        self.full_sweep = full_sweep

    def _prepare(self):
        self._cost_table = None

    def _search(self, oracle, memory):
        return exhaustive_search(oracle, self.n_tx_, self.n_rx_, self.full_sweep, memory)


class MultiLevelSearch(BeamSearchEstimator):
    """Tree search with contiguous broad beams, swept exhaustively per level.

    ``tx_groups``/``rx_groups`` give the number of level-1 broad beams per
    side; ``"auto"`` picks the divisor of N nearest to sqrt(N) and 1 keeps a
    single level.
    """

    def __init__(self, tx_groups="auto", rx_groups=1, n_tx=None, n_rx=None, smoothing=1.0):
        super().__init__(n_tx=n_tx, n_rx=n_rx, smoothing=smoothing)
        self.tx_groups = tx_groups
        self.rx_groups = rx_groups

    def _groupings(self, n, groups):
        if groups == "auto":
            groups = default_num_groups(n)
        if groups in (1, n):
            return []
        return [contiguous_grouping(n, int(groups))]

    def _prepare(self):
        self._cost_table = None
        self.spec_ = MlHierarchySpec.from_groupings(
            self.n_tx_, self.n_rx_,
            self._groupings(self.n_tx_, self.tx_groups),
            self._groupings(self.n_rx_, self.rx_groups),
        )

    def _search(self, oracle, memory):
        return ml_search(oracle, self.spec_, memory)


class MarsSearch(BeamSearchEstimator):
    """Memory-assisted statistically-ranked search.

    With ``auto_swap`` the lower-entropy side is iterated in the outer loop.
    Thresholds of 1.0 on both sides give pure ranked search.
    """

    def __init__(self, threshold_tx=0.75, threshold_rx=0.75, fallback="ranked",
                 auto_swap=True, fallback_groups=None, n_tx=None, n_rx=None, smoothing=1.0):
        super().__init__(n_tx=n_tx, n_rx=n_rx, smoothing=smoothing)
        self.threshold_tx = threshold_tx
        self.threshold_rx = threshold_rx
        self.fallback = fallback
        self.auto_swap = auto_swap
        self.fallback_groups = fallback_groups

    def _prepare(self):
        self._cost_table = None
        swap = self.auto_swap and entropy(self.rx_pmf_) > entropy(self.tx_pmf_)
        self.outer_ = "tx" if swap else "rx"

    def _search(self, oracle, memory):
        return mars_search(
            oracle, self.tx_pmf_, self.rx_pmf_, self.threshold_tx, self.threshold_rx,
            memory=memory, fallback=self.fallback, outer=self.outer_,
            fallback_groups=self.fallback_groups,
        )

    def analytic_mean_tests(self) -> float:
        """Closed-form mean tests of pure ranked search for the fitted PMFs."""
        check_is_fitted(self, "tx_pmf_")
        return analytic_mean_tests(self.tx_pmf_, self.rx_pmf_)

    def search_mpcs(self, oracle, n_mpcs: int) -> list[SearchResult]:
        """Identify up to ``n_mpcs`` paths, sharing pair memory across searches."""
        check_is_fitted(self, "tx_pmf_")
        memory = FailedPairMemory()
        results = []
        for _ in range(n_mpcs):
            res = self._search(oracle, memory)
            results.append(res)
            if res.found_pair is None:
                break
        return results


class HybridSearch(BeamSearchEstimator):
    """Ranked multi-level search over Tx broad beams.

    ``groups`` fixes the level-1 partition; otherwise ``n_groups`` contiguous
    blocks are formed, rotated for minimum broad entropy when ``grouping`` is
    ``"min_entropy"`` or left at the first boundary for ``"contiguous"``.
    """

    def __init__(self, n_groups="auto", grouping="min_entropy", groups=None,
                 n_tx=None, n_rx=None, smoothing=1.0):
        super().__init__(n_tx=n_tx, n_rx=n_rx, smoothing=smoothing)
        self.n_groups = n_groups
        self.grouping = grouping
        self.groups = groups

    def _prepare(self):
        self._cost_table = None
        if self.groups is not None:
            groups = [list(g) for g in self.groups]
        else:
            k = default_num_groups(self.n_tx_) if self.n_groups == "auto" else int(self.n_groups)
            if self.grouping == "min_entropy":
                groups = min_entropy_grouping(self.tx_pmf_, k)
            elif self.grouping == "contiguous":
                groups = contiguous_grouping(self.n_tx_, k)
            else:
                raise ValueError(f"unknown grouping {self.grouping!r}")
        self.hierarchy_ = aggregate(self.tx_pmf_, groups)
        self.num_levels_ = 2 if len(self.hierarchy_.groups) not in (1, self.n_tx_) else 1

    def _search(self, oracle, memory):
        levels = [] if self.num_levels_ == 1 else self.hierarchy_
        return hybrid_search(oracle, self.tx_pmf_, self.rx_pmf_, levels, memory)


STRATEGIES = {
    "exhaustive": ExhaustiveSearch,
    "ml": MultiLevelSearch,
    "mars": MarsSearch,
    "hybrid": HybridSearch,
}

"""Seeded Monte Carlo evaluation of beam search strategies.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``.
Trials are processed in fixed blocks of ``BLOCK`` trials; block ``b`` of a
run with seed ``s`` draws from ``SeedSequence(s, spawn_key=(b,))``, so the
realization of trial ``i`` depends only on ``(s, i)``.  Results are
therefore identical for any thread count and any split of the trial range.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .beamstats import BeamPmf
from .codebook import PhysicalOracle, dft_codebook, on_grid_channel, UlaConfig
from .strategies import IndexOracle

logger = logging.getLogger(__name__)

BLOCK = 1 << 16


class Realization(NamedTuple):
    tx: int
    rx: int


def _inverse_cdf(pmf: BeamPmf, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(pmf.array)
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_realization(tx_pmf: BeamPmf, rx_pmf: BeamPmf, rng: np.random.Generator) -> Realization:
    """Draw independent Tx and Rx beams by inverse CDF over label order."""
    u = rng.random(2)
    return Realization(int(_inverse_cdf(tx_pmf, u[0])), int(_inverse_cdf(rx_pmf, u[1])))


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_trials(tx_pmf: BeamPmf, rx_pmf: BeamPmf, seed: int, start: int, stop: int):
    """Realizations of trials ``start..stop-1`` as two index arrays."""
    tx_parts, rx_parts = [], []
    for b in range(start // BLOCK, (stop - 1) // BLOCK + 1):
        u = block_generator(seed, b).random((BLOCK, 2))
        lo = max(start - b * BLOCK, 0)
        hi = min(stop - b * BLOCK, BLOCK)
        tx_parts.append(_inverse_cdf(tx_pmf, u[lo:hi, 0]))
        rx_parts.append(_inverse_cdf(rx_pmf, u[lo:hi, 1]))
    return np.concatenate(tx_parts), np.concatenate(rx_parts)


@dataclass
class TrialStats:
    """Histogram of tests per successful trial plus failure count.

    ``found_tx`` / ``found_rx`` tally the beams identified by successful
    trials; they feed the beam history.
    """

    histogram: dict[int, int]
    n_trials: int
    n_failed: int = 0
    found_tx: np.ndarray | None = None
    found_rx: np.ndarray | None = None

    @property
    def n_success(self) -> int:
        return self.n_trials - self.n_failed

    @property
    def mean_tests(self) -> float:
        if self.n_success == 0:
            return math.nan
        return sum(k * c for k, c in self.histogram.items()) / self.n_success

    @property
    def success_within_k(self) -> dict[int, float]:
        out, cum = {}, 0
        for k in range(1, max(self.histogram, default=0) + 1):
            cum += self.histogram.get(k, 0)
            out[k] = cum / self.n_trials
        return out

    def probability_of(self, k: int) -> float:
        return self.histogram.get(k, 0) / self.n_trials

    def standard_error(self) -> float:
        """Standard error of ``mean_tests``."""
        n = self.n_success
        if n < 2:
            return math.nan
        mean = self.mean_tests
        var = sum(c * (k - mean) ** 2 for k, c in self.histogram.items()) / (n - 1)
        return math.sqrt(var / n)

    def __add__(self, other: "TrialStats") -> "TrialStats":
        hist = dict(self.histogram)
        for k, c in other.histogram.items():
            hist[k] = hist.get(k, 0) + c

        def add(a, b):
            if a is None or b is None:
                return None
            return a + b

        return TrialStats(
            dict(sorted(hist.items())),
            self.n_trials + other.n_trials,
            self.n_failed + other.n_failed,
            add(self.found_tx, other.found_tx),
            add(self.found_rx, other.found_rx),
        )

    def to_dict(self) -> dict:
        d = {
            "nTrials": self.n_trials,
            "nFailed": self.n_failed,
            "meanTests": self.mean_tests if self.n_success else None,
            "histogram": {str(k): c for k, c in self.histogram.items()},
            "successWithinK": {str(k): v for k, v in self.success_within_k.items()},
        }
        if self.found_tx is not None:
            d["foundTxCounts"] = self.found_tx.tolist()
            d["foundRxCounts"] = self.found_rx.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tests", "count", "cumulativeFraction"])
        cum = 0
        for k, c in self.histogram.items():
            cum += c
            writer.writerow([k, c, f"{cum / self.n_trials:.6f}"])
        return buf.getvalue()


def cost_tables(strategy, n_tx: int, n_rx: int, oracle_factory: Callable | None = None):
    """Run ``strategy`` once per ground-truth pair.

    Returns ``(tests, found_tx, found_rx)`` arrays of shape (n_tx, n_rx);
    ``found_tx`` is -1 where the search failed.  Strategies are deterministic
    given the realization, so Monte Carlo trials look their outcome up here.
    """
    oracle_factory = oracle_factory or (lambda t, r: IndexOracle((t, r)))
    tests = np.zeros((n_tx, n_rx), dtype=np.int64)
    found_tx = np.full((n_tx, n_rx), -1, dtype=np.int64)
    found_rx = np.full((n_tx, n_rx), -1, dtype=np.int64)
    for t in range(n_tx):
        for r in range(n_rx):
            res = strategy(oracle_factory(t, r))
            tests[t, r] = res.tests_used
            if res.found_pair is not None:
                found_tx[t, r], found_rx[t, r] = res.found_pair
    return tests, found_tx, found_rx


def physical_oracle_factory(n_tx: int, n_rx: int, spacing: float = 0.5,
                            threshold: float | None = None, noise_std: float = 0.0):
    """Oracles for a unit-gain path on the DFT grid of the true beams."""
    tx_cb = dft_codebook(UlaConfig(n_tx, spacing), "T")
    rx_cb = dft_codebook(UlaConfig(n_rx, spacing), "R")

    def make(t, r):
        channel = on_grid_channel(tx_cb, rx_cb, t, r)
        return PhysicalOracle(channel, tx_cb, rx_cb, threshold, noise_std, seed=t * n_rx + r)

    return make


def _fit_if_needed(strategy, tx_pmf, rx_pmf):
    if hasattr(strategy, "fit") and not hasattr(strategy, "tx_pmf_"):
        strategy.fit(tx_pmf=tx_pmf, rx_pmf=rx_pmf)
    return strategy


def _block_stats(tables, tx_pmf, rx_pmf, seed, start, stop) -> TrialStats:
    tests, found_tx, found_rx = tables
    t, r = sample_trials(tx_pmf, rx_pmf, seed, start, stop)
    ft, fr = found_tx[t, r], found_rx[t, r]
    ok = ft >= 0
    counts = np.bincount(tests[t, r][ok])
    hist = {k: int(c) for k, c in enumerate(counts) if c}
    return TrialStats(
        hist, stop - start, int((~ok).sum()),
        np.bincount(ft[ok], minlength=tests.shape[0]),
        np.bincount(fr[ok], minlength=tests.shape[1]),
    )


def _run_tables(tables, tx_pmf, rx_pmf, n_trials, seed, threads, start) -> TrialStats:
    stop = start + n_trials
    edges = sorted({start, stop, *range((start // BLOCK + 1) * BLOCK, stop, BLOCK)})
    spans = list(zip(edges, edges[1:]))
    threads = threads or os.cpu_count() or 1
    if threads == 1 or len(spans) == 1:
        parts = [_block_stats(tables, tx_pmf, rx_pmf, seed, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: _block_stats(tables, tx_pmf, rx_pmf, seed, *s), spans))
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def run_trials(strategy, tx_pmf: BeamPmf, rx_pmf: BeamPmf, n_trials: int, seed: int,
               threads: int | None = None, start: int = 0,
               oracle_factory: Callable | None = None) -> TrialStats:
    """Simulate ``n_trials`` beam training operations.

    ``strategy`` is an estimator (fitted on the sampling PMFs if not yet
    fitted) or any callable ``oracle -> SearchResult``.  ``start`` offsets
    the trial index, so runs over ``[0, n)`` and ``[n, 2n)`` merge into the
    run over ``[0, 2n)``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    strategy = _fit_if_needed(strategy, tx_pmf, rx_pmf)
    tables = cost_tables(strategy, len(tx_pmf), len(rx_pmf), oracle_factory)
    stats = _run_tables(tables, tx_pmf, rx_pmf, n_trials, seed, threads, start)
    if stats.n_failed:
        logger.warning("%d of %d trials found no beam pair", stats.n_failed, n_trials)
    return stats


@dataclass
class Comparison:
    names: list[str]
    stats: dict[str, TrialStats]

    def mean(self, name: str) -> float:
        return self.stats[name].mean_tests

    def savings(self, a: str, b: str) -> float:
        """Percent fewer tests spent by ``a`` than by ``b``."""
        return 100.0 * (1.0 - self.mean(a) / self.mean(b))

    def rows(self) -> list[dict]:
        rows = []
        for a in self.names:
            row = {"strategy": a, "meanTests": self.mean(a), "nFailed": self.stats[a].n_failed}
            for b in self.names:
                row[f"savingsVs_{b}"] = self.savings(a, b)
            rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {
            "strategies": self.rows(),
            "stats": {n: self.stats[n].to_dict() for n in self.names},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def compare_strategies(configs: Mapping[str, object] | Sequence[tuple[str, object]],
                       tx_pmf: BeamPmf, rx_pmf: BeamPmf, n_trials: int, seed: int,
                       threads: int | None = None,
                       oracle_factory: Callable | None = None) -> Comparison:
    """Run several strategies on the same realization stream."""
    items = list(configs.items()) if isinstance(configs, Mapping) else list(configs)
    if len(items) < 2:
        raise ValueError("compare at least two strategies")
    stats = {}
    for name, strategy in items:
        stats[name] = run_trials(strategy, tx_pmf, rx_pmf, n_trials, seed, threads,
                                 oracle_factory=oracle_factory)
    return Comparison([n for n, _ in items], stats)

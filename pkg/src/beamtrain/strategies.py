"""Beam search strategies over a pluggable channel oracle.

An oracle answers ``test(tx, rx) -> bool``.  ``tx`` and ``rx`` are either a
fine beam index or a tuple of fine beam indices (a broad beam covering those
beams).  Every strategy records its probes in a :class:`SearchResult`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .beamstats import (
    BeamHierarchy,
    BeamPmf,
    PmfError,
    check_partition,
    contiguous_grouping,
    cumulative_cut,
    min_entropy_grouping,
    rank,
)

Group = tuple[int, ...]

# below this many beams, ranked testing beats a multi-level fallback
MIN_BEAMS_FOR_ML_FALLBACK = 7


class IndexOracle:
    """Noiseless oracle: a probe succeeds iff it covers a ground-truth pair."""

    def __init__(self, true_pairs: Iterable[tuple[int, int]] | tuple[int, int]):
        pairs = list(true_pairs)
        if pairs and isinstance(pairs[0], (int, np.integer)):
            pairs = [tuple(pairs)]
        self.true_pairs = frozenset((int(t), int(r)) for t, r in pairs)
        self.test_count = 0

    def test(self, tx, rx) -> bool:
        self.test_count += 1
        tx, rx = _as_group(tx), _as_group(rx)
        return any(t in tx and r in rx for t, r in self.true_pairs)


class Probe(NamedTuple):
    tx: Group
    rx: Group
    success: bool

    @property
    def is_fine(self) -> bool:
        return len(self.tx) == 1 and len(self.rx) == 1


@dataclass
class FailedPairMemory:
    """Fine (tx, rx) pairs that have already been tried."""

    pairs: set = field(default_factory=set)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def add(self, tx: int, rx: int) -> None:
        self.pairs.add((int(tx), int(rx)))


@dataclass
class SearchResult:
    found_pair: tuple[int, int] | None
    test_log: list[Probe]

    @property
    def tests_used(self) -> int:
        return len(self.test_log)

    def to_dict(self, tx_labels: Sequence[str] | None = None,
                rx_labels: Sequence[str] | None = None) -> dict:
        def name(group, labels):
            if labels is None:
                return list(group)
            return "+".join(labels[i] for i in group)

        found = None
        if self.found_pair is not None:
            t, r = self.found_pair
            found = [tx_labels[t] if tx_labels else t, rx_labels[r] if rx_labels else r]
        return {
            "foundPair": found,
            "testsUsed": self.tests_used,
            "testLog": [
                {"tx": name(p.tx, tx_labels), "rx": name(p.rx, rx_labels), "success": p.success}
                for p in self.test_log
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(**kwargs))


def _as_group(beam) -> Group:
    if isinstance(beam, (int, np.integer)):
        return (int(beam),)
    return tuple(int(b) for b in beam)


class _Session:
    """Probe bookkeeping shared by all strategies.

    Fine pairs already in ``memory`` are refused so no pair is tested twice.
    """

    def __init__(self, oracle, memory: FailedPairMemory | None):
        self.oracle = oracle
        self.memory = memory if memory is not None else FailedPairMemory()
        self.log: list[Probe] = []
        self.measure = getattr(oracle, "measure", None)

    def tried(self, tx: int, rx: int) -> bool:
        return (tx, rx) in self.memory

    def probe(self, tx, rx) -> bool:
        tx, rx = _as_group(tx), _as_group(rx)
        fine = len(tx) == 1 and len(rx) == 1
        if fine and (tx[0], rx[0]) in self.memory:
            raise RuntimeError(f"pair {(tx[0], rx[0])} is already in memory")
        ok = bool(self.oracle.test(tx, rx))
        self.log.append(Probe(tx, rx, ok))
        if fine:
            self.memory.add(tx[0], rx[0])
        return ok

    def probe_value(self, tx, rx) -> tuple[bool, float]:
        """Probe and also return a strength for max-RSSI selection."""
        tx, rx = _as_group(tx), _as_group(rx)
        if self.measure is None:
            ok = self.probe(tx, rx)
            return ok, float(ok)
        value = self.measure(tx, rx)
        ok = bool(self.oracle.passes(tx, rx, value))
        self.log.append(Probe(tx, rx, ok))
        if len(tx) == 1 and len(rx) == 1:
            self.memory.add(tx[0], rx[0])
        return ok, value

    def result(self, found) -> SearchResult:
        return SearchResult(found, self.log)


def exhaustive_search(oracle, n_tx: int, n_rx: int, full_sweep: bool = True,
                      memory: FailedPairMemory | None = None) -> SearchResult:
    """Test every pair, Rx outer and Tx inner, in label order.

    With ``full_sweep`` all ``n_tx * n_rx`` pairs are tested and the strongest
    passing pair is returned; otherwise the search stops at the first success.
    """
    if n_tx < 1 or n_rx < 1:
        raise ValueError("need at least one beam per side")
    session = _Session(oracle, memory)
    best, best_value = None, -math.inf
    for r in range(n_rx):
        for t in range(n_tx):
            if session.tried(t, r):
                continue
            ok, value = session.probe_value(t, r)
            if ok and value > best_value:
                best, best_value = (t, r), value
                if not full_sweep:
                    return session.result(best)
    return session.result(best)


@dataclass(frozen=True)
class MlHierarchySpec:
    """Per-side beam partitions, coarse to fine; each side ends in singletons."""

    tx_levels: tuple[tuple[Group, ...], ...]
    rx_levels: tuple[tuple[Group, ...], ...]

    def __post_init__(self):
        for levels in (self.tx_levels, self.rx_levels):
            if not levels:
                raise PmfError("each side needs at least one level")
            n = sum(len(g) for g in levels[-1])
            for lvl in levels:
                check_partition(lvl, n)
            if any(len(g) != 1 for g in levels[-1]):
                raise PmfError("the last level must hold single beams")
            for coarse, fine in zip(levels, levels[1:]):
                for g in fine:
                    if not any(set(g) <= set(c) for c in coarse):
                        raise PmfError("a level does not refine its predecessor")

    @property
    def num_levels(self) -> int:
        return max(len(self.tx_levels), len(self.rx_levels))

    @property
    def n_tx(self) -> int:
        return len(self.tx_levels[-1])

    @property
    def n_rx(self) -> int:
        return len(self.rx_levels[-1])

    @classmethod
    def from_groupings(cls, n_tx: int, n_rx: int,
                       tx_groupings: Sequence[Sequence[Sequence[int]]] = (),
                       rx_groupings: Sequence[Sequence[Sequence[int]]] = ()) -> "MlHierarchySpec":
        def side(n, groupings):
            levels = [tuple(tuple(g) for g in grouping) for grouping in groupings]
            levels.append(tuple((i,) for i in range(n)))
            return tuple(levels)

        return cls(side(n_tx, tx_groupings), side(n_rx, rx_groupings))

    @classmethod
    def two_level(cls, n_tx: int, n_rx: int, tx_groups: int) -> "MlHierarchySpec":
        """Contiguous Tx groups on level 1, single Rx level."""
        if tx_groups in (1, n_tx):
            return cls.from_groupings(n_tx, n_rx)
        return cls.from_groupings(n_tx, n_rx, [contiguous_grouping(n_tx, tx_groups)])


def _children(levels, depth: int, parent: Group) -> list[Group]:
    lvl = levels[min(depth, len(levels) - 1)]
    members = set(parent)
    return [g for g in lvl if set(g) <= members]


def ml_search(oracle, spec: MlHierarchySpec, memory: FailedPairMemory | None = None) -> SearchResult:
    """Multi-level search: sweep each level, descend into the winner.

    Every (Tx unit, Rx unit) combination of a level is tested in label order;
    the passing combination with the largest measured strength is kept.
    """
    session = _Session(oracle, memory)
    tx_sel: Group = tuple(range(spec.n_tx))
    rx_sel: Group = tuple(range(spec.n_rx))
    for depth in range(spec.num_levels):
        tx_units = _children(spec.tx_levels, depth, tx_sel)
        rx_units = _children(spec.rx_levels, depth, rx_sel)
        best, best_value = None, -math.inf
        for ru in rx_units:
            for tu in tx_units:
                if len(tu) == 1 and len(ru) == 1 and session.tried(tu[0], ru[0]):
                    continue
                ok, value = session.probe_value(tu, ru)
                if ok and value > best_value:
                    best, best_value = (tu, ru), value
        if best is None:
            return session.result(None)
        tx_sel, rx_sel = best
    return session.result((tx_sel[0], rx_sel[0]))


def _ranked_units(units: Sequence[Group], probs: np.ndarray) -> list[Group]:
    mass = np.array([probs[list(u)].sum() for u in units])
    order = np.argsort(-mass, kind="stable")
    return [units[i] for i in order]


def default_num_groups(n: int) -> int:
    """Proper divisor of ``n`` closest to ``sqrt(n)``; 1 if ``n`` is prime."""
    divisors = [d for d in range(2, n) if n % d == 0]
    if not divisors:
        return 1
    return min(divisors, key=lambda d: (abs(d - math.sqrt(n)), d))


def mars_search(oracle, tx_pmf: BeamPmf, rx_pmf: BeamPmf,
                threshold_tx: float = 0.75, threshold_rx: float = 0.75,
                memory: FailedPairMemory | None = None, fallback: str = "ranked",
                outer: str = "rx", fallback_groups: int | None = None) -> SearchResult:
    """Memory-assisted statistically-ranked search.

    Beams of the ``outer`` side are taken in rank order; for each, beams of
    the inner side are tested in rank order until their cumulative
    probability reaches its threshold.  Once the outer side's threshold is
    also reached the remaining untested space is searched per ``fallback``:

    ``"ranked"``
        the remaining pairs in full ranked order (outer-major).
    ``"ml"``
        a two-level ranked search over contiguous inner-side groups chosen
        for minimum broad entropy; used only with at least 7 inner beams.

    Pairs in ``memory`` are never retested, and every tested pair is added.
    """
    if fallback not in ("ranked", "ml"):
        raise ValueError(f"unknown fallback policy {fallback!r}")
    if outer not in ("rx", "tx"):
        raise ValueError("outer must be 'rx' or 'tx'")
    session = _Session(oracle, memory)
    if outer == "rx":
        outer_pmf, inner_pmf, th_outer, th_inner = rx_pmf, tx_pmf, threshold_rx, threshold_tx
        pair = lambda o, i: (i, o)  # noqa: E731
    else:
        outer_pmf, inner_pmf, th_outer, th_inner = tx_pmf, rx_pmf, threshold_tx, threshold_rx
        pair = lambda o, i: (o, i)  # noqa: E731

    outer_rank, inner_rank = rank(outer_pmf), rank(inner_pmf)
    k_outer = cumulative_cut(outer_rank, outer_pmf, th_outer)
    k_inner = cumulative_cut(inner_rank, inner_pmf, th_inner)

    def attempt(o, i):
        t, r = pair(o, i)
        if session.tried(t, r):
            return None
        return (t, r) if session.probe(t, r) else None

    for o in outer_rank.order[:k_outer]:
        for i in inner_rank.order[:k_inner]:
            hit = attempt(o, i)
            if hit:
                return session.result(hit)

    n_inner = len(inner_pmf)
    groups = fallback_groups or default_num_groups(n_inner)
    if fallback == "ml" and n_inner >= MIN_BEAMS_FOR_ML_FALLBACK and 1 < groups < n_inner:
        hit = _ml_remainder(session, outer_rank.order, inner_pmf, groups, pair)
        return session.result(hit)

    for o in outer_rank.order:
        for i in inner_rank.order:
            hit = attempt(o, i)
            if hit:
                return session.result(hit)
    return session.result(None)


def _ml_remainder(session: _Session, outer_order, inner_pmf: BeamPmf, num_groups: int, pair):
    probs = inner_pmf.array
    units = [tuple(g) for g in min_entropy_grouping(inner_pmf, num_groups)]
    ranked = _ranked_units(units, probs)
    for o in outer_order:
        for unit in ranked:
            open_members = [i for i in unit if not session.tried(*pair(o, i))]
            if not open_members:
                continue
            t, r = pair((o,), unit)
            if not session.probe(t, r):
                continue
            for i in sorted(open_members, key=lambda i: (-probs[i], i)):
                t, r = pair(o, i)
                if session.probe(t, r):
                    return (t, r)
    return None


def hybrid_levels(hierarchy: BeamHierarchy | Sequence[Sequence[Sequence[int]]], n_tx: int):
    if isinstance(hierarchy, BeamHierarchy):
        partitions = [hierarchy.groups]
    else:
        partitions = list(hierarchy)
    levels = [check_partition(p, n_tx) for p in partitions]
    levels.append(tuple((i,) for i in range(n_tx)))
    return levels


def hybrid_search(oracle, tx_pmf: BeamPmf, rx_pmf: BeamPmf,
                  hierarchy: BeamHierarchy | Sequence[Sequence[Sequence[int]]],
                  memory: FailedPairMemory | None = None) -> SearchResult:
    """Multi-level search with statistically ranked beams at every level.

    ``hierarchy`` gives the Tx broad-beam partitions from coarse to fine
    (a :class:`BeamHierarchy` is one level).  At each level the Tx units
    under the current parent are tried in descending-probability order for
    each Rx beam in rank order.  After a success the search descends into
    that unit and keeps the Rx beam that closed the link.
    """
    probs = tx_pmf.array
    levels = hybrid_levels(hierarchy, len(tx_pmf))
    session = _Session(oracle, memory)
    parent: Group = tuple(range(len(tx_pmf)))
    rx_candidates = list(rank(rx_pmf).order)
    for depth, lvl in enumerate(levels):
        final = depth == len(levels) - 1
        members = set(parent)
        units = _ranked_units([g for g in lvl if set(g) <= members], probs)
        chosen = None
        for r in rx_candidates:
            for unit in units:
                if final and session.tried(unit[0], r):
                    continue
                if session.probe(unit, (r,)):
                    chosen = (unit, r)
                    break
            if chosen:
                break
        if chosen is None:
            return session.result(None)
        parent, r = chosen
        if final:
            return session.result((parent[0], r))
        rx_candidates = [r]
    return session.result(None)


def op_operator(ranked_rx, ranked_tx) -> np.ndarray:
    """Position-weighted Kronecker product of two descending PMFs.

    ``x[i] = (r kron t)[i] * (i + 1)``; ``sum(x)`` is the mean number of
    tests of a fully ranked search.
    """
    r = ranked_rx.array if isinstance(ranked_rx, BeamPmf) else np.asarray(ranked_rx, float)
    t = ranked_tx.array if isinstance(ranked_tx, BeamPmf) else np.asarray(ranked_tx, float)
    for name, v in (("Rx", r), ("Tx", t)):
        if np.any(np.diff(v) > 0):
            raise PmfError(f"{name} PMF is not in descending (ranked) order")
    k = np.kron(r, t)
    return k * np.arange(1, len(k) + 1)


def mean_tests(x: np.ndarray) -> float:
    return float(np.sum(x))


def analytic_mean_tests(tx_pmf: BeamPmf, rx_pmf: BeamPmf) -> float:
    """Mean tests of pure ranked search, lower-entropy side outermost."""
    from .beamstats import entropy, ranked_probs

    r, t = ranked_probs(rx_pmf), ranked_probs(tx_pmf)
    if entropy(rx_pmf) > entropy(tx_pmf):
        r, t = t, r
    return mean_tests(op_operator(r, t))


Strategy = Callable[[object], SearchResult]


def realization_table(strategy: Strategy, n_tx: int, n_rx: int) -> dict[tuple[int, int], SearchResult]:
    """Run ``strategy`` once per ground-truth pair with a fresh index oracle."""
    return {(t, r): strategy(IndexOracle((t, r))) for r in range(n_rx) for t in range(n_tx)}


def count_distribution(strategy: Strategy, tx_pmf: BeamPmf, rx_pmf: BeamPmf) -> dict[int, float]:
    """Exact probability of each test count, by enumerating realizations.

    Realizations whose search fails are collected under key 0.
    """
    p_tx, p_rx = tx_pmf.array, rx_pmf.array
    dist: dict[int, float] = {}
    for (t, r), res in realization_table(strategy, len(p_tx), len(p_rx)).items():
        key = res.tests_used if res.found_pair is not None else 0
        dist[key] = dist.get(key, 0.0) + float(p_tx[t] * p_rx[r])
    return dict(sorted(dist.items()))


def expected_tests_bruteforce(strategy: Strategy, tx_pmf: BeamPmf, rx_pmf: BeamPmf) -> float:
    """``sum P(t, r) * tests(t, r)`` over every ground-truth pair."""
    p_tx, p_rx = tx_pmf.array, rx_pmf.array
    table = realization_table(strategy, len(p_tx), len(p_rx))
    return math.fsum(p_tx[t] * p_rx[r] * res.tests_used for (t, r), res in table.items())

"""Beam probability mass functions, entropy, ranking and beam history.

Beams are addressed by 0-based index internally; ``labels`` carry the
human-facing names ("T1".."T9").  Ranks are 1-based (1 = most probable).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-9


class PmfError(ValueError):
    """Raised when a beam PMF, grouping or history is malformed."""


@dataclass(frozen=True)
class BeamPmf:
    """Probability mass function over labeled beams."""

    labels: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        if len(probs) == 0:
            raise PmfError("PMF must contain at least one beam")
        if len(labels) != len(probs):
            raise PmfError(f"{len(labels)} labels but {len(probs)} probabilities")
        if len(set(labels)) != len(labels):
            raise PmfError("beam labels must be unique")
        for lab, p in zip(labels, probs):
            if not (0.0 < p <= 1.0) or math.isnan(p):
                raise PmfError(f"probability of {lab} must lie in (0, 1], got {p}")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOL:
            raise PmfError(f"probabilities sum to {total!r}, expected 1")

    @classmethod
    def from_probs(cls, probs: Iterable[float], prefix: str = "T") -> "BeamPmf":
        probs = [float(p) for p in probs]
        return cls(tuple(f"{prefix}{i + 1}" for i in range(len(probs))), tuple(probs))

    @classmethod
    def uniform(cls, n: int, prefix: str = "T") -> "BeamPmf":
        return cls.from_probs([1.0 / n] * n, prefix=prefix)

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise PmfError(f"unknown beam label {label!r}") from None

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, data: dict) -> "BeamPmf":
        if "probs" not in data:
            raise PmfError("PMF document lacks 'probs'")
        probs = data["probs"]
        labels = data.get("labels")
        if labels is None:
            return cls.from_probs(probs, prefix=data.get("prefix", "T"))
        return cls(tuple(labels), tuple(probs))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BeamPmf":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Ranking:
    """Beam order by descending probability.

    ``order[0]`` is the index of the most probable beam; ``ranks[i]`` is the
    1-based rank of beam ``i``.
    """

    order: tuple[int, ...]
    ranks: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(n)):
            raise PmfError("ranking order is not a permutation")
        for pos, beam in enumerate(self.order):
            if self.ranks[beam] != pos + 1:
                raise PmfError("ranks disagree with order")

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class BeamHierarchy:
    """Fine beams grouped into broad level-1 beams.

    ``conditionals[g]`` is the PMF over the fine beams of ``groups[g]``
    given that the path lies inside broad beam ``g``.
    """

    groups: tuple[tuple[int, ...], ...]
    broad_pmf: BeamPmf
    conditionals: tuple[BeamPmf, ...]

    def to_dict(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "broad": self.broad_pmf.to_dict(),
            "conditionals": [c.to_dict() for c in self.conditionals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BeamHierarchy":
        groups = tuple(tuple(int(i) for i in g) for g in data["groups"])
        return cls(
            groups,
            BeamPmf.from_dict(data["broad"]),
            tuple(BeamPmf.from_dict(c) for c in data["conditionals"]),
        )


@dataclass(frozen=True)
class BeamHistory:
    """Success tallies per Tx beam and per Rx beam."""

    tx_counts: tuple[int, ...]
    rx_counts: tuple[int, ...]
    total: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tx_counts", tuple(int(c) for c in self.tx_counts))
        object.__setattr__(self, "rx_counts", tuple(int(c) for c in self.rx_counts))
        if min(self.tx_counts + self.rx_counts, default=0) < 0:
            raise PmfError("history counts must be non-negative")
        if sum(self.tx_counts) != self.total or sum(self.rx_counts) != self.total:
            raise PmfError("history counts do not add up to the observation total")

    @classmethod
    def empty(cls, n_tx: int, n_rx: int) -> "BeamHistory":
        return cls((0,) * n_tx, (0,) * n_rx, 0)

    def merge_counts(self, tx_counts: Sequence[int], rx_counts: Sequence[int]) -> "BeamHistory":
        """Add bulk tallies, e.g. from a Monte Carlo batch."""
        tx = np.add(self.tx_counts, tx_counts)
        rx = np.add(self.rx_counts, rx_counts)
        return BeamHistory(tuple(tx.tolist()), tuple(rx.tolist()), int(tx.sum()))


def _as_pmf(pmf) -> BeamPmf:
    if isinstance(pmf, BeamPmf):
        return pmf
    return BeamPmf.from_probs(pmf)


def entropy(pmf: BeamPmf, base: float = 10.0) -> float:
    """Beam entropy ``-sum p log p``, base 10 by default."""
    p = _as_pmf(pmf).array
    return float(max(0.0, -np.sum(p * np.log(p))) / math.log(base))


def relative_entropy(pmf: BeamPmf, base: float = 10.0) -> float:
    """Entropy divided by its maximum ``log N``; independent of ``base``."""
    pmf = _as_pmf(pmf)
    n = len(pmf)
    if n < 2:
        raise PmfError("relative entropy needs at least two beams")
    return entropy(pmf, base) / (math.log(n) / math.log(base))


def rank(pmf: BeamPmf) -> Ranking:
    """Rank beams by descending probability, ties to the lower index."""
    p = _as_pmf(pmf).array
    # stable sort on -p keeps equal-probability beams in index order
    order = np.argsort(-p, kind="stable")
    ranks = np.empty(len(p), dtype=int)
    ranks[order] = np.arange(1, len(p) + 1)
    return Ranking(tuple(order.tolist()), tuple(ranks.tolist()))


def ranked_probs(pmf: BeamPmf) -> np.ndarray:
    """Probabilities sorted in rank order."""
    pmf = _as_pmf(pmf)
    return pmf.array[list(rank(pmf).order)]


def check_partition(grouping: Sequence[Sequence[int]], n: int) -> tuple[tuple[int, ...], ...]:
    groups = tuple(tuple(int(i) for i in g) for g in grouping)
    flat = [i for g in groups for i in g]
    if any(len(g) == 0 for g in groups):
        raise PmfError("empty group in partition")
    if sorted(flat) != list(range(n)):
        raise PmfError(f"grouping does not partition beams 0..{n - 1}")
    return groups


def aggregate(pmf: BeamPmf, grouping: Sequence[Sequence[int]], prefix: str | None = None) -> BeamHierarchy:
    """Combine fine beams into broad beams.

    Broad beam ``g`` gets the summed mass of its members and is labeled
    ``<prefix>0<g+1>`` (T01, T02, ...), following the fine labels' prefix.
    Conditionals are exact renormalizations ``p_i / P(g)``.
    """
    pmf = _as_pmf(pmf)
    groups = check_partition(grouping, len(pmf))
    if prefix is None:
        prefix = pmf.labels[0].rstrip("0123456789") or "B"
    p = pmf.array
    mass = [math.fsum(p[list(g)]) for g in groups]
    total = math.fsum(mass)
    broad = BeamPmf(tuple(f"{prefix}0{k + 1}" for k in range(len(groups))),
                    tuple(m / total for m in mass))
    conditionals = []
    for g, m in zip(groups, mass):
        cond = [p[i] / m for i in g]
        s = math.fsum(cond)
        conditionals.append(BeamPmf(tuple(pmf.labels[i] for i in g), tuple(c / s for c in cond)))
    return BeamHierarchy(groups, broad, tuple(conditionals))


def contiguous_grouping(n: int, num_groups: int, shift: int = 0) -> list[list[int]]:
    """Equal-size blocks of adjacent beams, boundaries rotated by ``shift``.

    Blocks wrap around the end of the index range; DFT beams are cyclic in
    spatial frequency so a wrapped block is still a neighbourhood.
    """
    if num_groups < 1 or n % num_groups:
        raise PmfError(f"{num_groups} groups do not divide {n} beams")
    size = n // num_groups
    return [[(shift + k * size + i) % n for i in range(size)] for k in range(num_groups)]


def min_entropy_grouping(pmf: BeamPmf, num_groups: int) -> list[list[int]]:
    """Contiguous equal-size grouping with the lowest broad-beam entropy.

    All ``N / num_groups`` boundary rotations are scored; the first rotation
    wins ties.
    """
    pmf = _as_pmf(pmf)
    n = len(pmf)
    if num_groups < 1 or n % num_groups:
        raise PmfError(f"{num_groups} groups do not divide {n} beams")
    best, best_h = None, math.inf
    for shift in range(n // num_groups):
        grouping = contiguous_grouping(n, num_groups, shift)
        h = entropy(aggregate(pmf, grouping).broad_pmf)
        # small slack so float noise cannot reorder exact ties
        if h < best_h - 1e-12:
            best, best_h = grouping, h
    return best


def cumulative_cut(ranking: Ranking, pmf: BeamPmf, threshold: float) -> int:
    """Smallest k whose top-k ranked probabilities reach ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise PmfError(f"threshold must lie in (0, 1], got {threshold}")
    p = _as_pmf(pmf).array[list(ranking.order)]
    cum = np.cumsum(p)
    # sums such as 0.57 + 0.19 land a few ulps below 0.76
    k = int(np.searchsorted(cum, threshold - SUM_TOL, side="left")) + 1
    return min(k, len(p))


def update_history(history: BeamHistory, success_tx: int, success_rx: int) -> BeamHistory:
    n_tx, n_rx = len(history.tx_counts), len(history.rx_counts)
    if not 0 <= success_tx < n_tx:
        raise PmfError(f"Tx beam index {success_tx} out of range 0..{n_tx - 1}")
    if not 0 <= success_rx < n_rx:
        raise PmfError(f"Rx beam index {success_rx} out of range 0..{n_rx - 1}")
    tx = list(history.tx_counts)
    rx = list(history.rx_counts)
    tx[success_tx] += 1
    rx[success_rx] += 1
    return BeamHistory(tuple(tx), tuple(rx), history.total + 1)


def _smoothed(counts: Sequence[int], total: int, smoothing: float, prefix: str) -> BeamPmf:
    if smoothing < 0:
        raise PmfError("smoothing must be non-negative")
    if total == 0 and smoothing == 0:
        raise PmfError("no observations and no smoothing: PMF undefined")
    counts = np.asarray(counts, dtype=float)
    if smoothing == 0 and np.any(counts == 0):
        raise PmfError("unobserved beam has zero probability; use smoothing > 0")
    probs = (counts + smoothing) / (total + len(counts) * smoothing)
    return BeamPmf.from_probs(probs, prefix=prefix)


def empirical_pmf(history: BeamHistory, smoothing: float = 1.0) -> tuple[BeamPmf, BeamPmf]:
    """Additively smoothed (Tx, Rx) PMFs from a beam history."""
    return (
        _smoothed(history.tx_counts, history.total, smoothing, "T"),
        _smoothed(history.rx_counts, history.total, smoothing, "R"),
    )

"""ULA steering vectors, unitary DFT codebooks and RSSI of sparse channels."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array; ``spacing`` is in wavelengths."""

    num_elements: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("a ULA needs at least one element")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")


@dataclass(frozen=True)
class Codebook:
    """Beam weights, one row per beam, ordered by pointing angle.

    ``angles[m]`` is the main response axis of beam ``m`` in radians.
    """

    weights: np.ndarray
    angles: np.ndarray
    array: UlaConfig
    prefix: str = "T"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"{self.prefix}{m + 1}" for m in range(len(self.weights)))

    def __len__(self) -> int:
        return len(self.weights)

    def gram(self) -> np.ndarray:
        return self.weights.conj() @ self.weights.T


@dataclass(frozen=True)
class SparseChannel:
    """Multi-path channel; each MPC is ``(tx_angle, rx_angle, gain)``."""

    mpcs: tuple[tuple[float, float, complex], ...]
    tx_array: UlaConfig
    rx_array: UlaConfig

    def __post_init__(self):
        if len(self.mpcs) == 0:
            raise ValueError("a channel needs at least one MPC")
        object.__setattr__(
            self, "mpcs", tuple((float(a), float(b), complex(g)) for a, b, g in self.mpcs)
        )

    def matrix(self) -> np.ndarray:
        """``H = sum g * a_rx a_tx^H`` with shape (n_rx, n_tx)."""
        h = np.zeros((self.rx_array.num_elements, self.tx_array.num_elements), dtype=complex)
        for tx_angle, rx_angle, gain in self.mpcs:
            a_tx = steering_vector(self.tx_array, tx_angle)
            a_rx = steering_vector(self.rx_array, rx_angle)
            h += gain * np.outer(a_rx, a_tx.conj())
        return h

    def to_dict(self) -> dict:
        return {
            "mpcs": [
                {"txAngleRad": a, "rxAngleRad": b, "gainRe": g.real, "gainIm": g.imag}
                for a, b, g in self.mpcs
            ],
            "ntx": self.tx_array.num_elements,
            "nrx": self.rx_array.num_elements,
            "spacing": self.tx_array.spacing,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SparseChannel":
        spacing = float(data.get("spacing", 0.5))
        mpcs = tuple(
            (m["txAngleRad"], m["rxAngleRad"], complex(m.get("gainRe", 1.0), m.get("gainIm", 0.0)))
            for m in data["mpcs"]
        )
        return cls(mpcs, UlaConfig(int(data["ntx"]), spacing), UlaConfig(int(data["nrx"]), spacing))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SparseChannel":
        return cls.from_dict(json.loads(text))


def steering_vector(array: UlaConfig, angle: float) -> np.ndarray:
    """ULA response ``exp(j 2 pi d k sin(angle))`` for k = 0..N-1."""
    k = np.arange(array.num_elements)
    return np.exp(2j * np.pi * array.spacing * k * np.sin(angle))


def _wrap_spatial_freq(u: np.ndarray, spacing: float) -> np.ndarray:
    """Fold ``sin(theta)`` into one grating period, ``[-1/(2d), 1/(2d))``."""
    period = 1.0 / spacing
    return (np.asarray(u) + period / 2) % period - period / 2


def dft_codebook(array: UlaConfig, prefix: str = "T") -> Codebook:
    """Unitary DFT codebook, beams sorted left to right by pointing angle.

    Raw beam ``m`` has weights ``exp(-j 2 pi k m / N) / sqrt(N)`` and peaks at
    ``d sin(theta) = -m / N`` modulo one grating period.
    """
    n = array.num_elements
    k = np.arange(n)
    m = np.arange(n)
    raw = np.exp(-2j * np.pi * np.outer(m, k) / n) / np.sqrt(n)
    u = _wrap_spatial_freq(-m / (n * array.spacing), array.spacing)
    # d > 0.5 puts some grid points outside visible space; clip for the angle only
    angles = np.arcsin(np.clip(u, -1.0, 1.0))
    order = np.argsort(u, kind="stable")
    return Codebook(raw[order], angles[order], array, prefix)


def rssi(channel: SparseChannel, tx_beam: np.ndarray, rx_beam: np.ndarray,
         noise_std: float = 0.0, rng: np.random.Generator | None = None) -> float:
    """Receiver output magnitude ``|w_rx^H H w_tx|`` (noiseless by default)."""
    tx_beam = np.asarray(tx_beam)
    rx_beam = np.asarray(rx_beam)
    h = channel.matrix()
    if tx_beam.shape != (h.shape[1],) or rx_beam.shape != (h.shape[0],):
        raise ValueError(
            f"beam lengths ({len(tx_beam)}, {len(rx_beam)}) do not match arrays "
            f"({h.shape[1]}, {h.shape[0]})"
        )
    y = rx_beam.conj() @ h @ tx_beam
    if noise_std > 0:
        rng = rng if rng is not None else np.random.default_rng()
        y = y + noise_std * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)
    return float(abs(y))


def broad_beam(codebook: Codebook, members: Sequence[int]) -> np.ndarray:
    """Sub-array beam covering adjacent codebook beams.

    The first ``N / len(members)`` elements are switched on and steered to
    the circular mean of the members' spatial frequencies; the rest are off.
    """
    arr = codebook.array
    n = arr.num_elements
    n_on = max(1, n // len(members))
    period = 1.0 / arr.spacing
    u = np.sin(codebook.angles[list(members)])
    # spatial frequency is periodic; average on the unit circle
    phase = np.angle(np.mean(np.exp(2j * np.pi * u / period)))
    centre = phase * period / (2 * np.pi)
    w = np.zeros(n, dtype=complex)
    k = np.arange(n_on)
    w[:n_on] = np.exp(2j * np.pi * arr.spacing * k * centre) / np.sqrt(n_on)
    return w


class PhysicalOracle:
    """Declares a link when the RSSI of a tested beam pair clears a threshold.

    Broad beams use fewer active elements, so their threshold is scaled by
    the square root of the active-element fraction.
    """

    def __init__(self, channel: SparseChannel, tx_codebook: Codebook, rx_codebook: Codebook,
                 threshold: float | None = None, noise_std: float = 0.0, seed: int | None = None):
        self.channel = channel
        self.tx_codebook = tx_codebook
        self.rx_codebook = rx_codebook
        if threshold is None:
            threshold = default_threshold(len(tx_codebook), len(rx_codebook))
        if threshold <= 0:
            raise ValueError("detection threshold must be positive")
        self.threshold = float(threshold)
        self.noise_std = noise_std
        self._rng = np.random.default_rng(seed)
        self._h = channel.matrix()
        self.test_count = 0
        self.log: list[tuple[tuple[int, ...], tuple[int, ...], float]] = []

    def _weights(self, codebook: Codebook, beams: tuple[int, ...]) -> tuple[np.ndarray, float]:
        if len(beams) == 1:
            return codebook.weights[beams[0]], 1.0
        w = broad_beam(codebook, beams)
        return w, float(np.count_nonzero(w)) / len(w)

    def measure(self, tx: tuple[int, ...], rx: tuple[int, ...]) -> float:
        w_tx, _ = self._weights(self.tx_codebook, tx)
        w_rx, _ = self._weights(self.rx_codebook, rx)
        y = w_rx.conj() @ self._h @ w_tx
        if self.noise_std > 0:
            y = y + self.noise_std * (self._rng.standard_normal()
                                      + 1j * self._rng.standard_normal()) / math.sqrt(2)
        value = float(abs(y))
        self.test_count += 1
        self.log.append((tx, rx, value))
        return value

    def passes(self, tx: tuple[int, ...], rx: tuple[int, ...], value: float) -> bool:
        _, f_tx = self._weights(self.tx_codebook, tx)
        _, f_rx = self._weights(self.rx_codebook, rx)
        return value >= self.threshold * math.sqrt(f_tx * f_rx)

    def test(self, tx, rx) -> bool:
        tx, rx = _as_group(tx), _as_group(rx)
        return self.passes(tx, rx, self.measure(tx, rx))


def _as_group(beam) -> tuple[int, ...]:
    if isinstance(beam, (int, np.integer)):
        return (int(beam),)
    return tuple(int(b) for b in beam)


def default_threshold(n_tx: int, n_rx: int) -> float:
    """Half the aligned single-path amplitude ``sqrt(N_TX * N_RX)``."""
    return 0.5 * math.sqrt(n_tx * n_rx)


def physical_oracle(channel: SparseChannel, codebooks: tuple[Codebook, Codebook],
                    detection_threshold: float | None = None, **kwargs) -> PhysicalOracle:
    tx_cb, rx_cb = codebooks
    return PhysicalOracle(channel, tx_cb, rx_cb, detection_threshold, **kwargs)


def on_grid_channel(tx_codebook: Codebook, rx_codebook: Codebook, tx_beam: int, rx_beam: int,
                    gain: complex = 1.0) -> SparseChannel:
    """Single MPC placed exactly on the axes of the given codebook beams."""
    return SparseChannel(
        ((tx_codebook.angles[tx_beam], rx_codebook.angles[rx_beam], gain),),
        tx_codebook.array,
        rx_codebook.array,
    )

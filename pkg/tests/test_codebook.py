import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamtrain.codebook import (
    SparseChannel,
    UlaConfig,
    broad_beam,
    default_threshold,
    dft_codebook,
    on_grid_channel,
    physical_oracle,
    rssi,
    steering_vector,
)


def rssi_by_loops(mpcs, n_tx, n_rx, w_tx, w_rx, d=0.5):
    """Triple sum of w_rx^* H w_tx written out element by element."""
    total = 0j
    for tx_angle, rx_angle, gain in mpcs:
        for i in range(n_rx):
            a_rx = cmath.exp(2j * math.pi * d * i * math.sin(rx_angle))
            for k in range(n_tx):
                a_tx_conj = cmath.exp(-2j * math.pi * d * k * math.sin(tx_angle))
                total += w_rx[i].conjugate() * gain * a_rx * a_tx_conj * w_tx[k]
    return abs(total)


class TestSteeringVector:
    def test_broadside(self):
        assert np.allclose(steering_vector(UlaConfig(5), 0.0), np.ones(5))

    def test_endfire_two_elements(self):
        assert np.allclose(steering_vector(UlaConfig(2), math.pi / 2), [1, -1])

    @given(st.floats(-math.pi / 2, math.pi / 2), st.integers(1, 32))
    def test_constant_modulus(self, angle, n):
        assert np.allclose(np.abs(steering_vector(UlaConfig(n), angle)), 1.0, atol=1e-12)


class TestDftCodebook:
    def test_single_element(self):
        cb = dft_codebook(UlaConfig(1))
        assert np.allclose(cb.weights, [[1.0]])

    @pytest.mark.parametrize("n", list(range(1, 65)))
    def test_unitary(self, n):
        cb = dft_codebook(UlaConfig(n))
        assert len(cb) == n
        assert np.allclose(cb.gram(), np.eye(n), atol=1e-9, rtol=0)
        assert np.allclose(np.linalg.norm(cb.weights, axis=1), 1.0, atol=1e-12)

    def test_three_orthogonal(self):
        cb = dft_codebook(UlaConfig(3))
        assert abs(np.vdot(cb.weights[0], cb.weights[1])) < 1e-12

    def test_angular_order(self):
        cb = dft_codebook(UlaConfig(9))
        assert np.all(np.diff(cb.angles) > 0)
        assert cb.labels[0] == "T1" and cb.labels[-1] == "T9"

    def test_each_beam_peaks_at_its_angle(self):
        cb = dft_codebook(UlaConfig(9))
        for m, angle in enumerate(cb.angles):
            gains = np.abs(cb.weights.conj() @ steering_vector(cb.array, angle))
            assert int(np.argmax(gains)) == m
            assert gains[m] == pytest.approx(3.0, abs=1e-9)


class TestRssi:
    def test_matched_steering_beams(self):
        tx, rx = UlaConfig(9), UlaConfig(3)
        ch = SparseChannel(((0.3, -0.2, 1.0),), tx, rx)
        w_tx = steering_vector(tx, 0.3) / 3
        w_rx = steering_vector(rx, -0.2) / math.sqrt(3)
        assert rssi(ch, w_tx, w_rx) ** 2 == pytest.approx(27, abs=1e-9)

    def test_zero_gain(self):
        tx, rx = UlaConfig(4), UlaConfig(2)
        ch = SparseChannel(((0.1, 0.2, 0.0),), tx, rx)
        assert rssi(ch, np.ones(4) / 2, np.ones(2) / math.sqrt(2)) == 0.0

    def test_aligned_dft_and_half_bin_offset(self):
        tx_cb, rx_cb = dft_codebook(UlaConfig(9), "T"), dft_codebook(UlaConfig(3), "R")
        m, n = 4, 1
        ch = on_grid_channel(tx_cb, rx_cb, m, n)
        want = rssi_by_loops(ch.mpcs, 9, 3, tx_cb.weights[m], rx_cb.weights[n])
        got = rssi(ch, tx_cb.weights[m], rx_cb.weights[n])
        assert got == pytest.approx(want, abs=1e-12)
        assert got ** 2 == pytest.approx(27, abs=1e-9)
        # half a DFT bin in spatial frequency: d * du = 1 / (2 N)
        u = math.sin(tx_cb.angles[m]) + 1 / (2 * 9 * 0.5)
        off = SparseChannel(((math.asin(u), rx_cb.angles[n], 1.0),), tx_cb.array, rx_cb.array)
        loss = rssi_by_loops(off.mpcs, 9, 3, tx_cb.weights[m], rx_cb.weights[n])
        assert rssi(off, tx_cb.weights[m], rx_cb.weights[n]) == pytest.approx(loss, abs=1e-12)
        assert loss ** 2 < 27

    def test_dimension_mismatch(self):
        ch = SparseChannel(((0.0, 0.0, 1.0),), UlaConfig(4), UlaConfig(2))
        with pytest.raises(ValueError):
            rssi(ch, np.ones(3), np.ones(2))

    @settings(max_examples=30)
    @given(st.lists(st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
                              st.complex_numbers(max_magnitude=3, allow_nan=False)),
                    min_size=1, max_size=4),
           st.integers(1, 12), st.integers(1, 6))
    def test_parseval(self, mpcs, n_tx, n_rx):
        ch = SparseChannel(tuple(mpcs), UlaConfig(n_tx), UlaConfig(n_rx))
        tx_cb, rx_cb = dft_codebook(ch.tx_array), dft_codebook(ch.rx_array)
        energy = sum(rssi(ch, wt, wr) ** 2 for wt in tx_cb.weights for wr in rx_cb.weights)
        assert energy == pytest.approx(np.linalg.norm(ch.matrix()) ** 2, abs=1e-6, rel=1e-9)

    @given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
    def test_homogeneous(self, c):
        tx, rx = UlaConfig(5), UlaConfig(3)
        w_tx, w_rx = np.ones(5) / math.sqrt(5), np.ones(3) / math.sqrt(3)
        base = rssi(SparseChannel(((0.2, -0.4, 1.0),), tx, rx), w_tx, w_rx)
        scaled = rssi(SparseChannel(((0.2, -0.4, c),), tx, rx), w_tx, w_rx)
        assert scaled == pytest.approx(abs(c) * base, abs=1e-9)

    def test_max_gain_on_grid(self):
        tx_cb, rx_cb = dft_codebook(UlaConfig(8), "T"), dft_codebook(UlaConfig(4), "R")
        for m, n in [(0, 0), (3, 2), (7, 3)]:
            ch = on_grid_channel(tx_cb, rx_cb, m, n)
            grid = np.array([[rssi(ch, wt, wr) for wr in rx_cb.weights] for wt in tx_cb.weights])
            assert np.unravel_index(np.argmax(grid), grid.shape) == (m, n)

    def test_json_round_trip(self):
        ch = SparseChannel(((0.1, -0.3, 0.5 - 0.25j), (0.7, 0.2, 1.0)), UlaConfig(9), UlaConfig(3))
        back = SparseChannel.from_json(ch.to_json())
        assert np.allclose(back.matrix(), ch.matrix(), atol=1e-12)


class TestPhysicalOracle:
    def setup_method(self):
        self.tx_cb = dft_codebook(UlaConfig(9), "T")
        self.rx_cb = dft_codebook(UlaConfig(3), "R")

    def test_unique_pass_just_below_peak(self):
        ch = on_grid_channel(self.tx_cb, self.rx_cb, 4, 1)
        oracle = physical_oracle(ch, (self.tx_cb, self.rx_cb), math.sqrt(27) - 1e-6)
        passes = [(t, r) for t in range(9) for r in range(3) if oracle.test(t, r)]
        assert passes == [(4, 1)]
        assert oracle.test_count == 27

    def test_above_peak_nothing_passes(self):
        ch = on_grid_channel(self.tx_cb, self.rx_cb, 4, 1)
        oracle = physical_oracle(ch, (self.tx_cb, self.rx_cb), math.sqrt(27) + 1e-3)
        assert not any(oracle.test(t, r) for t in range(9) for r in range(3))

    def test_default_threshold_separates_sidelobes(self):
        ch = on_grid_channel(self.tx_cb, self.rx_cb, 2, 0)
        oracle = physical_oracle(ch, (self.tx_cb, self.rx_cb))
        assert oracle.threshold == pytest.approx(default_threshold(9, 3))
        passes = [(t, r) for t in range(9) for r in range(3) if oracle.test(t, r)]
        assert passes == [(2, 0)]

    def test_tiny_threshold_many_pass(self):
        ch = SparseChannel(((0.11, 0.05, 1.0),), self.tx_cb.array, self.rx_cb.array)
        oracle = physical_oracle(ch, (self.tx_cb, self.rx_cb), 1e-9)
        assert sum(oracle.test(t, r) for t in range(9) for r in range(3)) > 1

    def test_broad_beam_covers_group(self):
        for g in ([0, 1, 2], [3, 4, 5], [6, 7, 8], [8, 0, 1]):
            w = broad_beam(self.tx_cb, g)
            assert np.count_nonzero(w) == 3
            assert np.linalg.norm(w) == pytest.approx(1.0)
            ch = on_grid_channel(self.tx_cb, self.rx_cb, g[1], 1)
            oracle = physical_oracle(ch, (self.tx_cb, self.rx_cb))
            assert oracle.test(tuple(g), 1)

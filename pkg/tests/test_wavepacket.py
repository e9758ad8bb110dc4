"""Gaussian packet amplitudes, overlaps, and bench-parameter conversion.

The temporal amplitude is checked against an independent high-precision
evaluation (mpmath at 50 digits), the spectral amplitude against direct
numerical Fourier transforms, and the closed-form overlap against the
quadrature backend over randomized pairs.
"""

import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from hompol.wavepacket import (
    C_UM_PER_FS,
    GaussianPacket,
    LabParams,
    MismatchedCoherenceTime,
    PacketPair,
    QuadratureNotConverged,
    amplitude,
    indistinguishability,
    overlap_closed,
    overlap_numeric,
    packets_from_lab,
    spectral_amplitude,
)
from util import random_pair


def mp_amplitude(packet: GaussianPacket, t: float) -> complex:
    """Independent 50-digit evaluation of the temporal amplitude."""
    with mp.workdps(50):
        tc = mp.mpf(packet.tc)
        s = mp.mpf(t) - mp.mpf(packet.tau)
        pref = mp.power(2 / (mp.pi * tc**2), mp.mpf(1) / 4)
        val = pref * mp.exp(-((s / tc) ** 2) - 1j * mp.mpf(packet.omega0) * s)
        return complex(val)


class TestAmplitude:
    def test_matches_high_precision_evaluation(self):
        # Tolerance allows for double-precision argument reduction in the
        # carrier phase (|omega0 t| up to ~500 rad here).
        packet = GaussianPacket(omega0=2.327, tau=35.0, tc=200.0)
        for t in (-150.0, 0.0, 35.0, 117.3, 400.0):
            got = amplitude(packet, t)
            want = mp_amplitude(packet, t)
            assert abs(got - want) <= 1e-12 * abs(want) + 1e-18

    def test_peak_modulus_tc_200(self):
        # (2 / (pi tc^2))^(1/4) at tc = 200 fs, frozen from the mpmath oracle
        packet = GaussianPacket(omega0=2.327, tau=0.0, tc=200.0)
        assert abs(amplitude(packet, 0.0)) == pytest.approx(
            0.06316187777460647, abs=1e-15
        )

    def test_unit_norm(self):
        packet = GaussianPacket(omega0=2.327, tau=-40.0, tc=170.0)
        norm, _ = quad(
            lambda t: abs(amplitude(packet, t)) ** 2, -2000.0, 2000.0, limit=200
        )
        assert norm == pytest.approx(1.0, abs=1e-8)

    def test_vectorized_matches_scalar(self):
        packet = GaussianPacket(omega0=2.0, tau=10.0, tc=120.0)
        ts = np.array([-50.0, 0.0, 80.0])
        vec = amplitude(packet, ts)
        assert vec.shape == (3,)
        for i, t in enumerate(ts):
            assert vec[i] == amplitude(packet, float(t))

    def test_rejects_nonpositive_coherence_time(self):
        with pytest.raises(ValueError):
            GaussianPacket(omega0=2.0, tau=0.0, tc=0.0)
        with pytest.raises(ValueError):
            GaussianPacket(omega0=2.0, tau=0.0, tc=-5.0)


class TestSpectralAmplitude:
    def test_peak_value(self):
        packet = GaussianPacket(omega0=2.327, tau=0.0, tc=200.0)
        # (tc^2 / (2 pi))^(1/4), frozen from the mpmath oracle
        assert spectral_amplitude(packet, 2.327) == pytest.approx(
            8.932438417380023, abs=1e-12
        )

    def test_unit_norm(self):
        packet = GaussianPacket(omega0=2.327, tau=25.0, tc=200.0)
        norm, err = quad(
            lambda w: abs(spectral_amplitude(packet, w)) ** 2,
            2.327 - 0.2, 2.327 + 0.2, limit=200,
        )
        assert norm == pytest.approx(1.0, abs=1e-9)

    def test_fourier_pair_consistency(self):
        # xi(t) must equal (2 pi)^(-1/2) * integral Phi(w) exp(-i w t) dw.
        packet = GaussianPacket(omega0=2.327, tau=30.0, tc=200.0)
        lo, hi = packet.omega0 - 0.25, packet.omega0 + 0.25
        for t in (-100.0, 0.0, 30.0, 150.0):
            re, _ = quad(
                lambda w: (spectral_amplitude(packet, w) * cmath.exp(-1j * w * t)).real,
                lo, hi, limit=400,
            )
            im, _ = quad(
                lambda w: (spectral_amplitude(packet, w) * cmath.exp(-1j * w * t)).imag,
                lo, hi, limit=400,
            )
            rebuilt = (re + 1j * im) / math.sqrt(2.0 * math.pi)
            assert abs(rebuilt - amplitude(packet, t)) < 1e-6


class TestOverlapNumeric:
    def test_self_overlap_is_one(self):
        p = GaussianPacket(omega0=2.327, tau=12.0, tc=200.0)
        assert abs(overlap_numeric(p, p) - 1.0) < 1e-12

    def test_far_separated_packets_overlap_vanishes(self):
        p1 = GaussianPacket(omega0=2.327, tau=-2000.0, tc=100.0)
        p2 = GaussianPacket(omega0=2.327, tau=+2000.0, tc=100.0)
        assert abs(overlap_numeric(p1, p2)) < 1e-30

    def test_pure_delay_modulus(self):
        # tau2 - tau1 = tc / sqrt(2) gives |gamma| = exp(-1/4)
        tc = 180.0
        d = tc / math.sqrt(2.0)
        p1 = GaussianPacket(omega0=2.0, tau=-d / 2, tc=tc)
        p2 = GaussianPacket(omega0=2.0, tau=+d / 2, tc=tc)
        assert abs(overlap_numeric(p1, p2)) == pytest.approx(math.exp(-0.25), abs=1e-12)

    def test_unattainable_tolerance_raises(self):
        p1 = GaussianPacket(omega0=2.327, tau=0.0, tc=200.0)
        p2 = GaussianPacket(omega0=2.327, tau=50.0, tc=200.0)
        with pytest.raises(QuadratureNotConverged):
            overlap_numeric(p1, p2, tol=0.0)


class TestOverlapClosed:
    def test_matches_numeric_on_random_pairs(self, rng):
        worst = 0.0
        for _ in range(100):
            pair = random_pair(rng)
            closed = overlap_closed(pair.packet1, pair.packet2)
            numeric = overlap_numeric(pair.packet1, pair.packet2)
            worst = max(worst, abs(closed - numeric))
        assert worst < 1e-9

    def test_hermitian_symmetry(self, rng):
        for _ in range(20):
            pair = random_pair(rng)
            fwd = overlap_closed(pair.packet1, pair.packet2)
            rev = overlap_closed(pair.packet2, pair.packet1)
            assert abs(fwd - rev.conjugate()) < 1e-15
        pair = random_pair(rng)
        fwd = overlap_numeric(pair.packet1, pair.packet2)
        rev = overlap_numeric(pair.packet2, pair.packet1)
        assert abs(fwd - rev.conjugate()) < 1e-12

    def test_cauchy_schwarz(self, rng):
        for _ in range(200):
            pair = random_pair(rng)
            assert abs(overlap_closed(pair.packet1, pair.packet2)) <= 1.0 + 1e-12

    def test_translation_invariance(self, rng):
        # Shifting both arrival times together cannot change the overlap.
        for _ in range(20):
            pair = random_pair(rng)
            shift = rng.uniform(-500.0, 500.0)
            moved = (
                GaussianPacket(pair.packet1.omega0, pair.packet1.tau + shift, pair.tc),
                GaussianPacket(pair.packet2.omega0, pair.packet2.tau + shift, pair.tc),
            )
            a = overlap_closed(pair.packet1, pair.packet2)
            b = overlap_closed(*moved)
            assert abs(a - b) < 1e-12

    def test_rejects_mismatched_coherence_times(self):
        p1 = GaussianPacket(omega0=2.0, tau=0.0, tc=200.0)
        p2 = GaussianPacket(omega0=2.0, tau=0.0, tc=150.0)
        with pytest.raises(MismatchedCoherenceTime):
            overlap_closed(p1, p2)
        with pytest.raises(MismatchedCoherenceTime):
            PacketPair(p1, p2)


class TestIndistinguishability:
    def test_is_squared_overlap_modulus(self, rng):
        for _ in range(50):
            pair = random_pair(rng)
            gamma = overlap_closed(pair.packet1, pair.packet2)
            assert indistinguishability(pair) == pytest.approx(
                abs(gamma) ** 2, rel=1e-12
            )

    def test_pure_delay_law(self):
        tc = 200.0
        pair = PacketPair(
            GaussianPacket(2.3, -50.0, tc), GaussianPacket(2.3, +50.0, tc)
        )
        # dtau = 50, I = exp(-(2 * 50 / 200)^2) = exp(-1/4)
        assert indistinguishability(pair) == pytest.approx(math.exp(-0.25), rel=1e-14)

    def test_pure_detuning_law(self):
        tc = 200.0
        pair = PacketPair(
            GaussianPacket(2.3 - 0.0025, 0.0, tc), GaussianPacket(2.3 + 0.0025, 0.0, tc)
        )
        # domega = 0.0025, I = exp(-(0.0025 * 200)^2) = exp(-1/4)
        assert indistinguishability(pair) == pytest.approx(math.exp(-0.25), rel=1e-14)


class TestLabConversion:
    def test_coherence_time(self):
        pair = packets_from_lab(0.0, 810.0, 0.0, 60.0)
        assert pair.tc == pytest.approx(60.0 / C_UM_PER_FS, rel=1e-15)
        assert pair.tc == pytest.approx(200.138, abs=5e-4)

    def test_delay_from_path_difference(self):
        pair = packets_from_lab(30.0, 810.0, 0.0, 60.0)
        assert pair.delta_tau == pytest.approx(30.0 / C_UM_PER_FS, rel=1e-15)
        assert pair.packet1.tau == -pair.packet2.tau

    def test_one_coherence_length_gives_e_minus_four(self):
        pair = packets_from_lab(60.0, 810.0, 0.0, 60.0)
        assert indistinguishability(pair) == pytest.approx(math.exp(-4.0), rel=1e-12)

    def test_detuning_is_exact_not_linearized(self):
        pair = packets_from_lab(0.0, 810.0, 0.1, 60.0)
        lam1 = (810.0 - 0.05) * 1e-3
        lam2 = (810.0 + 0.05) * 1e-3
        want = math.pi * C_UM_PER_FS * (1.0 / lam2 - 1.0 / lam1)
        assert pair.delta_omega == pytest.approx(want, rel=1e-14)
        # the lower-wavelength packet carries the higher frequency
        assert pair.packet1.omega0 > pair.packet2.omega0

    def test_center_wavelength_frequency(self):
        pair = packets_from_lab(0.0, 810.0, 0.0, 60.0)
        want = 2.0 * math.pi * C_UM_PER_FS / 0.810
        assert pair.packet1.omega0 == pytest.approx(want, rel=1e-15)
        assert pair.packet2.omega0 == pair.packet1.omega0

    def test_lab_params_round_trip(self):
        lab = LabParams(10.0, 810.0, 0.0, 60.0)
        assert lab.packet_pair() == packets_from_lab(10.0, 810.0, 0.0, 60.0)
        moved = lab.with_delta_z(25.0)
        assert moved.delta_z_um == 25.0
        assert moved.l_c_um == lab.l_c_um

    def test_rejects_bad_bench_values(self):
        with pytest.raises(ValueError):
            packets_from_lab(0.0, 810.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            packets_from_lab(0.0, -810.0, 0.0, 60.0)
        with pytest.raises(ValueError):
            packets_from_lab(0.0, 810.0, 1700.0, 60.0)

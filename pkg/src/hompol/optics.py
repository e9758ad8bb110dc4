"""Interferometer mode transform and the reference input states.

The interferometer is a polarization interferometer: a half-wave plate at
angle theta between two polarizing beam splitters.  Photon pairs enter in
the two polarization modes, and the wave plate mixes them like a variable
beam splitter whose splitting ratio encodes the phase phi = 4 theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .wavepacket import PacketPair


class InvalidPhotonNumber(ValueError):
    """Photon number must be a positive even integer (and small enough)."""


@dataclass(frozen=True)
class InterferometerSetting:
    """Half-wave-plate angle plus the input packet pair.

    theta is the single source of truth; the encoded phase phi = 4 theta is
    derived, never stored.
    """

    theta: float
    pair: PacketPair

    @property
    def phi(self) -> float:
        return 4.0 * self.theta


_UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class ModeTransform:
    """2x2 unitary relating output mode operators to input mode operators."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError(f"mode transform must be 2x2, got shape {u.shape}")
        defect = np.max(np.abs(u @ u.conj().T - np.eye(2)))
        if defect > _UNITARITY_TOL:
            raise ValueError(f"mode transform is not unitary (defect {defect:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


def hwp_pbs_transform(theta: float) -> ModeTransform:
    """Mode map of the half-wave plate at angle theta between the splitters.

    Output creation operators follow from the input ones through

        -i [[cos 2theta,  sin 2theta],
            [sin 2theta, -cos 2theta]]

    so theta = pi/8 realizes the balanced beam splitter.  The global -i
    cancels in every probability but is kept verbatim so amplitude-level
    checks match the wave-plate convention exactly.
    """
    c = math.cos(2.0 * theta)
    s = math.sin(2.0 * theta)
    return ModeTransform(-1j * np.array([[c, s], [s, -c]]))


@dataclass(frozen=True)
class HollandBurnettState:
    """|N/2, N/2> behind a balanced splitter, decomposed over |2n, N-2n>."""

    n_photons: int
    coefficients: tuple[float, ...]


_MAX_PHOTONS = 20


def hb_coefficients(n_photons: int) -> HollandBurnettState:
    """Holland-Burnett amplitudes c_n = sqrt((2n)! (N-2n)!) / (2^(N/2) n! (N/2-n)!).

    Only even output occupations appear; odd ones interfere away.  The
    amplitudes are evaluated with exact integer arithmetic so every c_n is
    correct to the last float bit; N = 2 gives the two-photon NOON state
    (1/sqrt2, 1/sqrt2) and N = 4 gives (sqrt(3/8), 1/2, sqrt(3/8)).
    """
    N = n_photons
    if not isinstance(N, int) or isinstance(N, bool) or N < 2 or N % 2:
        raise InvalidPhotonNumber(f"need a positive even photon number, got {N!r}")
    if N > _MAX_PHOTONS:
        raise InvalidPhotonNumber(
            f"photon number capped at {_MAX_PHOTONS} (factorial growth), got {N}"
        )
    half = N // 2
    coeffs = []
    for n in range(half + 1):
        num = math.factorial(2 * n) * math.factorial(N - 2 * n)
        den = (2**half * math.factorial(n) * math.factorial(half - n)) ** 2
        coeffs.append(math.sqrt(Fraction(num, den)))
    return HollandBurnettState(N, tuple(coeffs))

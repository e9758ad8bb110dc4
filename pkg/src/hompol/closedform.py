"""Closed-form outcome probabilities of the polarization interferometer.

For the two-pair input (two photons in each polarization mode) the five
four-photon detection patterns {4:0, 0:4, 3:1, 1:3, 2:2} have probabilities
that collapse to quadratics in the single variable

    g(phi) = cos^2(2 theta) sin^2(2 theta) = sin^2(phi) / 4,    phi = 4 theta,

with coefficients set by the interference factor E1 (and E2 = E1^2):

    E1 = exp(-4 dtau^2 / tc^2 - domega^2 tc^2)

    P(4:0) = P(0:4) = (1 + 4 E1 + E2) g^2
    P(3:1) = P(1:3) = (2 + 4 E1) g - (4 + 16 E1 + 4 E2) g^2
    P(2:2)          = 1 - (4 + 8 E1) g + (6 + 24 E1 + 6 E2) g^2

E1 equals the degree of indistinguishability of the two wave-packet modes;
E2 weighs the doubly exchanged interference contributions.  The quadratic
form is used verbatim because it makes the phase derivatives exact and free
of cancellation:

    dP/dphi   = (beta + 2 gamma g) g'
    d2P/dphi2 = (beta + 2 gamma g) g'' + 2 gamma g'^2

with g' = sin(2 phi) / 4 and g'' = cos(2 phi) / 2.  E1, E2 and the
coefficient table are evaluated once per setting; only g varies along a
phase grid.

The two-photon analogue over {2:0, 0:2, 1:1} is linear in g:

    P(2:0) = P(0:2) = (1 + E1) g,      P(1:1) = 1 - 2 (1 + E1) g,

whose 1:1 coincidence at phi = pi/2 is the Hong-Ou-Mandel dip (1 - E1)/2.

Scalar evaluation goes through the same vectorized code paths as grid
evaluation, so a grid entry and the corresponding scalar call are
bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optics import InterferometerSetting
from .wavepacket import PacketPair, indistinguishability

# Outcome order used by every array-valued function in the package.
PATTERNS = ("40", "04", "31", "13", "22")
TWO_PHOTON_PATTERNS = ("20", "02", "11")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of the five four-photon detection patterns."""

    p40: float
    p04: float
    p31: float
    p13: float
    p22: float
    setting: InterferometerSetting | None = None

    def as_array(self) -> np.ndarray:
        return np.array([self.p40, self.p04, self.p31, self.p13, self.p22])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PATTERNS, self.as_array().tolist()))

    @property
    def total(self) -> float:
        return float(self.as_array().sum())


@dataclass(frozen=True)
class TwoPhotonDistribution:
    """Probabilities of the three two-photon detection patterns."""

    p20: float
    p02: float
    p11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p20, self.p02, self.p11])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(TWO_PHOTON_PATTERNS, self.as_array().tolist()))


def interference_factor(delta_tau: float, delta_omega: float, tc: float) -> float:
    """E1 = exp(-4 dtau^2/tc^2 - domega^2 tc^2), the indistinguishability."""
    if tc <= 0:
        raise ValueError(f"coherence time must be positive, got {tc}")
    x = 2.0 * delta_tau / tc
    y = delta_omega * tc
    return math.exp(-(x * x) - y * y)


def _quadratic_coefficients(e1: float) -> np.ndarray:
    # Rows follow PATTERNS; columns are (alpha, beta, gamma) of
    # P = alpha + beta g + gamma g^2.
    e2 = e1 * e1
    p40 = (0.0, 0.0, 1.0 + 4.0 * e1 + e2)
    p31 = (0.0, 2.0 + 4.0 * e1, -(4.0 + 16.0 * e1 + 4.0 * e2))
    p22 = (1.0, -(4.0 + 8.0 * e1), 6.0 + 24.0 * e1 + 6.0 * e2)
    return np.array([p40, p40, p31, p31, p22])


def _g_terms(phi):
    phi = np.asarray(phi, dtype=float)
    g = 0.25 * np.sin(phi) ** 2
    dg = 0.25 * np.sin(2.0 * phi)
    d2g = 0.5 * np.cos(2.0 * phi)
    return g, dg, d2g


def p4_terms(phi, e1: float):
    """Probabilities plus first and second phi-derivatives, all patterns.

    Returns three arrays shaped (5,) + shape(phi), ordered as PATTERNS.
    This is the single evaluation path behind the public closed-form and
    Fisher-information functions.
    """
    coeff = _quadratic_coefficients(e1)
    g, dg, d2g = _g_terms(phi)
    extra = (1,) * np.ndim(g)
    alpha = coeff[:, 0].reshape((5,) + extra)
    beta = coeff[:, 1].reshape((5,) + extra)
    gamma = coeff[:, 2].reshape((5,) + extra)
    slope = beta + 2.0 * gamma * g
    p = alpha + g * (beta + gamma * g)
    dp = slope * dg
    d2p = slope * d2g + 2.0 * gamma * dg * dg
    return p, dp, d2p


def p4_closed(
    theta: float, delta_tau: float, delta_omega: float, tc: float
) -> OutcomeDistribution:
    """Four-photon outcome distribution at wave-plate angle theta."""
    e1 = interference_factor(delta_tau, delta_omega, tc)
    p, _, _ = p4_terms(4.0 * theta, e1)
    return OutcomeDistribution(*(float(x) for x in p))


def p4_derivative(
    theta: float, delta_tau: float, delta_omega: float, tc: float
) -> dict[str, float]:
    """Exact dP/dphi per pattern at phi = 4 theta (keys follow PATTERNS)."""
    e1 = interference_factor(delta_tau, delta_omega, tc)
    _, dp, _ = p4_terms(4.0 * theta, e1)
    return {k: float(v) for k, v in zip(PATTERNS, dp)}


def _linear_coefficients_2(e1: float) -> np.ndarray:
    # Two-photon patterns are linear in g; gamma column kept so the
    # derivative bookkeeping is shared with the four-photon case.
    p20 = (0.0, 1.0 + e1, 0.0)
    p11 = (1.0, -2.0 * (1.0 + e1), 0.0)
    return np.array([p20, p20, p11])


def p2_terms(phi, e1: float):
    """Two-photon analogue of ``p4_terms``; arrays ordered as TWO_PHOTON_PATTERNS."""
    coeff = _linear_coefficients_2(e1)
    g, dg, d2g = _g_terms(phi)
    extra = (1,) * np.ndim(g)
    alpha = coeff[:, 0].reshape((3,) + extra)
    beta = coeff[:, 1].reshape((3,) + extra)
    gamma = coeff[:, 2].reshape((3,) + extra)
    slope = beta + 2.0 * gamma * g
    p = alpha + g * (beta + gamma * g)
    dp = slope * dg
    d2p = slope * d2g + 2.0 * gamma * dg * dg
    return p, dp, d2p


def p2_closed(theta: float, pair: PacketPair) -> TwoPhotonDistribution:
    """Two-photon outcome distribution for one photon per input mode.

    At theta = pi/8 the coincidence probability is the Hong-Ou-Mandel dip
    (1 - I)/2; at theta = 0 the modes pass through and P(1:1) = 1.
    """
    e1 = indistinguishability(pair)
    p, _, _ = p2_terms(4.0 * theta, e1)
    return TwoPhotonDistribution(*(float(x) for x in p))

"""Fisher information of the photon-counting measurement and its bounds.

The wave-plate angle encodes the phase phi = 4 theta, the five four-photon
counting outcomes form the measurement, and the classical Fisher information

    F(phi) = sum_m (dP_m/dphi)^2 / P_m

quantifies the attainable phase precision.  Outcomes with vanishing
probability are the interesting ones: where P_m has a quadratic zero the
ratio is 0/0 with limit 2 d2P_m/dphi2, and where the zero is quartic both
the true limit and 2 d2P_m/dphi2 vanish, so one replacement rule below the
threshold ZERO_PROB_EPS covers every outcome.  This is what keeps the
indistinguishable-input information pinned at its quantum bound

    qfi_hb(N) = N (N/2 + 1)        (12 for the four-photon input)

across the whole phase axis, including phi = pi/2 where all slopes vanish
and the entire information flows through the two 3:1 limit terms.  Partial
distinguishability interpolates the bound linearly:

    qfi_partial(N, I) = N (N I / 2 + 1),

which the counting measurement saturates at phi -> 0 and pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closedform import p2_terms, p4_terms
from .optics import InvalidPhotonNumber
from .wavepacket import LabParams, PacketPair, indistinguishability

# Probabilities below this are treated as structural zeros of the model.
ZERO_PROB_EPS = 1e-12

# Central finite-difference step for the cross-check derivative path.
FD_STEP = 1e-5

ANALYTIC = "analytic-derivative"
FINITE_DIFFERENCE = "finite-difference"


class OutOfRangeIndistinguishability(ValueError):
    """Indistinguishability must lie in [0, 1]."""


@dataclass(frozen=True)
class FisherPoint:
    """F(phi) at one setting, with how it was obtained."""

    phi: float
    fisher: float
    method: str
    limit_terms_used: int


@dataclass(frozen=True)
class FisherScan:
    """F over a (delta_z, phi) grid; values[i, j] = F(phi_grid[j]) at delta_z_grid[i]."""

    phi_grid: np.ndarray
    delta_z_grid: np.ndarray
    values: np.ndarray
    lab: LabParams
    method: str


def fisher_from_probabilities(p, dp, d2p, eps: float = ZERO_PROB_EPS):
    """Sum the per-outcome contributions with the vanishing-probability rule.

    Arrays are shaped (n_outcomes,) + grid shape.  Returns (fisher_values,
    limit_term_counts) over the grid shape.
    """
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    d2p = np.asarray(d2p, dtype=float)
    limit = p < eps
    safe = np.where(limit, 1.0, p)
    terms = np.where(limit, np.maximum(2.0 * d2p, 0.0), dp * dp / safe)
    return terms.sum(axis=0), limit.sum(axis=0)


def _derivative_triplet(terms_fn, phi, e1, method):
    if method == ANALYTIC:
        return terms_fn(phi, e1)
    if method == FINITE_DIFFERENCE:
        h = FD_STEP
        p_minus, _, _ = terms_fn(phi - h, e1)
        p_0, _, _ = terms_fn(phi, e1)
        p_plus, _, _ = terms_fn(phi + h, e1)
        dp = (p_plus - p_minus) / (2.0 * h)
        d2p = (p_plus - 2.0 * p_0 + p_minus) / (h * h)
        return p_0, dp, d2p
    raise ValueError(f"unknown derivative method {method!r}")


def _fisher_point(terms_fn, theta, pair: PacketPair, method: str) -> FisherPoint:
    phi = 4.0 * np.asarray(theta, dtype=float)
    e1 = indistinguishability(pair)
    p, dp, d2p = _derivative_triplet(terms_fn, phi, e1, method)
    value, n_limit = fisher_from_probabilities(p, dp, d2p)
    if phi.ndim == 0:
        return FisherPoint(phi=float(phi), fisher=float(value), method=method,
                           limit_terms_used=int(n_limit))
    return FisherPoint(phi=phi, fisher=np.asarray(value), method=method,
                       limit_terms_used=np.asarray(n_limit))


def fisher(theta, pair: PacketPair, method: str = ANALYTIC) -> FisherPoint:
    """Fisher information of the four-photon counting outcomes at theta.

    ``theta`` may be a scalar or an array; the point's ``phi``, ``fisher``,
    and ``limit_terms_used`` fields match its shape.
    """
    return _fisher_point(p4_terms, theta, pair, method)


def fisher_two_photon(theta, pair: PacketPair, method: str = ANALYTIC) -> FisherPoint:
    """Fisher information of the two-photon counting outcomes at theta."""
    return _fisher_point(p2_terms, theta, pair, method)


def _check_photon_number(n):
    if not isinstance(n, int) or isinstance(n, bool) or n < 2 or n % 2:
        raise InvalidPhotonNumber(f"need a positive even photon number, got {n!r}")


def qfi_hb(n_photons: int) -> float:
    """Quantum Fisher information of the N-photon split-pair probe: N (N/2 + 1)."""
    _check_photon_number(n_photons)
    return float(n_photons * (n_photons / 2 + 1))


def qfi_partial(n_photons: int, indist: float) -> float:
    """Quantum Fisher information at partial indistinguishability: N (N I/2 + 1)."""
    _check_photon_number(n_photons)
    if not 0.0 <= indist <= 1.0:
        raise OutOfRangeIndistinguishability(
            f"indistinguishability must be in [0, 1], got {indist}"
        )
    return float(n_photons * (n_photons * indist / 2 + 1))


def qcrb(fisher_value: float, n_repetitions: int = 1) -> float:
    """Cramer-Rao phase-variance bound 1/(n F).

    A vanishing Fisher information gives an unbounded variance; that case
    returns math.inf as the distinguished value (serializers map it to
    null), never a division error.
    """
    if fisher_value < 0:
        raise ValueError(f"Fisher information cannot be negative, got {fisher_value}")
    if not n_repetitions >= 1:
        raise ValueError(f"need at least one repetition, got {n_repetitions}")
    if fisher_value == 0:
        return math.inf
    return 1.0 / (n_repetitions * fisher_value)


def _check_grid(grid, name):
    if grid.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError(f"{name} must be strictly increasing")


def fisher_scan(phi_grid, delta_z_grid, lab: LabParams, method: str = ANALYTIC) -> FisherScan:
    """Fisher information over a phase x path-difference grid."""
    phi = np.asarray(phi_grid, dtype=float)
    dz = np.asarray(delta_z_grid, dtype=float)
    _check_grid(phi, "phi_grid")
    _check_grid(dz, "delta_z_grid")
    values = np.empty((dz.size, phi.size))
    for i, z in enumerate(dz):
        pair = lab.with_delta_z(float(z)).packet_pair()
        e1 = indistinguishability(pair)
        p, dp, d2p = _derivative_triplet(p4_terms, phi, e1, method)
        values[i], _ = fisher_from_probabilities(p, dp, d2p)
    return FisherScan(phi, dz, values, lab, method)

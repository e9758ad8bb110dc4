"""Shared helpers for building packet pairs with prescribed properties."""

from __future__ import annotations

import math

import numpy as np

from hompol.wavepacket import GaussianPacket, PacketPair


def random_pair(rng: np.random.Generator, tc_range=(50.0, 400.0)) -> PacketPair:
    """A pair with random delays and detunings, overlap anywhere in (0, 1]."""
    tc = rng.uniform(*tc_range)
    omega0 = rng.uniform(1.5, 3.5)
    tau1, tau2 = rng.uniform(-1.5 * tc, 1.5 * tc, size=2)
    domega = rng.uniform(-2.0 / tc, 2.0 / tc)
    return PacketPair(
        GaussianPacket(omega0 - domega / 2, tau1, tc),
        GaussianPacket(omega0 + domega / 2, tau2, tc),
    )


def pair_from_indist(indist: float, tc: float = 200.0, omega0: float = 2.33) -> PacketPair:
    """A pure-delay pair whose squared overlap equals ``indist`` exactly."""
    if not 0.0 < indist <= 1.0:
        raise ValueError("indist must be in (0, 1]; zero needs an infinite delay")
    # I = exp(-(2 dtau / tc)^2) with dtau = (tau2 - tau1) / 2
    dtau = 0.5 * tc * math.sqrt(-math.log(indist))
    return PacketPair(
        GaussianPacket(omega0, -dtau, tc),
        GaussianPacket(omega0, +dtau, tc),
    )


def distinguishable_pair(tc: float = 200.0, omega0: float = 2.33) -> PacketPair:
    """A pair with negligible overlap (delay of 20 coherence times)."""
    return PacketPair(
        GaussianPacket(omega0, -10.0 * tc, tc),
        GaussianPacket(omega0, +10.0 * tc, tc),
    )

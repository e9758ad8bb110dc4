"""Gaussian single-photon wave packets and their mode overlaps.

Each photon occupies a Gaussian spatiotemporal mode

    xi(t) = (2 / (pi tc^2))^(1/4) exp[-(t - tau)^2 / tc^2 - i omega0 (t - tau)]

parameterized by a central angular frequency omega0 [rad/fs], an arrival
time tau [fs], and a coherence time tc [fs].  Two such modes interfere only
to the extent that they overlap, and the squared modulus of

    <xi1|xi2> = integral xi1*(t) xi2(t) dt

is the degree of indistinguishability

    I = exp(-4 dtau^2 / tc^2 - domega^2 tc^2)

with dtau = (tau2 - tau1) / 2 and domega = (omega2 - omega1) / 2.  Every
distinguishability effect elsewhere in the package enters through this one
number, so the overlap is computed twice here: once analytically and once by
brute-force quadrature, each checking the other.

Units are fixed package-wide: time in femtoseconds, angular frequency in
rad/fs, path lengths in micrometres, wavelengths in nanometres.  All
conversions between bench quantities and packet parameters go through the
speed of light constant defined below; nothing else in the package converts
units.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# Speed of light, exact by SI definition, in um/fs.
C_UM_PER_FS = 0.299792458


class QuadratureNotConverged(RuntimeError):
    """The overlap quadrature failed its refinement convergence check."""


class MismatchedCoherenceTime(ValueError):
    """Both packets of a pair must share a single coherence time."""


@dataclass(frozen=True)
class GaussianPacket:
    """One Gaussian photon mode: omega0 [rad/fs], tau [fs], tc [fs]."""

    omega0: float
    tau: float
    tc: float

    def __post_init__(self):
        if not self.tc > 0:
            raise ValueError(f"coherence time must be positive, got {self.tc}")


def amplitude(packet: GaussianPacket, t):
    """Temporal amplitude xi(t).  Accepts a scalar or an array of times."""
    t = np.asarray(t, dtype=float)
    norm = (2.0 / (math.pi * packet.tc**2)) ** 0.25
    s = t - packet.tau
    out = norm * np.exp(-((s / packet.tc) ** 2) - 1j * packet.omega0 * s)
    return out if out.ndim else complex(out)


def spectral_amplitude(packet: GaussianPacket, omega):
    """Spectral amplitude Phi(omega), the Fourier partner of ``amplitude``.

    A Gaussian of bandwidth Delta = 1/tc centred on omega0, carrying the
    arrival-time phase exp(i omega tau), normalized so that

        xi(t) = (2 pi)^(-1/2) integral exp(-i omega t) Phi(omega) d omega

    holds exactly.  Accepts a scalar or an array of frequencies.
    """
    omega = np.asarray(omega, dtype=float)
    norm = (packet.tc**2 / (2.0 * math.pi)) ** 0.25
    out = norm * np.exp(
        -(((omega - packet.omega0) * packet.tc) ** 2) / 4.0 + 1j * omega * packet.tau
    )
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class PacketPair:
    """Two packets impinging on the interferometer, one per input mode.

    The closed-form interference results assume equal coherence times, so
    the pair rejects mismatched tc at construction.  The half-differences
    delta_tau and delta_omega are the only combinations the physics sees.
    """

    packet1: GaussianPacket
    packet2: GaussianPacket

    def __post_init__(self):
        if self.packet1.tc != self.packet2.tc:
            raise MismatchedCoherenceTime(
                f"coherence times differ: {self.packet1.tc} vs {self.packet2.tc}"
            )

    @property
    def tc(self) -> float:
        return self.packet1.tc

    @property
    def delta_tau(self) -> float:
        """Half the arrival-time difference, (tau2 - tau1) / 2 [fs]."""
        return 0.5 * (self.packet2.tau - self.packet1.tau)

    @property
    def delta_omega(self) -> float:
        """Half the frequency difference, (omega2 - omega1) / 2 [rad/fs]."""
        return 0.5 * (self.packet2.omega0 - self.packet1.omega0)


# Fixed-order Gauss-Legendre nodes shared by all panels.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _panel_quadrature(f, a, b, n_panels):
    # Composite 64-point Gauss-Legendre over n_panels equal panels of [a, b].
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(f(t.ravel())).reshape(t.shape)
    return complex(np.sum(vals * (_GL_WEIGHTS[None, :] * half[:, None])))


def overlap_numeric(p1: GaussianPacket, p2: GaussianPacket, tol: float = 1e-10) -> complex:
    """<xi1|xi2> by composite 64-point Gauss-Legendre quadrature.

    The window extends 8 coherence times beyond both packet centres, where
    the Gaussian envelope is far below double-precision resolution, and is
    split into panels no wider than two coherence times.  One refinement
    with halved panels supplies the convergence estimate; disagreement
    beyond ``tol`` raises QuadratureNotConverged instead of returning a
    silently wrong number.
    """
    tc_wide = max(p1.tc, p2.tc)
    a = min(p1.tau, p2.tau) - 8.0 * tc_wide
    b = max(p1.tau, p2.tau) + 8.0 * tc_wide
    n = max(8, math.ceil((b - a) / (2.0 * min(p1.tc, p2.tc))))

    def integrand(t):
        return np.conj(amplitude(p1, t)) * amplitude(p2, t)

    coarse = _panel_quadrature(integrand, a, b, n)
    fine = _panel_quadrature(integrand, a, b, 2 * n)
    err = abs(fine - coarse)
    if err > tol:
        raise QuadratureNotConverged(
            f"overlap quadrature error estimate {err:.3e} exceeds tol {tol:.1e}"
        )
    return fine


def overlap_closed(p1: GaussianPacket, p2: GaussianPacket) -> complex:
    """Analytic <xi1|xi2> for packets with a common coherence time.

    The modulus is exp(-2 dtau^2/tc^2 - domega^2 tc^2 / 2); the phase,
    2 dtau (omega1 + omega2)/2, is the mean carrier beating across the
    arrival-time separation and cancels in every measured probability.
    """
    if p1.tc != p2.tc:
        raise MismatchedCoherenceTime(
            f"closed-form overlap needs equal coherence times: {p1.tc} vs {p2.tc}"
        )
    tc = p1.tc
    dtau = 0.5 * (p2.tau - p1.tau)
    domega = 0.5 * (p2.omega0 - p1.omega0)
    omega_mean = 0.5 * (p1.omega0 + p2.omega0)
    return cmath.exp(
        -2.0 * (dtau / tc) ** 2 - 0.5 * (domega * tc) ** 2 + 2j * omega_mean * dtau
    )


def indistinguishability(pair: PacketPair) -> float:
    """Squared modulus of the pair's mode overlap; 1 identical, 0 orthogonal."""
    x = 2.0 * pair.delta_tau / pair.tc
    y = pair.delta_omega * pair.tc
    return math.exp(-(x * x) - y * y)


def packets_from_lab(
    delta_z_um: float,
    lambda0_nm: float,
    delta_lambda_nm: float,
    l_c_um: float,
) -> PacketPair:
    """Build the packet pair from bench parameters.

    delta_z_um       path-length difference; the packets arrive at times
                     -+ delta_z / c, so PacketPair.delta_tau = delta_z / c.
    lambda0_nm       common centre wavelength.
    delta_lambda_nm  centre-wavelength difference; the packets sit at
                     lambda0 -+ delta_lambda / 2, converted exactly through
                     omega = 2 pi c / lambda (no small-offset expansion).
    l_c_um           coherence length; tc = l_c / c.
    """
    if l_c_um <= 0:
        raise ValueError(f"coherence length must be positive, got {l_c_um}")
    if lambda0_nm <= 0:
        raise ValueError(f"centre wavelength must be positive, got {lambda0_nm}")
    if abs(delta_lambda_nm) >= 2.0 * lambda0_nm:
        raise ValueError("wavelength difference larger than the wavelengths themselves")
    tc = l_c_um / C_UM_PER_FS
    dtau = delta_z_um / C_UM_PER_FS
    lam1_um = (lambda0_nm - 0.5 * delta_lambda_nm) * 1e-3
    lam2_um = (lambda0_nm + 0.5 * delta_lambda_nm) * 1e-3
    omega1 = 2.0 * math.pi * C_UM_PER_FS / lam1_um
    omega2 = 2.0 * math.pi * C_UM_PER_FS / lam2_um
    return PacketPair(
        GaussianPacket(omega1, -dtau, tc),
        GaussianPacket(omega2, +dtau, tc),
    )


@dataclass(frozen=True)
class LabParams:
    """Bench-level description of the source feeding the interferometer."""

    delta_z_um: float
    lambda0_nm: float
    delta_lambda_nm: float
    l_c_um: float

    def packet_pair(self) -> PacketPair:
        return packets_from_lab(
            self.delta_z_um, self.lambda0_nm, self.delta_lambda_nm, self.l_c_um
        )

    def with_delta_z(self, delta_z_um: float) -> "LabParams":
        return LabParams(delta_z_um, self.lambda0_nm, self.delta_lambda_nm, self.l_c_um)

"""Brute-force outcome probabilities via temporal correlation operators.

A detection pattern (n_c photons in one output port, n_d in the other) is
represented by a normally ordered correlation operator: n_c + n_d creation
operators at distinct times t_1 .. t_N, the matching annihilation operators
in reverse time order, and a 1/(n_c! n_d!) normalization.  Substituting the
wave-plate mode transform writes every output operator as a combination of
the two input-mode operators; distributing the products and dropping every
assignment that would annihilate an input mode more often than it is
occupied leaves a finite term list (36 bilinear term pairs for the two-pair
input, one per way of placing the mode labels on each side).

Each surviving term then evaluates in closed form: annihilating a Gaussian
mode photon at time t pulls out sqrt(n) xi(t), so the N-fold time integral
of a term factorizes into a product of single-time overlap integrals

    <xi_i | xi_j> in {1, gamma, gamma*},   gamma = <xi1|xi2>,

multiplied by the ladder factor accumulated from the sqrt(n) chains (4 for
the two-pair input, 1 for one photon per mode).  The whole probability is a
small polynomial in the complex overlap gamma.

Nothing in this module uses the reduced closed-form distribution it exists
to check; with ``backend="numeric"`` even the single-mode overlaps come from
quadrature rather than the analytic Gaussian formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .closedform import OutcomeDistribution
from .optics import ModeTransform, hwp_pbs_transform
from .wavepacket import PacketPair, overlap_closed, overlap_numeric


class UnsupportedPattern(ValueError):
    """Only two- and four-photon detection patterns are expanded."""


class NonPhysicalProbability(RuntimeError):
    """An evaluated probability left [0, 1] beyond numerical noise."""


_IMAG_TOL = 1e-10
_RANGE_TOL = 1e-9
_SUM_TOL = 1e-9


@dataclass(frozen=True)
class OutcomePattern:
    """Detection pattern: n_c photons at output port 3, n_d at port 4."""

    n_c: int
    n_d: int

    def __post_init__(self):
        if self.n_c < 0 or self.n_d < 0:
            raise UnsupportedPattern(f"negative photon counts in {self.n_c}:{self.n_d}")
        if self.total not in (2, 4):
            raise UnsupportedPattern(
                f"pattern total must be 2 or 4 photons, got {self.total}"
            )

    @property
    def total(self) -> int:
        return self.n_c + self.n_d

    @property
    def label(self) -> str:
        return f"{self.n_c}{self.n_d}"


FOUR_PHOTON_PATTERNS = (
    OutcomePattern(4, 0),
    OutcomePattern(0, 4),
    OutcomePattern(3, 1),
    OutcomePattern(1, 3),
    OutcomePattern(2, 2),
)

TWO_PHOTON_PATTERNS = (
    OutcomePattern(2, 0),
    OutcomePattern(0, 2),
    OutcomePattern(1, 1),
)


@dataclass(frozen=True)
class OperatorTerm:
    """One surviving term of the expanded correlation operator.

    create_modes[j] and annihilate_modes[j] name the input mode (1 or 2) of
    the creation and annihilation operator acting at time slot j.  Pairing
    by slot is what lets the multi-time integral factorize into single-time
    overlaps.  Each side must carry each input mode exactly as often as it
    is occupied, which for the balanced inputs used here means equal counts
    of 1s and 2s.
    """

    coefficient: complex
    create_modes: tuple[int, ...]
    annihilate_modes: tuple[int, ...]

    def __post_init__(self):
        n = len(self.create_modes)
        if len(self.annihilate_modes) != n:
            raise ValueError("creation and annihilation sides differ in length")
        half = n // 2
        for side in (self.create_modes, self.annihilate_modes):
            if side.count(1) != half or side.count(2) != half:
                raise ValueError(
                    f"each side must place {half} operators on each input mode"
                )


@dataclass(frozen=True)
class FourPhotonInput:
    """The two-pair source state: two photons in each input mode."""

    pair: PacketPair

    @property
    def occupation(self) -> tuple[int, int]:
        return (2, 2)


def _assignments(slot_rows, occupation):
    # All ways to draw one input-mode operator per time slot without
    # over-annihilating either input mode, with the accumulated transform
    # coefficient.  slot_rows[j] is the 2-vector of amplitudes for slot j.
    n1, n2 = occupation
    out = []
    for modes in product((1, 2), repeat=len(slot_rows)):
        if modes.count(1) != n1 or modes.count(2) != n2:
            continue
        coeff = 1.0 + 0.0j
        for row, m in zip(slot_rows, modes):
            coeff *= row[m - 1]
        out.append((coeff, modes))
    return out


def _expand(pattern: OutcomePattern, transform: ModeTransform) -> tuple[OperatorTerm, ...]:
    u = transform.u
    occupation = (pattern.total // 2, pattern.total // 2)
    # Output-port row per time slot: the first n_c slots detect at port 3,
    # the rest at port 4.  The annihilation operators run over the same
    # slots in reverse time order, which pairs them slot-by-slot with the
    # creation operators once everything sits under the time integrals.
    rows = [tuple(u[0])] * pattern.n_c + [tuple(u[1])] * pattern.n_d
    conj_rows = [(r[0].conjugate(), r[1].conjugate()) for r in rows]
    norm = 1.0 / (math.factorial(pattern.n_c) * math.factorial(pattern.n_d))
    creations = _assignments(rows, occupation)
    annihilations = _assignments(conj_rows, occupation)
    return tuple(
        OperatorTerm(norm * cc * ac, cm, am)
        for cc, cm in creations
        for ac, am in annihilations
    )


@lru_cache(maxsize=512)
def _expand_cached(n_c: int, n_d: int, theta: float) -> tuple[OperatorTerm, ...]:
    return _expand(OutcomePattern(n_c, n_d), hwp_pbs_transform(theta))


def expand_pattern_operator(
    pattern: OutcomePattern, theta: float, transform: ModeTransform | None = None
) -> tuple[OperatorTerm, ...]:
    """Expand the correlation operator of ``pattern`` at wave-plate angle theta.

    Returns the surviving terms as an immutable tuple (the default-transform
    expansion is cached per (pattern, theta)).  Passing ``transform``
    overrides the wave-plate matrix, e.g. to check global-phase invariance.
    """
    if transform is None:
        return _expand_cached(pattern.n_c, pattern.n_d, float(theta))
    return _expand(pattern, transform)


def _ladder_factor(mode_seq, occupation):
    # sqrt(n) chain for annihilating every photon of each input mode, from
    # a(t)|n> = sqrt(n) xi(t) |n-1>.  The assignment filter guarantees the
    # chain empties each mode exactly.
    remaining = [occupation[0], occupation[1]]
    f = 1.0
    for m in mode_seq:
        f *= math.sqrt(remaining[m - 1])
        remaining[m - 1] -= 1
    return f


def _overlap_matrix(pair: PacketPair, backend: str):
    if backend == "closed":
        overlap = overlap_closed
    elif backend == "numeric":
        overlap = overlap_numeric
    else:
        raise ValueError(f"unknown overlap backend {backend!r}")
    p = (pair.packet1, pair.packet2)
    return tuple(tuple(overlap(p[i], p[j]) for j in range(2)) for i in range(2))


def _term_value(term: OperatorTerm, occupation, overlaps) -> complex:
    ladder = _ladder_factor(term.create_modes, occupation) * _ladder_factor(
        term.annihilate_modes, occupation
    )
    value = term.coefficient * ladder
    for cm, am in zip(term.create_modes, term.annihilate_modes):
        value *= overlaps[cm - 1][am - 1]
    return value


def evaluate_term(
    term: OperatorTerm, input: FourPhotonInput, backend: str = "closed"
) -> complex:
    """Value of one term: coefficient x ladder factors x overlap product."""
    overlaps = _overlap_matrix(input.pair, backend)
    return _term_value(term, input.occupation, overlaps)


def _pattern_probability(
    pair: PacketPair,
    occupation,
    theta: float,
    pattern: OutcomePattern,
    backend: str,
    transform: ModeTransform | None,
) -> float:
    terms = expand_pattern_operator(pattern, theta, transform)
    overlaps = _overlap_matrix(pair, backend)
    total = sum(_term_value(t, occupation, overlaps) for t in terms)
    if abs(total.imag) > _IMAG_TOL:
        raise NonPhysicalProbability(
            f"pattern {pattern.label}: imaginary residue {total.imag:.3e}"
        )
    p = total.real
    if p < -_RANGE_TOL or p > 1.0 + _RANGE_TOL:
        raise NonPhysicalProbability(f"pattern {pattern.label}: probability {p!r}")
    return min(max(p, 0.0), 1.0)


def probability_oracle(
    input: FourPhotonInput,
    theta: float,
    pattern: OutcomePattern,
    backend: str = "closed",
    transform: ModeTransform | None = None,
) -> float:
    """Probability of one four-photon pattern, straight from the expansion."""
    if pattern.total != 4:
        raise UnsupportedPattern(
            f"four-photon oracle got a {pattern.total}-photon pattern"
        )
    return _pattern_probability(input.pair, input.occupation, theta, pattern, backend, transform)


def distribution_oracle(
    input: FourPhotonInput,
    theta: float,
    backend: str = "closed",
    transform: ModeTransform | None = None,
) -> OutcomeDistribution:
    """All five four-photon pattern probabilities; checked to sum to one."""
    ps = [
        probability_oracle(input, theta, pat, backend, transform)
        for pat in FOUR_PHOTON_PATTERNS
    ]
    total = sum(ps)
    if abs(total - 1.0) > _SUM_TOL:
        raise NonPhysicalProbability(f"pattern probabilities sum to {total!r}")
    return OutcomeDistribution(*ps)


def two_photon_oracle(
    pair: PacketPair,
    theta: float,
    pattern: OutcomePattern,
    backend: str = "closed",
    transform: ModeTransform | None = None,
) -> float:
    """Probability of one two-photon pattern for one photon per input mode.

    Runs the same expansion machinery as the four-photon oracle with input
    occupation (1, 1); used to pin down the two-photon closed form and the
    Hong-Ou-Mandel dip.
    """
    if pattern.total != 2:
        raise UnsupportedPattern(
            f"two-photon oracle got a {pattern.total}-photon pattern"
        )
    return _pattern_probability(pair, (1, 1), theta, pattern, backend, transform)

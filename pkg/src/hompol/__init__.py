"""Multi-photon polarization interferometry with partially distinguishable packets.

The library models a two-mode interferometer built from polarizing beam
splitters and a half-wave plate, fed with photon pairs in Gaussian wave
packets.  It provides pattern probabilities (closed form and a brute-force
operator expansion used to cross-check them), Fisher-information analysis
of the interferometric phase, and a simulated counting experiment with
model fitting and bootstrap uncertainty bands.  The ``hompol`` console
script exposes the report paths.
"""

__version__ = "0.1.0"

from .closedform import (
    OutcomeDistribution,
    TwoPhotonDistribution,
    interference_factor,
    p2_closed,
    p4_closed,
    p4_derivative,
)
from .estimation import (
    FisherPoint,
    FisherScan,
    fisher,
    fisher_scan,
    fisher_two_photon,
    qcrb,
    qfi_hb,
    qfi_partial,
)
from .experiment import (
    CountsDataset,
    FisherBand,
    FitConfig,
    FitResult,
    HomDipFit,
    fisher_from_fit,
    fit_counts,
    hom_dip_fit,
    mc_fisher_band,
    read_counts,
    simulate_counts,
    simulate_hom_dip,
    write_counts,
)
from .optics import (
    HollandBurnettState,
    InterferometerSetting,
    ModeTransform,
    hb_coefficients,
    hwp_pbs_transform,
)
from .oracle import (
    FourPhotonInput,
    OutcomePattern,
    distribution_oracle,
    expand_pattern_operator,
    probability_oracle,
    two_photon_oracle,
)
from .wavepacket import (
    GaussianPacket,
    LabParams,
    PacketPair,
    amplitude,
    indistinguishability,
    overlap_closed,
    overlap_numeric,
    packets_from_lab,
    spectral_amplitude,
)

__all__ = [
    "__version__",
    "GaussianPacket",
    "PacketPair",
    "LabParams",
    "amplitude",
    "spectral_amplitude",
    "overlap_numeric",
    "overlap_closed",
    "indistinguishability",
    "packets_from_lab",
    "InterferometerSetting",
    "ModeTransform",
    "hwp_pbs_transform",
    "HollandBurnettState",
    "hb_coefficients",
    "OutcomeDistribution",
    "TwoPhotonDistribution",
    "interference_factor",
    "p4_closed",
    "p4_derivative",
    "p2_closed",
    "OutcomePattern",
    "FourPhotonInput",
    "expand_pattern_operator",
    "probability_oracle",
    "distribution_oracle",
    "two_photon_oracle",
    "FisherPoint",
    "FisherScan",
    "fisher",
    "fisher_two_photon",
    "fisher_scan",
    "qfi_hb",
    "qfi_partial",
    "qcrb",
    "CountsDataset",
    "simulate_counts",
    "read_counts",
    "write_counts",
    "FitConfig",
    "FitResult",
    "fit_counts",
    "fisher_from_fit",
    "HomDipFit",
    "hom_dip_fit",
    "simulate_hom_dip",
    "FisherBand",
    "mc_fisher_band",
]

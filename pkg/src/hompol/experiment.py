"""Counting-experiment simulation, model fitting, and bootstrap uncertainty.

Forward model: at each wave-plate setting the five four-photon outcomes are
multinomial over

    P_obs,m = (1 - b) P_m + b / 5,

where P_m are the closed-form pattern probabilities and b is a flat
background admixture (accidental coincidences).  Event totals per setting
are Poisson around the requested mean.  All draws come from counter-based
Philox streams keyed by (seed, stream, resample index, setting index), so
identical inputs reproduce identical data regardless of execution order or
thread count.

Fitting minimizes inverse-variance weighted squared residuals between the
empirical frequencies and the model, using a derivative-free Nelder-Mead
simplex over transformed parameters (soft-plus keeps the path difference
non-negative, a logistic keeps the background inside [0, 1)).  Because the
four-photon probabilities depend on the wavelength and path differences
only through the single interference exponent, delta_z and delta_lambda are
not jointly identifiable from one scan; the default configuration therefore
floats (delta_z, background) and holds delta_lambda fixed.

The Fisher information of a fitted dataset is always evaluated on the
fitted smooth interference model, never on raw frequencies, and by default
without the background admixture (the background describes the detection
system, not the probe state).  Uncertainty comes from a parametric
bootstrap: resampled counts are refitted and the per-phase spread of the
refitted information curves forms the band.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .closedform import PATTERNS, p4_terms
from .estimation import fisher_from_probabilities
from .wavepacket import LabParams, indistinguishability

PATTERN_COLUMNS = tuple("n" + p for p in PATTERNS)

_SIM_STREAM = 0
_DIP_STREAM = 1
_BAND_STREAM = 2


class FitNotConverged(RuntimeError):
    """The simplex failed to converge within the restart budget."""


class DegenerateData(ValueError):
    """The dataset cannot constrain the requested fit."""


def _stream(seed: int, *key) -> np.random.Generator:
    # Counter-based generator; the spawn key makes each (stream, resample,
    # setting) an independent reproducible stream.
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class CountsDataset:
    """Four-photon counts per wave-plate setting, in PATTERNS column order."""

    settings: np.ndarray        # theta [rad], shape (n,)
    counts: np.ndarray          # shape (n, 5)
    shots: np.ndarray           # shape (n,)
    rng_seed: int
    acquisition: dict | None = None

    def __post_init__(self):
        settings = np.array(self.settings, dtype=float)
        counts = np.array(self.counts, dtype=np.int64)
        shots = np.array(self.shots, dtype=np.int64)
        if settings.ndim != 1:
            raise ValueError("settings must be a 1-d array of angles")
        if counts.shape != (settings.size, len(PATTERNS)):
            raise ValueError(
                f"counts must have shape ({settings.size}, {len(PATTERNS)}), got {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("negative counts are not physical")
        if np.any(counts.sum(axis=1) != shots):
            raise ValueError("counts must sum to shots at every setting")
        for arr in (settings, counts, shots):
            arr.setflags(write=False)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "shots", shots)

    @property
    def n_settings(self) -> int:
        return int(self.settings.size)

    def frequencies(self) -> np.ndarray:
        """Empirical outcome frequencies; zero-shot settings give zeros."""
        shots = self.shots[:, None].astype(float)
        return np.divide(
            self.counts, shots, out=np.zeros_like(self.counts, dtype=float),
            where=shots > 0,
        )


def outcome_probabilities(lab: LabParams, thetas, background: float = 0.0) -> np.ndarray:
    """Model outcome probabilities, shape (n_settings, 5)."""
    if not 0.0 <= background < 1.0:
        raise ValueError(f"background fraction must be in [0, 1), got {background}")
    thetas = np.asarray(thetas, dtype=float)
    pair = lab.packet_pair()
    e1 = indistinguishability(pair)
    p, _, _ = p4_terms(4.0 * thetas, e1)
    return (1.0 - background) * p.T + background / len(PATTERNS)


def simulate_counts(
    lab: LabParams,
    theta_grid,
    mean_events_per_setting: float,
    seed: int,
    background: float = 0.0,
    acquisition: dict | None = None,
) -> CountsDataset:
    """Poisson totals and multinomial outcome splits at every setting."""
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.size == 0:
        raise ValueError("theta_grid must be non-empty")
    if mean_events_per_setting <= 0:
        raise ValueError("mean_events_per_setting must be positive")
    probs = outcome_probabilities(lab, thetas, background)
    probs = probs / probs.sum(axis=1, keepdims=True)
    counts = np.zeros((thetas.size, len(PATTERNS)), dtype=np.int64)
    shots = np.zeros(thetas.size, dtype=np.int64)
    for i in range(thetas.size):
        rng = _stream(seed, _SIM_STREAM, 0, i)
        shots[i] = rng.poisson(mean_events_per_setting)
        counts[i] = rng.multinomial(int(shots[i]), probs[i])
    return CountsDataset(thetas, counts, shots, int(seed), acquisition)


# ---------------------------------------------------------------------------
# Serialization: CSV of settings and counts plus a JSON sidecar.

_COUNTS_HEADER = ("theta_rad",) + PATTERN_COLUMNS


def write_counts(dataset: CountsDataset, csv_path) -> None:
    """Write the dataset CSV and its JSON sidecar (same stem, .json)."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COUNTS_HEADER)
        for theta, row in zip(dataset.settings, dataset.counts):
            writer.writerow([format(theta, ".17g")] + [int(c) for c in row])
    sidecar = {
        "seed": dataset.rng_seed,
        "acquisition": dataset.acquisition,
        "units": {"theta_rad": "rad", "counts": "events"},
    }
    csv_path.with_suffix(".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def read_counts(csv_path) -> CountsDataset:
    """Read a dataset written by ``write_counts``; rejects malformed counts."""
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != _COUNTS_HEADER:
            raise ValueError(
                f"unexpected counts header {header!r}, want {_COUNTS_HEADER!r}"
            )
        thetas, counts = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_COUNTS_HEADER):
                raise ValueError(f"{csv_path}:{lineno}: expected {len(_COUNTS_HEADER)} fields")
            thetas.append(float(row[0]))
            values = [int(v) for v in row[1:]]
            if any(v < 0 for v in values):
                raise ValueError(f"{csv_path}:{lineno}: negative count")
            counts.append(values)
    counts = np.asarray(counts, dtype=np.int64).reshape(len(thetas), len(PATTERNS))
    seed, acquisition = 0, None
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        seed = int(meta.get("seed", 0))
        acquisition = meta.get("acquisition")
    return CountsDataset(
        np.asarray(thetas), counts, counts.sum(axis=1), seed, acquisition
    )


# ---------------------------------------------------------------------------
# Fitting.

FIT_PARAM_NAMES = ("delta_z_um", "delta_lambda_nm", "background")


@dataclass(frozen=True)
class FitConfig:
    """Model space for fitting counts: what floats and what is held.

    ``free`` names any subset of FIT_PARAM_NAMES; every non-free parameter
    must appear in ``fixed``.  With ``per_outcome_background`` the flat
    background is replaced by one background weight per outcome (the five
    weights replace "background" in the free list internally).
    """

    lambda0_nm: float = 810.0
    l_c_um: float = 60.0
    free: tuple[str, ...] = ("delta_z_um", "background")
    fixed: dict = field(default_factory=lambda: {"delta_lambda_nm": 0.0})
    per_outcome_background: bool = False
    initial: dict | None = None
    max_restarts: int | None = None
    fatol: float = 1e-12
    xatol: float = 1e-8

    def __post_init__(self):
        for name in self.free:
            if name not in FIT_PARAM_NAMES:
                raise ValueError(f"unknown fit parameter {name!r}")
        missing = [
            n for n in FIT_PARAM_NAMES if n not in self.free and n not in self.fixed
        ]
        if missing:
            raise ValueError(f"parameters neither free nor fixed: {missing}")


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters plus bookkeeping from the simplex."""

    params: dict
    residual: float
    n_evaluations: int
    converged: bool
    config: FitConfig


_BG_KEYS = tuple("background_" + p for p in PATTERNS)


def _softplus(x: float) -> float:
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def _softplus_inv(y: float) -> float:
    y = max(y, 1e-9)
    if y > 1e-6:
        return y + math.log1p(-math.exp(-y))
    return math.log(math.expm1(y))


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _logit(p: float) -> float:
    p = min(max(p, 1e-9), 1.0 - 1e-9)
    return math.log(p / (1.0 - p))


class _ParamSpace:
    """Packs named physical parameters into an unconstrained vector."""

    def __init__(self, config: FitConfig):
        self.config = config
        names = []
        for name in config.free:
            if name == "background" and config.per_outcome_background:
                names.extend(_BG_KEYS)
            else:
                names.append(name)
        self.names = tuple(names)

    def pack(self, params: dict) -> np.ndarray:
        x = []
        for name in self.names:
            v = float(params[name])
            if name == "delta_z_um":
                x.append(_softplus_inv(max(v, 1e-6)))
            elif name == "background" or name in _BG_KEYS:
                x.append(_logit(v))
            else:
                x.append(v)
        return np.asarray(x)

    def unpack(self, x) -> dict:
        params = dict(self.config.fixed)
        for name, v in zip(self.names, x):
            if name == "delta_z_um":
                params[name] = _softplus(float(v))
            elif name == "background" or name in _BG_KEYS:
                params[name] = _logistic(float(v))
            else:
                params[name] = float(v)
        if self.config.per_outcome_background and _BG_KEYS[0] in params:
            params["background"] = sum(params[k] for k in _BG_KEYS)
        return params


def _model_frequencies(thetas, params: dict, config: FitConfig) -> np.ndarray:
    lab = LabParams(
        params.get("delta_z_um", 0.0),
        config.lambda0_nm,
        params.get("delta_lambda_nm", 0.0),
        config.l_c_um,
    )
    if config.per_outcome_background and _BG_KEYS[0] in params:
        bg = np.array([params[k] for k in _BG_KEYS])
        base = outcome_probabilities(lab, thetas, 0.0)
        return (1.0 - bg.sum()) * base + bg[None, :]
    return outcome_probabilities(lab, thetas, params.get("background", 0.0))


def _weights(freqs: np.ndarray, shots: np.ndarray) -> np.ndarray:
    # Inverse binomial variance with a 1/n^2 floor so structurally empty
    # cells still constrain the fit; zero-shot settings drop out entirely.
    n = shots[:, None].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.maximum(freqs * (1.0 - freqs) / n, 1.0 / (n * n))
        w = np.where(n > 0, 1.0 / var, 0.0)
    return w


def _minimize_with_restarts(objective, x0, config: FitConfig, what: str):
    n_dim = max(len(x0), 1)
    max_restarts = (
        config.max_restarts if config.max_restarts is not None else 10 * n_dim
    )
    options = {
        "xatol": config.xatol,
        "fatol": config.fatol,
        "maxiter": 600 * n_dim,
        "maxfev": 600 * n_dim,
    }
    best = None
    nfev = 0
    x_start = np.asarray(x0, dtype=float)
    for attempt in range(max_restarts + 1):
        res = optimize.minimize(objective, x_start, method="Nelder-Mead", options=options)
        nfev += int(res.nfev)
        if best is None or res.fun < best.fun:
            best = res
        if res.success:
            return best, nfev, True
        # Deterministic perturbation schedule: cycle the axes, shrink the step.
        step = 0.5 * 0.8 ** (attempt // n_dim)
        direction = np.zeros(n_dim)
        direction[attempt % n_dim] = step if attempt % 2 == 0 else -step
        x_start = np.asarray(best.x, dtype=float) + direction
    raise FitNotConverged(
        f"{what}: no convergence after {max_restarts} restarts "
        f"(best residual {best.fun:.3e})"
    )


def _initial_guess(data: CountsDataset, config: FitConfig, freqs, weights) -> dict:
    if config.initial is not None:
        guess = dict(config.fixed)
        guess.update(config.initial)
        return guess
    # Coarse scan over the free axes keeps the simplex out of the wrong
    # interference branch (the model is periodic in the path difference).
    dz_grid = (
        np.linspace(0.0, 2.0 * config.l_c_um, 33)
        if "delta_z_um" in config.free
        else [config.fixed["delta_z_um"]]
    )
    bg_grid = (0.005, 0.05) if "background" in config.free else (None,)
    best = None
    for dz in dz_grid:
        for b in bg_grid:
            trial = dict(config.fixed)
            trial.setdefault("delta_lambda_nm", 0.0)
            trial["delta_z_um"] = max(float(dz), 1e-6)
            if b is not None:
                trial["background"] = b
                for k in _BG_KEYS:
                    trial[k] = b / len(PATTERNS)
            model = _model_frequencies(data.settings, trial, config)
            score = float(np.sum(weights * (freqs - model) ** 2))
            if best is None or score < best[0]:
                best = (score, trial)
    return best[1]


def fit_counts(data: CountsDataset, config: FitConfig = FitConfig()) -> FitResult:
    """Weighted least-squares fit of the background-mixed interference model."""
    if data.n_settings == 0:
        raise DegenerateData("empty dataset")
    if np.unique(data.settings).size == 1:
        raise DegenerateData("all settings identical; nothing constrains the phase axis")
    space = _ParamSpace(config)
    if not space.names:
        raise ValueError("fit requires at least one free parameter")
    if data.n_settings < len(space.names):
        raise DegenerateData(
            f"{data.n_settings} settings cannot constrain {len(space.names)} parameters"
        )
    freqs = data.frequencies()
    weights = _weights(freqs, data.shots)

    def objective(x):
        params = space.unpack(x)
        model = _model_frequencies(data.settings, params, config)
        return float(np.sum(weights * (freqs - model) ** 2))

    guess = _initial_guess(data, config, freqs, weights)
    x0 = space.pack(guess)
    best, nfev, converged = _minimize_with_restarts(objective, x0, config, "counts fit")
    params = space.unpack(best.x)
    return FitResult(
        params=params,
        residual=float(best.fun),
        n_evaluations=nfev,
        converged=converged,
        config=config,
    )


def fisher_from_fit(fit: FitResult, phi_grid, include_background: bool = False) -> np.ndarray:
    """F(phi) evaluated on the fitted smooth model."""
    phi = np.asarray(phi_grid, dtype=float)
    config = fit.config
    lab = LabParams(
        fit.params.get("delta_z_um", 0.0),
        config.lambda0_nm,
        fit.params.get("delta_lambda_nm", 0.0),
        config.l_c_um,
    )
    e1 = indistinguishability(lab.packet_pair())
    p, dp, d2p = p4_terms(phi, e1)
    if include_background:
        b = fit.params.get("background", 0.0)
        p = (1.0 - b) * p + b / len(PATTERNS)
        dp = (1.0 - b) * dp
        d2p = (1.0 - b) * d2p
    values, _ = fisher_from_probabilities(p, dp, d2p)
    return values


# ---------------------------------------------------------------------------
# Two-photon Hong-Ou-Mandel dip.


def hom_dip_probability(delta_z_um, visibility, l_c_um, center_um=0.0):
    """Coincidence probability across the dip: (1 - V exp(-4 (dz-z0)^2 / l_c^2)) / 2."""
    x = (np.asarray(delta_z_um, dtype=float) - center_um) / l_c_um
    return 0.5 * (1.0 - visibility * np.exp(-4.0 * x * x))


def simulate_hom_dip(
    delta_z_grid, visibility, l_c_um, pairs_per_point: int, seed: int,
    center_um: float = 0.0,
):
    """Binomial coincidence counts across a path-difference scan."""
    dz = np.asarray(delta_z_grid, dtype=float)
    p = hom_dip_probability(dz, visibility, l_c_um, center_um)
    counts = np.zeros(dz.size, dtype=np.int64)
    for i in range(dz.size):
        counts[i] = _stream(seed, _DIP_STREAM, 0, i).binomial(int(pairs_per_point), p[i])
    shots = np.full(dz.size, int(pairs_per_point), dtype=np.int64)
    return counts, shots


@dataclass(frozen=True)
class HomDipFit:
    """Fitted dip parameters; visibility estimates the indistinguishability."""

    visibility: float
    dip_center_um: float
    l_c_um: float
    residual: float
    n_evaluations: int
    converged: bool


def hom_dip_fit(delta_z_um, coincidences, shots) -> HomDipFit:
    """Fit visibility, centre, and coherence length of a coincidence dip.

    The scan should span at least a coherence length on both sides of the
    dip, otherwise the width and the baseline trade against each other.
    """
    dz = np.asarray(delta_z_um, dtype=float)
    counts = np.asarray(coincidences, dtype=float)
    n = np.asarray(shots, dtype=float)
    if dz.size < 5:
        raise DegenerateData(f"need at least 5 scan points, got {dz.size}")
    if dz.size != counts.size or dz.size != n.size:
        raise ValueError("delta_z, coincidences, and shots must have equal length")
    if np.any(counts < 0) or np.any(n <= 0) or np.any(counts > n):
        raise ValueError("coincidence counts must satisfy 0 <= counts <= shots")
    rate = counts / n
    with np.errstate(divide="ignore"):
        var = np.maximum(rate * (1.0 - rate) / n, 1.0 / (n * n))
    w = 1.0 / var

    center0 = float(dz[np.argmin(rate)])
    v0 = min(max(1.0 - 2.0 * float(rate.min()), 1e-3), 1.0 - 1e-6)
    span = float(dz.max() - dz.min())
    depth = 0.5 - float(rate.min())
    below = dz[rate < 0.5 - 0.5 * depth]
    width0 = float(below.max() - below.min()) if below.size >= 2 else span / 4.0
    width0 = min(max(width0, span / 50.0), span)

    def unpack(x):
        return _logistic(x[0]), x[1], _softplus(x[2])

    def objective(x):
        v, z0, lc = unpack(x)
        model = hom_dip_probability(dz, v, lc, z0)
        return float(np.sum(w * (rate - model) ** 2))

    x0 = np.array([_logit(v0), center0, _softplus_inv(width0)])
    config = FitConfig()  # reuse the simplex tolerances and restart budget
    best, nfev, converged = _minimize_with_restarts(objective, x0, config, "dip fit")
    v, z0, lc = unpack(best.x)
    return HomDipFit(
        visibility=float(v),
        dip_center_um=float(z0),
        l_c_um=float(lc),
        residual=float(best.fun),
        n_evaluations=nfev,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Parametric bootstrap band for the fitted-model Fisher information.


@dataclass(frozen=True)
class FisherBand:
    """Pointwise bootstrap band for F(phi): mean +- one standard deviation."""

    phi_grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_resamples: int
    n_failed: int


_MIN_RESAMPLES = 100
_MAX_FAIL_FRACTION = 0.1


def mc_fisher_band(
    fit: FitResult,
    data: CountsDataset,
    n_resamples: int,
    phi_grid,
    seed: int,
    include_background: bool = False,
    threads: int = 1,
) -> FisherBand:
    """Bootstrap the fitted-model F(phi) by resampling and refitting counts.

    Resamples keep the dataset's per-setting shot totals and draw outcomes
    from the fitted observation model (background included, since that is
    what the detectors see).  Failed refits are dropped and counted; more
    than 10% failures aborts the band.
    """
    if n_resamples < _MIN_RESAMPLES:
        raise ValueError(f"need at least {_MIN_RESAMPLES} resamples, got {n_resamples}")
    phi = np.asarray(phi_grid, dtype=float)
    probs = _model_frequencies(data.settings, fit.params, fit.config)
    probs = probs / probs.sum(axis=1, keepdims=True)
    refit_config = FitConfig(
        lambda0_nm=fit.config.lambda0_nm,
        l_c_um=fit.config.l_c_um,
        free=fit.config.free,
        fixed=fit.config.fixed,
        per_outcome_background=fit.config.per_outcome_background,
        initial={k: fit.params[k] for k in _ParamSpace(fit.config).names},
        max_restarts=fit.config.max_restarts,
        fatol=fit.config.fatol,
        xatol=fit.config.xatol,
    )

    def one(r: int):
        counts = np.zeros_like(data.counts)
        for i in range(data.n_settings):
            counts[i] = _stream(seed, _BAND_STREAM, r, i).multinomial(
                int(data.shots[i]), probs[i]
            )
        resampled = CountsDataset(
            data.settings, counts, data.shots, int(seed), data.acquisition
        )
        try:
            refit = fit_counts(resampled, refit_config)
        except (FitNotConverged, DegenerateData):
            return None
        return fisher_from_fit(refit, phi, include_background)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n_resamples)))
    else:
        results = [one(r) for r in range(n_resamples)]

    curves = [r for r in results if r is not None]
    n_failed = n_resamples - len(curves)
    if n_failed > _MAX_FAIL_FRACTION * n_resamples:
        raise FitNotConverged(
            f"{n_failed}/{n_resamples} bootstrap refits failed to converge"
        )
    arr = np.asarray(curves)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1)
    return FisherBand(
        phi_grid=phi,
        mean=mean,
        std=std,
        lower=mean - std,
        upper=mean + std,
        n_resamples=n_resamples,
        n_failed=n_failed,
    )

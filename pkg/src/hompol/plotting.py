"""Figure rendering for the report paths of the command-line interface.

Everything draws through the Agg backend so the functions work headless;
each function writes one PNG and returns the path it wrote.  Figures are
deliberately plain: data, model overlays where available, axis labels in
the same units the delimited outputs use (rad, um).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150
_META = {"Software": "hompol"}

_MAP_PANELS = (("40", "P(4:0)"), ("31", "P(3:1)"), ("22", "P(2:2)"))
_PATTERN_LABELS = {
    "40": "P(4:0)", "04": "P(0:4)", "31": "P(3:1)", "13": "P(1:3)", "22": "P(2:2)",
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=_DPI, metadata=_META)
    plt.close(fig)
    return path


def plot_probability_map(phi_grid, delta_z_grid, probabilities: dict, path) -> Path:
    """Pattern probabilities over the (phi, delta_z) plane, one panel each.

    ``probabilities`` maps pattern labels to arrays of shape
    (len(delta_z_grid), len(phi_grid)); only the three distinct patterns
    are drawn (mirror patterns share the same surface).
    """
    fig, axes = plt.subplots(
        1, len(_MAP_PANELS), figsize=(12, 3.6), constrained_layout=True,
        sharey=True,
    )
    for ax, (pattern, label) in zip(axes, _MAP_PANELS):
        mesh = ax.pcolormesh(
            phi_grid, delta_z_grid, probabilities[pattern],
            shading="nearest", vmin=0.0, cmap="viridis",
        )
        ax.set_title(label)
        ax.set_xlabel(r"$\varphi$ [rad]")
        fig.colorbar(mesh, ax=ax)
    axes[0].set_ylabel(r"$\delta z$ [$\mu$m]")
    return _save(fig, path)


def plot_probability_cuts(phi_grid, cuts: dict, path) -> Path:
    """Fixed-delta_z cuts: one panel per cut, one curve per pattern.

    ``cuts`` maps a delta_z value to a dict of pattern label -> P(phi).
    """
    n = len(cuts)
    fig, axes = plt.subplots(
        1, n, figsize=(4.0 * n, 3.4), constrained_layout=True,
        sharey=True, squeeze=False,
    )
    for ax, (dz, curves) in zip(axes[0], sorted(cuts.items())):
        for pattern, values in curves.items():
            ax.plot(phi_grid, values, label=_PATTERN_LABELS.get(pattern, pattern))
        ax.set_title(rf"$\delta z = {dz:g}\,\mu$m")
        ax.set_xlabel(r"$\varphi$ [rad]")
        ax.set_ylim(0.0, 1.02)
    axes[0][0].set_ylabel("probability")
    axes[0][-1].legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def plot_fisher_map(phi_grid, delta_z_grid, fisher_values, path) -> Path:
    """Fisher information over the (phi, delta_z) plane."""
    fig, ax = plt.subplots(figsize=(5.4, 4.0), constrained_layout=True)
    mesh = ax.pcolormesh(
        phi_grid, delta_z_grid, fisher_values, shading="nearest",
        vmin=0.0, cmap="magma",
    )
    ax.set_xlabel(r"$\varphi$ [rad]")
    ax.set_ylabel(r"$\delta z$ [$\mu$m]")
    fig.colorbar(mesh, ax=ax, label=r"$F(\varphi)$")
    return _save(fig, path)


def plot_fisher_cuts(phi_grid, cuts: dict, path, references: dict | None = None) -> Path:
    """F(phi) at fixed delta_z values, with optional horizontal references.

    ``references`` maps a legend label to a constant level, e.g. the
    quantum bounds for perfect and vanishing overlap.
    """
    fig, ax = plt.subplots(figsize=(5.6, 3.8), constrained_layout=True)
    for dz, values in sorted(cuts.items()):
        ax.plot(phi_grid, values, label=rf"$\delta z = {dz:g}\,\mu$m")
    if references:
        for label, level in references.items():
            ax.axhline(level, color="0.4", linestyle="--", linewidth=0.9)
            ax.annotate(
                label, (phi_grid[0], level), textcoords="offset points",
                xytext=(2, 3), fontsize="x-small", color="0.3",
            )
    ax.set_xlabel(r"$\varphi$ [rad]")
    ax.set_ylabel(r"$F(\varphi)$")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def plot_hom_dip(delta_z_um, rates, fit, path) -> Path:
    """Measured coincidence rates with the fitted dip overlaid."""
    from .experiment import hom_dip_probability

    fig, ax = plt.subplots(figsize=(5.4, 3.6), constrained_layout=True)
    ax.plot(delta_z_um, rates, "o", ms=3.5, label="data")
    dz_fine = np.linspace(float(np.min(delta_z_um)), float(np.max(delta_z_um)), 400)
    model = hom_dip_probability(dz_fine, fit.visibility, fit.l_c_um, fit.dip_center_um)
    ax.plot(
        dz_fine, model, "-",
        label=rf"fit: $V={fit.visibility:.4f}$, $l_c={fit.l_c_um:.1f}\,\mu$m",
    )
    ax.set_xlabel(r"$\delta z$ [$\mu$m]")
    ax.set_ylabel("coincidence probability")
    ax.legend(loc="lower right", fontsize="small")
    return _save(fig, path)


def plot_counts_fit(settings, frequencies, model, path) -> Path:
    """Empirical outcome frequencies vs theta with the fitted model overlay.

    ``frequencies`` and ``model`` both have shape (n_settings, 5) in the
    order 40, 04, 31, 13, 22.
    """
    from .closedform import PATTERNS

    fig, ax = plt.subplots(figsize=(6.2, 4.0), constrained_layout=True)
    order = np.argsort(settings)
    theta = np.asarray(settings)[order]
    for j, pattern in enumerate(PATTERNS):
        line, = ax.plot(
            theta, np.asarray(frequencies)[order, j], "o", ms=3,
            label=_PATTERN_LABELS[pattern],
        )
        ax.plot(theta, np.asarray(model)[order, j], "-", color=line.get_color(), lw=1.0)
    ax.set_xlabel(r"$\theta$ [rad]")
    ax.set_ylabel("frequency")
    ax.legend(loc="upper right", fontsize="small", ncols=2)
    return _save(fig, path)


def plot_fisher_band(band, path, references: dict | None = None) -> Path:
    """Bootstrap mean of F(phi) with a one-standard-deviation band."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8), constrained_layout=True)
    ax.fill_between(band.phi_grid, band.lower, band.upper, alpha=0.3, label=r"$\pm 1\sigma$")
    ax.plot(band.phi_grid, band.mean, "-", lw=1.2, label="bootstrap mean")
    if references:
        for label, level in references.items():
            ax.axhline(level, color="0.4", linestyle="--", linewidth=0.9)
            ax.annotate(
                label, (band.phi_grid[0], level), textcoords="offset points",
                xytext=(2, 3), fontsize="x-small", color="0.3",
            )
    ax.set_xlabel(r"$\varphi$ [rad]")
    ax.set_ylabel(r"$F(\varphi)$")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)

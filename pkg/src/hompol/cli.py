"""Command-line interface: theory scans, simulated runs, fits, and bands.

Every subcommand reads one JSON config file, writes delimited output plus a
reproducibility sidecar into the output directory, and (unless --no-figures
is given) renders PNG figures next to the data.  Outputs are deterministic:
identical config, seed, and package version produce byte-identical files,
so runs can be diffed.  Unknown config keys are rejected rather than
ignored, since a typo that silently falls back to a default is the worst
failure mode a scan config can have.

Exit codes: 0 success, 1 invalid input values, 2 malformed config,
3 missing input file, 4 fit failure, 5 unexpected internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import (
    ANALYTIC,
    FINITE_DIFFERENCE,
    fisher,
    fisher_scan,
    qcrb,
    qfi_hb,
    qfi_partial,
)
from .closedform import PATTERNS, p4_terms
from .experiment import (
    DegenerateData,
    FitConfig,
    FitNotConverged,
    _model_frequencies,
    fisher_from_fit,
    fit_counts,
    hom_dip_fit,
    mc_fisher_band,
    outcome_probabilities,
    read_counts,
    simulate_counts,
    simulate_hom_dip,
    write_counts,
)
from .wavepacket import LabParams, indistinguishability

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_FIT = 4
EXIT_INTERNAL = 5


class ConfigError(ValueError):
    """The config file is malformed or violates the schema."""


_REQUIRED = object()


class _Section:
    """Strict view of one JSON object: every key must be consumed."""

    def __init__(self, data, where: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: expected a JSON object")
        self._data = data
        self._where = where
        self._seen = set()

    def take(self, key: str, default=_REQUIRED):
        self._seen.add(key)
        if key in self._data:
            return self._data[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self._where}: missing required key {key!r}")
        return default

    def number(self, key, default=_REQUIRED, minimum=None, maximum=None) -> float:
        v = self.take(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._where}.{key}: expected a number")
        v = float(v)
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self._where}.{key}: must be >= {minimum}, got {v:g}")
        if maximum is not None and v > maximum:
            raise ConfigError(f"{self._where}.{key}: must be <= {maximum}, got {v:g}")
        return v

    def integer(self, key, default=_REQUIRED, minimum=None) -> int:
        v = self.take(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._where}.{key}: expected an integer")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self._where}.{key}: must be >= {minimum}, got {v}")
        return int(v)

    def boolean(self, key, default=_REQUIRED) -> bool:
        v = self.take(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self._where}.{key}: expected true or false")
        return v

    def string(self, key, default=_REQUIRED, choices=None) -> str:
        v = self.take(key, default)
        if not isinstance(v, str):
            raise ConfigError(f"{self._where}.{key}: expected a string")
        if choices is not None and v not in choices:
            raise ConfigError(
                f"{self._where}.{key}: expected one of {sorted(choices)}, got {v!r}"
            )
        return v

    def number_list(self, key, default=_REQUIRED) -> list[float]:
        v = self.take(key, default)
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"{self._where}.{key}: expected a non-empty array of numbers")
        out = []
        for item in v:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ConfigError(f"{self._where}.{key}: expected numbers only")
            out.append(float(item))
        return out

    def section(self, key: str, required: bool = True) -> "_Section":
        v = self.take(key, _REQUIRED if required else None)
        if v is None:
            v = {}
        return _Section(v, f"{self._where}.{key}")

    def finish(self) -> None:
        unknown = sorted(set(self._data) - self._seen)
        if unknown:
            raise ConfigError(f"{self._where}: unknown keys {unknown}")


def _grid(sec: _Section, key: str, default: tuple[float, float, int]) -> np.ndarray:
    """Parse a {start, stop, num} object into a linspace grid."""
    raw = sec.take(key, None)
    if raw is None:
        start, stop, num = default
    else:
        g = _Section(raw, f"{sec._where}.{key}")
        start = g.number("start")
        stop = g.number("stop")
        num = g.integer("num", minimum=2)
        g.finish()
        if stop <= start:
            raise ConfigError(f"{sec._where}.{key}: stop must exceed start")
    return np.linspace(float(start), float(stop), int(num))


def _load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    return raw


def _lab_section(sec: _Section, with_delta_z: bool):
    """Lab parameters carry no defaults; a scan must state its hardware."""
    lab = sec.section("lab")
    delta_z = lab.number("delta_z_um", minimum=0.0) if with_delta_z else 0.0
    lambda0 = lab.number("lambda0_nm", minimum=1e-6)
    delta_lambda = lab.number("delta_lambda_nm")
    l_c = lab.number("l_c_um", minimum=1e-6)
    lab.finish()
    return LabParams(delta_z, lambda0, delta_lambda, l_c)


# ---------------------------------------------------------------------------
# Output helpers.


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans do not belong in numeric CSV output")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None  # unbounded values serialize as null
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _write_meta(out_dir: Path, command: str, config_raw: dict, args, outputs) -> None:
    canonical = json.dumps(config_raw, sort_keys=True, separators=(",", ":"))
    meta = {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "threads": args.threads,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "config": config_raw,
        "outputs": sorted(str(name) for name in outputs),
    }
    _write_json(out_dir / f"{command.replace('-', '_')}_meta.json", meta)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_data_path(config_path, name: str) -> Path:
    # Dataset paths resolve against the config file, so a config directory
    # can be moved as a unit.
    p = Path(name)
    if not p.is_absolute():
        p = Path(config_path).parent / p
    if not p.exists():
        raise FileNotFoundError(f"dataset not found: {p}")
    return p


def _dz_tag(dz: float) -> str:
    return format(float(dz), "g")


# ---------------------------------------------------------------------------
# Subcommands.


def _cmd_probmap(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    lab = _lab_section(sec, with_delta_z=False)
    phi_grid = _grid(sec, "phi_grid", (0.0, math.pi, 201))
    dz_grid = _grid(sec, "delta_z_grid", (0.0, 90.0, 91))
    cuts = sec.number_list("delta_z_cuts", [0.0, 30.0, 60.0])
    sec.finish()

    def pattern_rows(dz_values):
        rows = np.empty((len(PATTERNS), len(dz_values), phi_grid.size))
        for j, dz in enumerate(dz_values):
            e1 = indistinguishability(lab.with_delta_z(float(dz)).packet_pair())
            p, _, _ = p4_terms(phi_grid, e1)
            rows[:, j, :] = p
        return rows

    maps = pattern_rows(dz_grid)
    cut_vals = pattern_rows(cuts)

    out = _out_dir(args)
    outputs = []
    for k, pattern in enumerate(PATTERNS):
        name = f"p{pattern}_map.csv"
        _write_csv(
            out / name,
            ("phi_rad", "delta_z_um", "probability"),
            (
                (phi_grid[i], dz_grid[j], maps[k, j, i])
                for j in range(dz_grid.size)
                for i in range(phi_grid.size)
            ),
        )
        outputs.append(name)
        for j, dz in enumerate(cuts):
            name = f"p{pattern}_cut_dz{_dz_tag(dz)}.csv"
            _write_csv(
                out / name,
                ("phi_rad", "probability"),
                zip(phi_grid, cut_vals[k, j]),
            )
            outputs.append(name)

    if not args.no_figures:
        from . import plotting

        by_pattern = {p: maps[k] for k, p in enumerate(PATTERNS)}
        outputs.append(
            plotting.plot_probability_map(
                phi_grid, dz_grid, by_pattern, out / "probability_map.png"
            ).name
        )
        cut_curves = {
            dz: {p: cut_vals[k, j] for k, p in enumerate(PATTERNS) if p in ("40", "31", "22")}
            for j, dz in enumerate(cuts)
        }
        outputs.append(
            plotting.plot_probability_cuts(
                phi_grid, cut_curves, out / "probability_cuts.png"
            ).name
        )
    _write_meta(out, "probmap", raw, args, outputs)
    return EXIT_OK


def _cmd_fisher_scan(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    lab = _lab_section(sec, with_delta_z=False)
    phi_grid = _grid(sec, "phi_grid", (0.0, math.pi, 201))
    dz_grid = _grid(sec, "delta_z_grid", (0.0, 90.0, 91))
    cuts = sec.number_list("delta_z_cuts", [0.0, 20.0, 40.0, 60.0])
    method = sec.string("method", ANALYTIC, choices=(ANALYTIC, FINITE_DIFFERENCE))
    sec.finish()

    scan = fisher_scan(phi_grid, dz_grid, lab, method=method)
    out = _out_dir(args)
    outputs = ["fisher_map.csv"]
    _write_csv(
        out / "fisher_map.csv",
        ("phi_rad", "delta_z_um", "fisher"),
        (
            (phi_grid[i], dz_grid[j], scan.values[j, i])
            for j in range(dz_grid.size)
            for i in range(phi_grid.size)
        ),
    )

    cut_curves = {}
    summary_cuts = []
    for dz in cuts:
        pair = lab.with_delta_z(float(dz)).packet_pair()
        point = fisher(phi_grid / 4.0, pair, method=method)
        cut_curves[float(dz)] = point.fisher
        i_max = int(np.argmax(point.fisher))
        indist = indistinguishability(pair)
        half_pi = fisher(math.pi / 8.0, pair, method=method).fisher
        summary_cuts.append(
            {
                "delta_z_um": float(dz),
                "indistinguishability": indist,
                "qfi": qfi_partial(4, indist),
                "max_fisher": float(point.fisher[i_max]),
                "phi_at_max": float(phi_grid[i_max]),
                "fisher_at_half_pi": float(half_pi),
                "qcrb_at_max": qcrb(float(point.fisher[i_max])),
            }
        )
        name = f"fisher_cut_dz{_dz_tag(dz)}.csv"
        _write_csv(out / name, ("phi_rad", "fisher"), zip(phi_grid, point.fisher))
        outputs.append(name)

    _write_json(
        out / "fisher_summary.json",
        {"method": method, "qfi_perfect_overlap": qfi_hb(4), "cuts": summary_cuts},
    )
    outputs.append("fisher_summary.json")

    if not args.no_figures:
        from . import plotting

        outputs.append(
            plotting.plot_fisher_map(
                phi_grid, dz_grid, scan.values, out / "fisher_map.png"
            ).name
        )
        refs = {"quantum bound, I=1": qfi_hb(4), "quantum bound, I=0": 4.0}
        outputs.append(
            plotting.plot_fisher_cuts(
                phi_grid, cut_curves, out / "fisher_cuts.png", references=refs
            ).name
        )
    _write_meta(out, "fisher-scan", raw, args, outputs)
    return EXIT_OK


def _cmd_hom_dip(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    dip = sec.section("dip")
    visibility = dip.number("visibility", minimum=0.0, maximum=1.0)
    l_c = dip.number("l_c_um", minimum=1e-6)
    center = dip.number("center_um", 0.0)
    dip.finish()
    dz_grid = _grid(sec, "delta_z_grid", (-90.0, 90.0, 61))
    pairs = sec.integer("pairs_per_point", 5000, minimum=1)
    config_seed = sec.integer("seed", 0, minimum=0)
    seed = args.seed if args.seed is not None else config_seed
    sec.finish()

    counts, shots = simulate_hom_dip(dz_grid, visibility, l_c, pairs, seed, center)
    fit = hom_dip_fit(dz_grid, counts, shots)

    out = _out_dir(args)
    outputs = ["hom_dip.csv", "hom_dip_fit.json"]
    _write_csv(
        out / "hom_dip.csv",
        ("delta_z_um", "coincidences", "shots"),
        zip(dz_grid, counts, shots),
    )
    _write_json(
        out / "hom_dip_fit.json",
        {
            "visibility": fit.visibility,
            "dip_center_um": fit.dip_center_um,
            "l_c_um": fit.l_c_um,
            "indistinguishability_estimate": fit.visibility,
            "residual": fit.residual,
            "n_evaluations": fit.n_evaluations,
            "converged": fit.converged,
        },
    )

    if not args.no_figures:
        from . import plotting

        outputs.append(
            plotting.plot_hom_dip(
                dz_grid, counts / shots, fit, out / "hom_dip.png"
            ).name
        )
    _write_meta(out, "hom-dip", raw, args, outputs)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    lab = _lab_section(sec, with_delta_z=True)
    theta_grid = _grid(sec, "theta_grid", (0.0, math.pi / 4.0, 41))
    mean_events = sec.number("mean_events_per_setting", 1e5, minimum=1.0)
    background = sec.number("background", 0.0, minimum=0.0, maximum=0.999)
    config_seed = sec.integer("seed", 0, minimum=0)
    seed = args.seed if args.seed is not None else config_seed
    sec.finish()

    acquisition = {
        "background": background,
        "mean_events_per_setting": mean_events,
        "lab": {
            "delta_z_um": lab.delta_z_um,
            "lambda0_nm": lab.lambda0_nm,
            "delta_lambda_nm": lab.delta_lambda_nm,
            "l_c_um": lab.l_c_um,
        },
    }
    data = simulate_counts(lab, theta_grid, mean_events, seed, background, acquisition)
    out = _out_dir(args)
    write_counts(data, out / "counts.csv")
    outputs = ["counts.csv", "counts.json"]

    if not args.no_figures:
        from . import plotting

        model = outcome_probabilities(lab, theta_grid, background)
        outputs.append(
            plotting.plot_counts_fit(
                data.settings, data.frequencies(), model, out / "counts.png"
            ).name
        )
    _write_meta(out, "simulate", raw, args, outputs)
    return EXIT_OK


def _model_section(sec: _Section) -> FitConfig:
    model = sec.section("model")
    lambda0 = model.number("lambda0_nm", minimum=1e-6)
    l_c = model.number("l_c_um", minimum=1e-6)
    free_raw = model.take("free", ["delta_z_um", "background"])
    if not isinstance(free_raw, list) or not all(isinstance(n, str) for n in free_raw):
        raise ConfigError("config.model.free: expected an array of parameter names")
    fixed_raw = model.take("fixed", {"delta_lambda_nm": 0.0})
    if not isinstance(fixed_raw, dict):
        raise ConfigError("config.model.fixed: expected an object")
    fixed = {}
    for k, v in fixed_raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"config.model.fixed.{k}: expected a number")
        fixed[k] = float(v)
    per_outcome = model.boolean("per_outcome_background", False)
    model.finish()
    try:
        return FitConfig(
            lambda0_nm=lambda0,
            l_c_um=l_c,
            free=tuple(free_raw),
            fixed=fixed,
            per_outcome_background=per_outcome,
        )
    except ValueError as exc:
        raise ConfigError(f"config.model: {exc}") from exc


def _fit_payload(fit) -> dict:
    return {
        "params": dict(fit.params),
        "residual": fit.residual,
        "n_evaluations": fit.n_evaluations,
        "converged": fit.converged,
        "model": {
            "lambda0_nm": fit.config.lambda0_nm,
            "l_c_um": fit.config.l_c_um,
            "free": list(fit.config.free),
            "fixed": dict(fit.config.fixed),
            "per_outcome_background": fit.config.per_outcome_background,
        },
    }


def _cmd_fit(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    data_name = sec.string("data_csv")
    config = _model_section(sec)
    sec.finish()

    data = read_counts(_resolve_data_path(args.config, data_name))
    fit = fit_counts(data, config)
    out = _out_dir(args)
    _write_json(out / "fit_result.json", _fit_payload(fit))
    outputs = ["fit_result.json"]

    if not args.no_figures:
        from . import plotting

        model = _model_frequencies(data.settings, fit.params, config)
        outputs.append(
            plotting.plot_counts_fit(
                data.settings, data.frequencies(), model, out / "counts_fit.png"
            ).name
        )
    _write_meta(out, "fit", raw, args, outputs)
    return EXIT_OK


def _cmd_mc_band(args) -> int:
    raw = _load_config(args.config)
    sec = _Section(raw, "config")
    data_name = sec.string("data_csv")
    config = _model_section(sec)
    phi_grid = _grid(sec, "phi_grid", (0.0, math.pi, 101))
    n_resamples = sec.integer("n_resamples", 100, minimum=100)
    include_background = sec.boolean("include_background", False)
    config_seed = sec.integer("seed", 0, minimum=0)
    seed = args.seed if args.seed is not None else config_seed
    sec.finish()

    data = read_counts(_resolve_data_path(args.config, data_name))
    fit = fit_counts(data, config)
    band = mc_fisher_band(
        fit, data, n_resamples, phi_grid, seed,
        include_background=include_background, threads=args.threads,
    )

    out = _out_dir(args)
    outputs = ["fisher_band.csv", "fisher_band.json"]
    _write_csv(
        out / "fisher_band.csv",
        ("phi_rad", "fisher_mean", "fisher_std", "fisher_lower", "fisher_upper"),
        zip(band.phi_grid, band.mean, band.std, band.lower, band.upper),
    )
    i_max = int(np.argmax(band.mean))
    fitted_curve = fisher_from_fit(fit, phi_grid, include_background)
    _write_json(
        out / "fisher_band.json",
        {
            "fit": _fit_payload(fit),
            "n_resamples": band.n_resamples,
            "n_failed": band.n_failed,
            "include_background": include_background,
            "max_mean_fisher": float(band.mean[i_max]),
            "phi_at_max": float(band.phi_grid[i_max]),
            "std_at_max": float(band.std[i_max]),
            "max_fitted_fisher": float(np.max(fitted_curve)),
        },
    )

    if not args.no_figures:
        from . import plotting

        refs = {"quantum bound, I=1": qfi_hb(4), "quantum bound, I=0": 4.0}
        outputs.append(
            plotting.plot_fisher_band(band, out / "fisher_band.png", references=refs).name
        )
    _write_meta(out, "mc-band", raw, args, outputs)
    return EXIT_OK


_COMMANDS = {
    "probmap": _cmd_probmap,
    "fisher-scan": _cmd_fisher_scan,
    "hom-dip": _cmd_hom_dip,
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "mc-band": _cmd_mc_band,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hompol",
        description="Four-photon polarization interferometry: scans, fits, bands.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "probmap": "pattern probability maps and cuts over (phi, delta_z)",
        "fisher-scan": "Fisher information map, cuts, and summary",
        "hom-dip": "simulate and fit a two-photon coincidence dip",
        "simulate": "draw four-photon counting data from the model",
        "fit": "fit the interference model to a counts CSV",
        "mc-band": "bootstrap uncertainty band for the fitted Fisher information",
    }
    for name, help_text in helps.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for resampling")
        p.add_argument(
            "--no-figures", action="store_true", help="skip PNG rendering, write data only"
        )
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (FitNotConverged, DegenerateData) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()

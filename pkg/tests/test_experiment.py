"""Simulated counting runs, model fits, dip fits, and bootstrap bands.

Statistical assertions run on fixed seeds, so they are deterministic; the
tolerances are set from the binomial scales involved, not tuned to the
specific draws.
"""

import math

import numpy as np
import pytest

from hompol.experiment import (
    PATTERN_COLUMNS,
    CountsDataset,
    DegenerateData,
    FitConfig,
    FitNotConverged,
    fisher_from_fit,
    fit_counts,
    hom_dip_fit,
    hom_dip_probability,
    mc_fisher_band,
    outcome_probabilities,
    read_counts,
    simulate_counts,
    simulate_hom_dip,
    write_counts,
)
from hompol.wavepacket import LabParams

LAB = LabParams(10.0, 810.0, 0.0, 60.0)
THETAS = np.linspace(0.0, math.pi / 4, 21)


class TestSimulation:
    def test_same_seed_reproduces(self):
        a = simulate_counts(LAB, THETAS, 1e4, seed=5, background=0.02)
        b = simulate_counts(LAB, THETAS, 1e4, seed=5, background=0.02)
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(a.shots, b.shots)

    def test_different_seed_differs(self):
        a = simulate_counts(LAB, THETAS, 1e4, seed=5)
        b = simulate_counts(LAB, THETAS, 1e4, seed=6)
        assert not np.array_equal(a.counts, b.counts)

    def test_counts_track_model_probabilities(self):
        data = simulate_counts(LAB, THETAS, 1e5, seed=12, background=0.02)
        probs = outcome_probabilities(LAB, THETAS, 0.02)
        freqs = data.frequencies()
        sigma = np.sqrt(probs * (1 - probs) / data.shots[:, None])
        pulls = np.abs(freqs - probs) / np.maximum(sigma, 1e-6)
        # 105 cells; allow rare 4-sigma excursions but no gross failures
        assert np.mean(pulls < 4.0) > 0.99
        assert np.max(pulls) < 6.0

    def test_forbidden_outcome_never_fires_at_full_overlap(self):
        lab = LabParams(0.0, 810.0, 0.0, 60.0)
        data = simulate_counts(lab, np.array([math.pi / 8]), 1e6, seed=3)
        i31 = PATTERN_COLUMNS.index("n31")
        i13 = PATTERN_COLUMNS.index("n13")
        assert data.counts[0, i31] == 0
        assert data.counts[0, i13] == 0

    def test_background_mixes_flat(self):
        lab = LabParams(0.0, 810.0, 0.0, 60.0)
        probs = outcome_probabilities(lab, np.array([math.pi / 8]), 0.5)
        # P(3:1) = 0 under the model, so everything there is background
        assert probs[0, 2] == pytest.approx(0.1, abs=1e-12)
        assert probs[0].sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_bad_background(self):
        with pytest.raises(ValueError):
            outcome_probabilities(LAB, THETAS, -0.1)
        with pytest.raises(ValueError):
            outcome_probabilities(LAB, THETAS, 1.0)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            CountsDataset(
                np.array([0.1]), np.array([[1, 2, 3, 4, -1]]), np.array([9]), 0
            )
        with pytest.raises(ValueError):
            CountsDataset(
                np.array([0.1]), np.array([[1, 2, 3, 4, 5]]), np.array([14]), 0
            )

    def test_zero_shot_frequencies_are_zero(self):
        data = CountsDataset(
            np.array([0.1]), np.zeros((1, 5), dtype=np.int64), np.array([0]), 0
        )
        assert np.all(data.frequencies() == 0.0)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        data = simulate_counts(LAB, THETAS, 1e3, seed=9, background=0.01,
                               acquisition={"note": "round trip"})
        path = tmp_path / "counts.csv"
        write_counts(data, path)
        back = read_counts(path)
        assert np.array_equal(back.counts, data.counts)
        np.testing.assert_allclose(back.settings, data.settings, rtol=0, atol=0)
        assert back.rng_seed == 9
        assert back.acquisition == {"note": "round trip"}

    def test_rejects_negative_counts(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "theta_rad,n40,n04,n31,n13,n22\n0.1,5,5,-1,5,5\n"
        )
        with pytest.raises(ValueError, match="negative"):
            read_counts(path)

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("theta,n40,n04,n31,n13,n22\n0.1,1,1,1,1,1\n")
        with pytest.raises(ValueError, match="header"):
            read_counts(path)

    def test_missing_sidecar_defaults(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("theta_rad,n40,n04,n31,n13,n22\n0.1,1,1,1,1,1\n")
        data = read_counts(path)
        assert data.rng_seed == 0
        assert data.acquisition is None
        assert data.shots[0] == 5


class TestFit:
    def test_recovers_simulation_truth(self):
        data = simulate_counts(LAB, np.linspace(0, math.pi / 4, 41), 1e5,
                               seed=7, background=0.02)
        fit = fit_counts(data)
        assert fit.converged
        assert fit.params["delta_z_um"] == pytest.approx(10.0, abs=0.5)
        assert fit.params["background"] == pytest.approx(0.02, abs=0.005)
        assert fit.params["delta_lambda_nm"] == 0.0

    def test_error_shrinks_with_more_events(self):
        errors = []
        for mean_events in (1e3, 1e4, 1e5):
            errs = []
            for seed in range(12):
                data = simulate_counts(LAB, THETAS, mean_events, seed=100 + seed,
                                       background=0.02)
                fit = fit_counts(data)
                errs.append(abs(fit.params["delta_z_um"] - 10.0))
            errors.append(float(np.mean(errs)))
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.3

    def test_respects_fixed_parameters(self):
        data = simulate_counts(LAB, THETAS, 1e4, seed=15, background=0.0)
        config = FitConfig(
            free=("background",),
            fixed={"delta_z_um": 10.0, "delta_lambda_nm": 0.0},
        )
        fit = fit_counts(data, config)
        assert fit.params["delta_z_um"] == 10.0
        assert fit.params["background"] < 0.01

    def test_per_outcome_background(self):
        data = simulate_counts(LAB, np.linspace(0, math.pi / 4, 41), 1e5,
                               seed=21, background=0.05)
        config = FitConfig(per_outcome_background=True)
        fit = fit_counts(data, config)
        assert fit.params["delta_z_um"] == pytest.approx(10.0, abs=1.0)
        for pattern in ("40", "04", "31", "13", "22"):
            assert fit.params[f"background_{pattern}"] == pytest.approx(0.01, abs=0.01)
        assert fit.params["background"] == pytest.approx(0.05, abs=0.02)

    def test_warm_start_initial(self):
        data = simulate_counts(LAB, THETAS, 1e4, seed=30, background=0.02)
        config = FitConfig(initial={"delta_z_um": 10.5, "background": 0.02})
        fit = fit_counts(data, config)
        assert fit.params["delta_z_um"] == pytest.approx(10.0, abs=1.0)

    def test_empty_dataset_rejected(self):
        data = CountsDataset(
            np.zeros(0), np.zeros((0, 5), dtype=np.int64), np.zeros(0, dtype=np.int64), 0
        )
        with pytest.raises(DegenerateData):
            fit_counts(data)

    def test_identical_settings_rejected(self):
        data = simulate_counts(LAB, np.full(8, math.pi / 16), 1e3, seed=2)
        with pytest.raises(DegenerateData):
            fit_counts(data)

    def test_too_few_settings_rejected(self):
        data = simulate_counts(LAB, np.array([0.1, 0.2, 0.3]), 1e3, seed=2)
        with pytest.raises(DegenerateData):
            fit_counts(data, FitConfig(per_outcome_background=True))

    def test_no_free_parameters_rejected(self):
        data = simulate_counts(LAB, THETAS, 1e3, seed=2)
        config = FitConfig(
            free=(),
            fixed={"delta_z_um": 10.0, "delta_lambda_nm": 0.0, "background": 0.0},
        )
        with pytest.raises(ValueError, match="free parameter"):
            fit_counts(data, config)

    def test_config_requires_coverage(self):
        with pytest.raises(ValueError, match="neither free nor fixed"):
            FitConfig(free=("delta_z_um",), fixed={})
        with pytest.raises(ValueError, match="unknown fit parameter"):
            FitConfig(free=("visibility",))


class TestFisherFromFit:
    def test_matches_direct_evaluation(self):
        data = simulate_counts(LAB, np.linspace(0, math.pi / 4, 41), 1e5, seed=7,
                               background=0.02)
        fit = fit_counts(data)
        phi = np.linspace(0.0, math.pi, 51)
        from hompol.estimation import fisher as fisher_direct

        lab_fit = LabParams(fit.params["delta_z_um"], 810.0, 0.0, 60.0)
        direct = fisher_direct(phi / 4.0, lab_fit.packet_pair()).fisher
        np.testing.assert_allclose(fisher_from_fit(fit, phi), direct, rtol=1e-12)

    def test_background_inclusion_changes_the_curve(self):
        data = simulate_counts(LAB, np.linspace(0, math.pi / 4, 41), 1e5, seed=7,
                               background=0.05)
        fit = fit_counts(data)
        phi = np.linspace(0.0, math.pi, 51)
        clean = fisher_from_fit(fit, phi)
        noisy = fisher_from_fit(fit, phi, include_background=True)
        assert np.all(np.isfinite(noisy))
        # flat background washes out the interference, lowering the peak
        assert noisy.max() < clean.max()


class TestHomDip:
    DZ = np.linspace(-90.0, 90.0, 61)

    def test_probability_shape(self):
        p = hom_dip_probability(self.DZ, 0.998, 60.0)
        assert p.min() == pytest.approx(0.001, abs=1e-12)
        assert p[0] == pytest.approx(0.5, abs=1e-4)

    def test_recovers_visibility(self):
        counts, shots = simulate_hom_dip(self.DZ, 0.998, 60.0, 2000, seed=3)
        fit = hom_dip_fit(self.DZ, counts, shots)
        assert fit.converged
        assert fit.visibility == pytest.approx(0.998, abs=0.005)
        assert fit.l_c_um == pytest.approx(60.0, rel=0.05)
        assert fit.dip_center_um == pytest.approx(0.0, abs=2.0)

    def test_recovers_offset_center(self):
        counts, shots = simulate_hom_dip(self.DZ, 0.9, 60.0, 2000, seed=4,
                                         center_um=10.0)
        fit = hom_dip_fit(self.DZ, counts, shots)
        assert fit.dip_center_um == pytest.approx(10.0, abs=2.0)

    def test_no_dip_gives_zero_visibility(self):
        counts, shots = simulate_hom_dip(self.DZ, 0.0, 60.0, 2000, seed=5)
        fit = hom_dip_fit(self.DZ, counts, shots)
        assert fit.visibility == pytest.approx(0.0, abs=0.02)

    def test_deterministic(self):
        a, _ = simulate_hom_dip(self.DZ, 0.5, 60.0, 500, seed=8)
        b, _ = simulate_hom_dip(self.DZ, 0.5, 60.0, 500, seed=8)
        assert np.array_equal(a, b)

    def test_rejects_degenerate_scan(self):
        with pytest.raises(DegenerateData):
            hom_dip_fit(np.array([0.0, 1.0]), np.array([1, 1]), np.array([4, 4]))

    def test_rejects_impossible_counts(self):
        dz = np.linspace(-10, 10, 7)
        with pytest.raises(ValueError):
            hom_dip_fit(dz, np.full(7, 5), np.full(7, 4))


class TestFisherBand:
    def test_distinguishable_band_pins_four(self):
        lab = LabParams(120.0, 810.0, 0.0, 60.0)
        thetas = np.linspace(0.0, math.pi / 4, 41)
        data = simulate_counts(lab, thetas, 1e5, seed=11, background=0.02)
        fit = fit_counts(data)
        band = mc_fisher_band(fit, data, 100, np.linspace(0, math.pi, 51), seed=5)
        i = int(np.argmax(band.mean))
        assert band.mean[i] == pytest.approx(4.0, abs=0.01)
        assert band.std.max() < 0.01
        assert band.n_failed == 0
        np.testing.assert_allclose(band.lower, band.mean - band.std)
        np.testing.assert_allclose(band.upper, band.mean + band.std)

    def test_band_spread_calibrated_against_ensemble(self):
        # The bootstrap sigma of the peak F should match the spread of the
        # peak across independently simulated datasets within a factor ~2.
        thetas = np.linspace(0.0, math.pi / 4, 21)
        phi = np.linspace(0.0, math.pi, 26)
        peaks = []
        for seed in range(40):
            data = simulate_counts(LAB, thetas, 1e4, seed=500 + seed, background=0.02)
            fit = fit_counts(data)
            peaks.append(float(fisher_from_fit(fit, phi).max()))
        ensemble_std = float(np.std(peaks, ddof=1))

        data = simulate_counts(LAB, thetas, 1e4, seed=500, background=0.02)
        fit = fit_counts(data)
        band = mc_fisher_band(fit, data, 150, phi, seed=77)
        boot_std = float(band.std[int(np.argmax(band.mean))])
        assert 0.5 * ensemble_std < boot_std < 2.0 * ensemble_std

    def test_resample_count_floor(self):
        data = simulate_counts(LAB, THETAS, 1e3, seed=1)
        fit = fit_counts(data)
        with pytest.raises(ValueError, match="resamples"):
            mc_fisher_band(fit, data, 50, np.linspace(0, math.pi, 11), seed=1)

    def test_threaded_band_matches_serial(self):
        data = simulate_counts(LAB, THETAS, 5e3, seed=19, background=0.01)
        fit = fit_counts(data)
        phi = np.linspace(0.0, math.pi, 11)
        serial = mc_fisher_band(fit, data, 100, phi, seed=23, threads=1)
        threaded = mc_fisher_band(fit, data, 100, phi, seed=23, threads=4)
        np.testing.assert_allclose(serial.mean, threaded.mean, rtol=0, atol=0)
        np.testing.assert_allclose(serial.std, threaded.std, rtol=0, atol=0)

    def test_band_seed_changes_resamples_not_fit(self):
        data = simulate_counts(LAB, THETAS, 5e3, seed=19, background=0.01)
        fit = fit_counts(data)
        phi = np.linspace(0.0, math.pi, 11)
        a = mc_fisher_band(fit, data, 100, phi, seed=1)
        b = mc_fisher_band(fit, data, 100, phi, seed=2)
        assert not np.array_equal(a.mean, b.mean)
        assert a.mean == pytest.approx(b.mean, rel=0.05)

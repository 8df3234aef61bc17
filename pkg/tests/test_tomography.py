import math

import numpy as np
import pytest

from bellwire import qlinalg as ql
from bellwire.qlinalg import DensityMatrix, matrices_close, phi_plus_state, werner_state
from bellwire.tomography import (
    SETTINGS,
    TomographyCounts,
    exact_tomography_expectations,
    fidelity_to_bell_state,
    reconstruct_density,
    synthesize_tomography_counts,
    visibility_curve,
)

THETA2 = [i * math.pi / 24 for i in range(25)]


def random_two_qubit_state(rng: np.random.Generator) -> DensityMatrix:
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


class TestSynthesis:
    def test_phi_plus_zz_has_no_anticorrelated_outcomes(self):
        counts = synthesize_tomography_counts(DensityMatrix(phi_plus_state()), 20000, seed=1)
        table = counts.counts[("z", "z")]
        assert table[0, 1] == 0
        assert table[1, 0] == 0
        assert table[0, 0] + table[1, 1] == 20000

    def test_maximally_mixed_is_uniform(self):
        rho = DensityMatrix(np.eye(4, dtype=complex) / 4)
        counts = synthesize_tomography_counts(rho, 40000, seed=2)
        for table in counts.counts.values():
            assert np.all(np.abs(table - 10000) < 500)

    def test_same_seed_identical(self):
        rho = DensityMatrix(werner_state(0.8))
        a = synthesize_tomography_counts(rho, 1000, seed=3)
        b = synthesize_tomography_counts(rho, 1000, seed=3)
        for s in SETTINGS:
            assert np.array_equal(a.counts[s], b.counts[s])

    def test_counts_validated(self):
        good = synthesize_tomography_counts(DensityMatrix(phi_plus_state()), 100, seed=4)
        bad = dict(good.counts)
        bad[("z", "z")] = np.array([[1, 0], [0, 0]])
        with pytest.raises(ValueError):
            TomographyCounts(counts=bad, shots=100)


class TestReconstruction:
    def test_exact_phi_plus(self):
        rho = reconstruct_density(exact_tomography_expectations(DensityMatrix(phi_plus_state())))
        assert matrices_close(rho.matrix, phi_plus_state(), 1e-10)

    def test_exact_werner(self):
        target = werner_state(0.9)
        rho = reconstruct_density(exact_tomography_expectations(DensityMatrix(target)))
        assert matrices_close(rho.matrix, target, 1e-10)

    def test_exact_round_trip_on_random_states(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            target = random_two_qubit_state(rng)
            rho = reconstruct_density(exact_tomography_expectations(target))
            assert matrices_close(rho.matrix, target.matrix, 1e-9)

    def test_finite_shots_phi_plus_high_fidelity(self):
        counts = synthesize_tomography_counts(DensityMatrix(phi_plus_state()), 10**6, seed=6)
        rho = reconstruct_density(counts)
        assert fidelity_to_bell_state(rho) >= 0.997

    def test_reconstruction_always_a_valid_state(self):
        # tiny shot counts force negative linear-inversion eigenvalues
        rng = np.random.default_rng(7)
        for seed in range(10):
            target = random_two_qubit_state(rng)
            counts = synthesize_tomography_counts(target, 50, seed=seed)
            rho = reconstruct_density(counts)  # DensityMatrix validates PSD/trace
            assert np.trace(rho.matrix).real == pytest.approx(1.0)

    def test_missing_setting_rejected(self):
        data = exact_tomography_expectations(DensityMatrix(phi_plus_state()))
        del data[("x", "y")]
        with pytest.raises(ValueError):
            reconstruct_density(data)


class TestFidelity:
    def test_phi_plus_is_unit(self):
        assert fidelity_to_bell_state(DensityMatrix(phi_plus_state())) == pytest.approx(1.0)

    def test_maximally_mixed_quarter(self):
        rho = DensityMatrix(np.eye(4, dtype=complex) / 4)
        assert fidelity_to_bell_state(rho) == pytest.approx(0.25)

    def test_werner_closed_form(self):
        for v in (0.0, 0.3, 0.7, 0.987, 1.0):
            rho = DensityMatrix(werner_state(v))
            assert fidelity_to_bell_state(rho) == pytest.approx((1 + 3 * v) / 4, abs=1e-12)

    def test_published_regime(self):
        assert fidelity_to_bell_state(DensityMatrix(werner_state(0.987))) == pytest.approx(
            0.99025
        )


class TestVisibility:
    def test_phi_plus_hv_curve(self):
        curve = visibility_curve(DensityMatrix(phi_plus_state()), 0.0, THETA2)
        assert curve.visibility == pytest.approx(1.0, abs=1e-9)
        expected = 0.5 * np.cos(np.asarray(THETA2)) ** 2
        assert np.max(np.abs(curve.rate - expected)) < 1e-12

    def test_werner_visibility_equals_mixing(self):
        for v in (0.5, 0.9, 0.9956):
            curve = visibility_curve(DensityMatrix(werner_state(v)), 0.0, THETA2)
            assert curve.visibility == pytest.approx(v, abs=1e-9)

    def test_diagonal_basis_curve(self):
        curve = visibility_curve(DensityMatrix(werner_state(0.9818)), math.pi / 4, THETA2)
        assert curve.visibility == pytest.approx(0.9818, abs=1e-9)

    def test_scale_invariance(self):
        rho = DensityMatrix(werner_state(0.8))
        curve = visibility_curve(rho, 0.0, THETA2)
        scaled = np.linalg.lstsq(
            np.column_stack(
                [np.ones(len(THETA2)), np.cos(2 * np.array(THETA2)), np.sin(2 * np.array(THETA2))]
            ),
            7.5 * curve.rate,
            rcond=None,
        )[0]
        assert math.hypot(scaled[1], scaled[2]) / scaled[0] == pytest.approx(
            curve.visibility, abs=1e-12
        )

    def test_flat_curve_flagged(self):
        rho = DensityMatrix(np.eye(4, dtype=complex) / 4)
        curve = visibility_curve(rho, 0.0, THETA2)
        assert curve.degenerate is True
        assert curve.visibility == 0.0

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            visibility_curve(DensityMatrix(phi_plus_state()), 0.0, [0.0, 1.0])

import math

import numpy as np
import pytest

from radcode import (
    DegenerateCodeError,
    FullFim,
    crb_from_full_fim,
    crb_pair,
    default_scenario,
    full_fim,
    model_matrices,
    p3_code,
    sample_chirp,
)
from radcode.validation import finite_difference_fim, random_unit_code

from conftest import random_unit


class TestCrbPair:
    def test_amplitude_scaling_halves_both_entries(self, mats, p3):
        low = crb_pair(p3, mats, default_scenario())
        high = crb_pair(p3, mats, default_scenario(amplitude_power=2e-2))
        assert high.crb_tau == pytest.approx(low.crb_tau / 2, rel=1e-12)
        assert high.crb_fd == pytest.approx(low.crb_fd / 2, rel=1e-12)

    def test_det_is_product(self, mats, scenario, p3):
        pair = crb_pair(p3, mats, scenario)
        assert pair.det == pytest.approx(pair.crb_tau * pair.crb_fd, rel=1e-12)

    def test_first_pulse_only_code_is_degenerate(self, mats, scenario):
        c = np.zeros(32, dtype=complex)
        c[0] = 1.0  # zero Doppler-derivative weight on pulse 0
        with pytest.raises(DegenerateCodeError):
            crb_pair(c, mats, scenario)

    def test_agrees_with_full_fim_schur(self, mats, scenario, p3):
        closed = crb_pair(p3, mats, scenario)
        schur = crb_from_full_fim(full_fim(p3, scenario, mats)).crb
        assert closed.crb_tau == pytest.approx(schur.crb_tau, rel=0.02)
        assert closed.crb_fd == pytest.approx(schur.crb_fd, rel=0.02)

    def test_det_amplitude_quartic_scaling(self, mats, p3):
        # det carries 1/|alpha|^4, i.e. the squared reciprocal of the power
        base = crb_pair(p3, mats, default_scenario())
        boosted = crb_pair(p3, mats, default_scenario(amplitude_power=3e-2))
        assert boosted.det == pytest.approx(base.det / 9.0, rel=1e-12)

    def test_doppler_entry_phase_invariant(self, mats, scenario, p3):
        base = crb_pair(p3, mats, scenario)
        rotated = crb_pair(np.exp(1j * 0.8) * p3.entries, mats, scenario)
        assert rotated.crb_fd == pytest.approx(base.crb_fd, rel=1e-12)


class TestSampleChirp:
    def test_unit_modulus_energy(self, scenario):
        chirp = sample_chirp(scenario)
        assert np.vdot(chirp.s, chirp.s).real == pytest.approx(100.0, abs=1e-10)

    def test_derivative_energy_near_continuous_limit(self, scenario):
        chirp = sample_chirp(scenario)
        expected = math.pi ** 2 * scenario.bandwidth ** 2 * scenario.fast_samples / 3.0
        assert np.vdot(chirp.s_dot, chirp.s_dot).real == pytest.approx(expected, rel=0.02)

    def test_derivative_nearly_orthogonal_to_chirp(self, scenario):
        chirp = sample_chirp(scenario)
        cross = abs(np.vdot(chirp.s_dot, chirp.s))
        bound = 0.02 * np.linalg.norm(chirp.s_dot) * np.linalg.norm(chirp.s)
        assert cross <= bound


class TestFullFim:
    def test_identity_covariance_amplitude_block(self):
        scenario = default_scenario(interference=np.eye(32, dtype=complex),
                                    normalized_doppler=0.0)
        mats = model_matrices(scenario)
        rng = np.random.default_rng(2)
        c = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        fim = full_fim(c, scenario, mats, alpha=0.1).matrix
        energy = np.vdot(c, c).real
        expected = 2.0 * 100.0 * energy
        np.testing.assert_allclose(fim[:2, :2], expected * np.eye(2), rtol=1e-12)

    def test_symmetric_and_psd(self, mats, scenario):
        rng = np.random.default_rng(4)
        for _ in range(5):
            fim = full_fim(random_unit(rng, 32), scenario, mats).matrix
            assert np.abs(fim - fim.T).max() <= 1e-10 * np.abs(fim).max()
            eigs = np.linalg.eigvalsh(fim)
            assert eigs.min() >= -1e-8 * eigs.max()

    def test_finite_difference_oracle(self, mats, scenario):
        alpha = complex(math.sqrt(scenario.amplitude_power))
        for seed in range(3):
            c = random_unit_code(np.random.default_rng(seed), 32)
            analytic = full_fim(c, scenario, mats, alpha=alpha).matrix
            numeric = finite_difference_fim(c, scenario, mats, alpha)
            assert np.abs(analytic - numeric).max() <= 1e-4 * np.abs(analytic).max()

    def test_complex_alpha_supported(self, mats, scenario):
        alpha = 0.1 * np.exp(1j * 1.1)
        c = random_unit_code(np.random.default_rng(9), 32)
        analytic = full_fim(c, scenario, mats, alpha=alpha).matrix
        numeric = finite_difference_fim(c, scenario, mats, alpha)
        assert np.abs(analytic - numeric).max() <= 1e-4 * np.abs(analytic).max()


class TestCrbFromFullFim:
    def test_schur_offdiagonal_small_for_p3(self, mats, scenario, p3):
        schur = crb_from_full_fim(full_fim(p3, scenario, mats))
        info = schur.info_matrix
        assert abs(info[0, 1]) <= 0.02 * math.sqrt(info[0, 0] * info[1, 1])

    def test_diagonal_fim_inverts_elementwise(self):
        fim = FullFim(matrix=np.diag([2.0, 2.0, 5.0, 10.0]), alpha=1.0)
        schur = crb_from_full_fim(fim)
        assert schur.crb.crb_tau == pytest.approx(0.2)
        assert schur.crb.crb_fd == pytest.approx(0.1)

    def test_singular_fim_rejected(self):
        with pytest.raises(ValueError):
            crb_from_full_fim(FullFim(matrix=np.zeros((4, 4)), alpha=1.0))

    def test_oracle_agreement_on_random_codes(self, mats, scenario):
        rng = np.random.default_rng(11)
        for _ in range(10):
            c = random_unit(rng, 32)
            closed = crb_pair(c, mats, scenario)
            schur = crb_from_full_fim(full_fim(c, scenario, mats)).crb
            assert closed.crb_tau == pytest.approx(schur.crb_tau, rel=0.02)
            assert closed.crb_fd == pytest.approx(schur.crb_fd, rel=0.02)

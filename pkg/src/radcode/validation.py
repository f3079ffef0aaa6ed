"""Self-check battery wired to the `validate` CLI command: each check
re-derives a quantity along an independent route (finite differences,
literal permutation sums, KKT residuals, numerical quadrature) and compares
against the production path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import i0e

from .analysis import marcum_q1
from .crb import crb_from_full_fim, crb_pair, full_fim, sample_chirp
from .model import ModelMatrices, RadarScenario, default_scenario, model_matrices, steering_vector
from .objective import (
    BlockSet,
    ScalarizationParams,
    block_restriction,
    multilinear_form,
    multilinear_form_reference,
)
from .solver import _block_update_full

__all__ = ["ValidationCheck", "run_validation_battery", "marcum_q1_quadrature",
           "finite_difference_fim", "random_unit_code"]


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


def random_unit_code(rng: np.random.Generator, m: int) -> np.ndarray:
    c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return c / np.linalg.norm(c)


def marcum_q1_quadrature(a: float, b: float) -> float:
    """Defining integral of Q1, integrated adaptively with the scaled Bessel
    function to keep the integrand bounded."""
    def integrand(t):
        return t * i0e(a * t) * math.exp(-0.5 * (t - a) ** 2)
    upper = max(b, a) + 40.0
    # pure relative control: the tail values reach 1e-14, far below any
    # useful absolute floor
    value, _ = quad(integrand, b, upper, limit=500, epsabs=0.0, epsrel=1e-13)
    return value


def mean_vector(alpha: complex, nu: float, tau_offset: float, code: np.ndarray,
                scenario: RadarScenario) -> np.ndarray:
    """Mean of the fast/slow-time observation as a pulses x samples array,
    with the chirp phase evaluated on the (fixed) sample grid shifted by
    ``tau_offset``. Smooth in all four parameters, which is what the
    finite-difference route differentiates. Uses the conjugate-exponent
    Doppler convention of the analytic information matrix."""
    a = steering_vector(nu, scenario.pulses).conj()
    n = np.arange(scenario.fast_samples)
    t = n * scenario.sample_step - tau_offset
    slope = scenario.bandwidth / scenario.pulsewidth
    s = np.exp(1j * math.pi * slope * (t - scenario.pulsewidth / 2.0) ** 2)
    return alpha * np.outer(a * code, s)


def finite_difference_fim(code: np.ndarray, scenario: RadarScenario,
                          mats: ModelMatrices, alpha: complex) -> np.ndarray:
    """Central-difference Fisher matrix on the exact sampled mean.

    Steps are relative (1e-6 scaled by 1 + |parameter|); the interference
    covariance enters through its slow-time inverse only, contracted against
    the pulses x samples derivative arrays.
    """
    nu_hz = mats.doppler / scenario.pri
    theta = np.array([alpha.real, alpha.imag, 0.0, nu_hz])

    def mu_of(params: np.ndarray) -> np.ndarray:
        al = complex(params[0], params[1])
        return mean_vector(al, params[3] * scenario.pri, params[2], code, scenario)

    columns = []
    for idx in range(4):
        h = 1e-6 * (1.0 + abs(theta[idx]))
        if idx == 2:  # delay steps are on the fast-time scale
            h = 1e-6 * scenario.sample_step * scenario.fast_samples
        hi = theta.copy(); hi[idx] += h
        lo = theta.copy(); lo[idx] -= h
        columns.append((mu_of(hi) - mu_of(lo)) / (2.0 * h))
    sinv = mats.sigma_t_inv
    fim = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            contraction = np.einsum("mn,mk,kn->", columns[i].conj(), sinv, columns[j])
            fim[i, j] = 2.0 * contraction.real
    return fim


def _check_fim(scenario: RadarScenario, mats: ModelMatrices, seeds=(0, 1, 2)) -> ValidationCheck:
    worst = 0.0
    alpha = complex(math.sqrt(scenario.amplitude_power))
    for seed in seeds:
        rng = np.random.default_rng(seed)
        c = random_unit_code(rng, scenario.pulses)
        analytic = full_fim(c, scenario, mats, alpha=alpha).matrix
        numeric = finite_difference_fim(c, scenario, mats, alpha)
        worst = max(worst, float(np.abs(analytic - numeric).max() / np.abs(analytic).max()))
    return ValidationCheck("fim_finite_difference", worst <= 1e-4,
                           f"max relative error {worst:.3e} (tol 1e-4)")


def _check_crb_consistency(scenario: RadarScenario, mats: ModelMatrices,
                           n_codes: int = 10) -> ValidationCheck:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(n_codes):
        c = random_unit_code(rng, scenario.pulses)
        closed = crb_pair(c, mats, scenario)
        schur = crb_from_full_fim(full_fim(c, scenario, mats)).crb
        worst = max(worst,
                    abs(closed.crb_tau - schur.crb_tau) / schur.crb_tau,
                    abs(closed.crb_fd - schur.crb_fd) / schur.crb_fd)
    return ValidationCheck("crb_closed_form_vs_fim", worst <= 0.02,
                           f"max relative gap {worst:.3e} (tol 2e-2)")


def _check_multilinear(mats: ModelMatrices, n_draws: int = 30) -> ValidationCheck:
    rng = np.random.default_rng(11)
    params = ScalarizationParams(beta=0.3, zeta=1.0).resolve(mats)
    m = mats.m0.shape[0]
    worst = 0.0
    for _ in range(n_draws):
        blocks = BlockSet(*[random_unit_code(rng, m) for _ in range(4)])
        fast = multilinear_form(blocks, params, mats)
        slow = multilinear_form_reference(blocks, params, mats)
        worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300))
    return ValidationCheck("multilinear_vs_permutation_sum", worst <= 1e-10,
                           f"max relative error {worst:.3e} (tol 1e-10)")


def _check_restriction(mats: ModelMatrices, n_probes: int = 20) -> ValidationCheck:
    rng = np.random.default_rng(13)
    params = ScalarizationParams(beta=0.2, zeta=0.8).resolve(mats)
    m = mats.m0.shape[0]
    blocks = BlockSet(*[random_unit_code(rng, m) for _ in range(4)])
    worst = 0.0
    for p in (1, 2, 3, 4):
        restriction = block_restriction(blocks, p, params, mats)
        for _ in range(n_probes):
            x = random_unit_code(rng, m)
            arrays = blocks.arrays()
            arrays[p - 1] = x
            direct = multilinear_form(BlockSet(*arrays), params, mats)
            affine = float(np.real(np.vdot(restriction.d_vec, x))) + restriction.d_scalar
            worst = max(worst, abs(direct - affine) / max(abs(direct), 1e-300))
    return ValidationCheck("block_restriction_affine_model", worst <= 1e-9,
                           f"max relative error {worst:.3e} (tol 1e-9)")


def _check_kkt(mats: ModelMatrices, n_instances: int = 200) -> ValidationCheck:
    rng = np.random.default_rng(17)
    m = mats.m0.shape[0]
    worst = 0.0
    for _ in range(n_instances):
        c0 = random_unit_code(rng, m)
        d = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * rng.lognormal()
        zeta = rng.uniform(0.05, 2.0)
        c, lam1, lam2, _ = _block_update_full(d, c0, zeta)
        stationarity = np.linalg.norm(d - 2.0 * lam1 * c + 2.0 * lam2 * c0)
        slack = abs(lam2 * (2.0 * np.real(np.vdot(c0, c)) - 2.0 + zeta))
        scale = max(1.0, float(np.linalg.norm(d)))
        worst = max(worst, stationarity / scale, slack / scale,
                    -min(lam1, lam2, 0.0))
    return ValidationCheck("block_update_kkt_residuals", worst <= 1e-8,
                           f"max residual {worst:.3e} (tol 1e-8)")


def _check_marcum(grid: int = 12) -> ValidationCheck:
    worst = 0.0
    for a in np.linspace(0.0, 8.0, grid):
        for b in np.linspace(0.05, 8.0, grid):
            fast = marcum_q1(float(a), float(b))
            ref = marcum_q1_quadrature(float(a), float(b))
            worst = max(worst, abs(fast - ref) / max(ref, 1e-14))
    return ValidationCheck("marcum_q1_vs_quadrature", worst <= 1e-10,
                           f"max relative error {worst:.3e} (tol 1e-10)")


def run_validation_battery(scenario: RadarScenario | None = None) -> list[ValidationCheck]:
    """Run every oracle cross-check on the given (default) scenario."""
    scenario = scenario or default_scenario()
    mats = model_matrices(scenario)
    return [
        _check_fim(scenario, mats),
        _check_crb_consistency(scenario, mats),
        _check_multilinear(mats),
        _check_restriction(mats),
        _check_kkt(mats),
        _check_marcum(),
    ]

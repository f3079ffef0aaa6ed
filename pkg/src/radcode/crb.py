"""Delay-Doppler estimation bounds: closed-form CRB entries and an
independent full Fisher-matrix route used to cross-validate them.

The closed forms treat the fast-time chirp through two approximations that
are exact in the continuous limit: the sampled chirp energy equals the
number of samples, and the chirp is orthogonal to its time derivative. The
full-FIM route keeps the exact sampled values, so the two agree only to the
size of those residuals (about 2% at 100 samples per pulse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CodeVector, ModelMatrices, RadarScenario, as_array, steering_vector

__all__ = [
    "CrbPair",
    "ChirpSamples",
    "FullFim",
    "SchurComplementCrb",
    "DegenerateCodeError",
    "crb_pair",
    "sample_chirp",
    "full_fim",
    "crb_from_full_fim",
]


class DegenerateCodeError(ValueError):
    """The code carries no usable Doppler information (singular bound)."""


@dataclass(frozen=True)
class CrbPair:
    """Diagonal delay/Doppler estimation bounds and their product."""

    crb_tau: float   # seconds^2
    crb_fd: float    # Hz^2
    det: float       # seconds^2 * Hz^2


@dataclass(frozen=True)
class ChirpSamples:
    """Sampled baseband chirp and its analytic time derivative."""

    s: np.ndarray
    s_dot: np.ndarray


@dataclass(frozen=True)
class FullFim:
    """4x4 Fisher information over (Re alpha, Im alpha, tau, f_d)."""

    matrix: np.ndarray
    alpha: complex


@dataclass(frozen=True)
class SchurComplementCrb:
    """Delay-Doppler CRB obtained by eliminating the amplitude nuisance block."""

    crb: CrbPair
    crb_matrix: np.ndarray    # 2x2 bound
    info_matrix: np.ndarray   # 2x2 Schur-complemented information


def _quads(c: np.ndarray, mats: ModelMatrices) -> tuple[float, complex, float]:
    q0 = float(np.real(np.vdot(c, mats.m0 @ c)))
    q1 = complex(np.vdot(c, mats.m1 @ c))
    q2 = float(np.real(np.vdot(c, mats.m2 @ c)))
    return q0, q1, q2


def crb_pair(code, mats: ModelMatrices, scenario: RadarScenario) -> CrbPair:
    """Closed-form delay/Doppler CRB entries for a given code.

    crb_tau = 3 / (2 |alpha|^2 N pi^2 B^2 q0),
    crb_fd  = q0 / (2 |alpha|^2 N (q0 q2 - |q1|^2)),
    with q_i the M_i quadratic forms of the code. Raises DegenerateCodeError
    when the Doppler curvature denominator is numerically singular (for
    example all code energy on the first pulse).
    """
    c = as_array(code)
    q0, q1, q2 = _quads(c, mats)
    if q0 <= 0.0:
        raise DegenerateCodeError("code has no output SINR under this interference")
    den = q0 * q2 - abs(q1) ** 2
    b_max_sq = float(np.abs(mats.b).max() ** 2)
    floor = 1e-12 * q0 * b_max_sq * float(np.linalg.norm(mats.m0, 2))
    if den <= floor:
        raise DegenerateCodeError(
            "Doppler information is degenerate for this code (singular CRB)")
    scale = 2.0 * scenario.amplitude_power * scenario.fast_samples
    crb_tau = 3.0 / (scale * math.pi ** 2 * scenario.bandwidth ** 2 * q0)
    crb_fd = q0 / (scale * den)
    return CrbPair(crb_tau=crb_tau, crb_fd=crb_fd, det=crb_tau * crb_fd)


def sample_chirp(scenario: RadarScenario) -> ChirpSamples:
    """Sample the unit-modulus linear chirp and its time derivative on the
    fast-time grid t = n * sample_step, n = 0..N-1."""
    n = np.arange(scenario.fast_samples)
    t = n * scenario.sample_step
    slope = scenario.bandwidth / scenario.pulsewidth
    centered = t - scenario.pulsewidth / 2.0
    s = np.exp(1j * math.pi * slope * centered ** 2)
    s_dot = 2j * math.pi * slope * centered * s
    return ChirpSamples(s=s, s_dot=s_dot)


def full_fim(code, scenario: RadarScenario, mats: ModelMatrices,
             alpha: complex | None = None) -> FullFim:
    """Assemble the exact 4x4 Fisher matrix for (Re alpha, Im alpha, tau, f_d).

    The mean is a Kronecker product of a slow-time vector and a fast-time
    chirp, and the interference covariance is block-diagonal across fast
    time, so every entry reduces to a product of one slow-time quadratic
    form and one of the three fast-time scalars ||s||^2, ||s_dot||^2,
    s_dot^H s. Nothing of size pulses*fast_samples is ever formed.
    """
    c = as_array(code)
    if alpha is None:
        alpha = complex(math.sqrt(scenario.amplitude_power))
    chirp = sample_chirp(scenario)
    # The estimation model applies the conjugate Doppler exponent, which is
    # the convention under which the information matrix contracts exactly to
    # the m0/m1/m2 kernels (the two conventions swap the code with its
    # conjugate; real quadratic forms are unaffected).
    a = steering_vector(mats.doppler, scenario.pulses).conj()
    u = a * c
    ub = u * mats.b.conj()

    # Derivative columns of the mean, factored as (slow, fast, coefficient):
    # d/dRe(alpha), d/dIm(alpha), d/dtau (sample shift flips the sign of the
    # time derivative), d/df_d.
    cols = (
        (u, chirp.s, 1.0 + 0.0j),
        (u, chirp.s, 1.0j),
        (u, chirp.s_dot, -alpha),
        (ub, chirp.s, alpha),
    )
    sinv = mats.sigma_t_inv
    fim = np.empty((4, 4))
    for i, (si, fi, ki) in enumerate(cols):
        for j, (sj, fj, kj) in enumerate(cols):
            if j < i:
                fim[i, j] = fim[j, i]
                continue
            slow = complex(np.vdot(si, sinv @ sj))
            fast = complex(np.vdot(fi, fj))
            fim[i, j] = 2.0 * (np.conj(ki) * kj * slow * fast).real
    return FullFim(matrix=fim, alpha=alpha)


def crb_from_full_fim(fim: FullFim) -> SchurComplementCrb:
    """Invert the delay-Doppler block after eliminating the amplitude block."""
    m = fim.matrix
    i_aa = m[:2, :2]
    j_block = m[2:, :2]
    i_tf = m[2:, 2:]
    try:
        info = i_tf - j_block @ np.linalg.solve(i_aa, j_block.T)
        crb_matrix = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Fisher matrix is singular") from exc
    pair = CrbPair(crb_tau=float(crb_matrix[0, 0]),
                   crb_fd=float(crb_matrix[1, 1]),
                   det=float(np.linalg.det(crb_matrix)))
    return SchurComplementCrb(crb=pair, crb_matrix=crb_matrix, info_matrix=info)
